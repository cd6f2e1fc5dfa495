#pragma once

#include <complex>
#include <cstdio>
#include <fstream>
#include <optional>
#include <vector>

#include "magloc/field.hpp"
#include "magloc/parallel.hpp"

namespace magloc {

// Discrete H(A) = (-i grad - A)^2 (+ V) with Dirichlet rim, as a sparse
// complex matrix over interior nodes.  Each link p->q carries the Peierls
// phase theta_pq = A(midpoint).(q-p), so the off-diagonal entries are
// -(1/h^2) e^{-i theta} and conjugate symmetry holds bit for bit.
struct HermitianOperator {
  Grid grid;
  double h = 0;
  int dim = 0;
  std::vector<int> row_ptr, col;
  std::vector<cdouble> val;

  cdouble entry(int p, int q) const {
    for (int k = row_ptr[p]; k < row_ptr[p + 1]; ++k)
      if (col[k] == q) return val[k];
    return {};
  }

  void apply(const cdouble* x, cdouble* y) const {
    for (int p = 0; p < dim; ++p) {
      cdouble s = 0;
      for (int k = row_ptr[p]; k < row_ptr[p + 1]; ++k) s += val[k] * x[col[k]];
      y[p] = s;
    }
  }

  // Row-partitioned apply; writes are disjoint, so results match the serial
  // path bitwise for any thread count.
  void apply_rows(const cdouble* x, cdouble* y, int p0, int p1) const {
    for (int p = p0; p < p1; ++p) {
      cdouble s = 0;
      for (int k = row_ptr[p]; k < row_ptr[p + 1]; ++k) s += val[k] * x[col[k]];
      y[p] = s;
    }
  }

  void apply(const std::vector<cdouble>& x, std::vector<cdouble>& y) const {
    if ((int)x.size() != dim) throw config_error("apply: length mismatch");
    y.resize(dim);
    apply(x.data(), y.data());
  }

  double gershgorin_upper() const {
    double m = 0;
    for (int p = 0; p < dim; ++p) {
      double s = 0;
      for (int k = row_ptr[p]; k < row_ptr[p + 1]; ++k)
        s += (col[k] == p) ? val[k].real() : std::abs(val[k]);
      m = std::max(m, s);
    }
    return m;
  }

  // Matrix Market, coordinate complex hermitian, lower triangle, 1-based.
  void write_matrix_market(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw config_error("cannot open " + path);
    out << "%%MatrixMarket matrix coordinate complex hermitian\n";
    size_t nnz_lower = 0;
    for (int p = 0; p < dim; ++p)
      for (int k = row_ptr[p]; k < row_ptr[p + 1]; ++k)
        if (col[k] <= p) ++nnz_lower;
    out << dim << " " << dim << " " << nnz_lower << "\n";
    char buf[128];
    for (int p = 0; p < dim; ++p)
      for (int k = row_ptr[p]; k < row_ptr[p + 1]; ++k)
        if (col[k] <= p) {
          std::snprintf(buf, sizeof buf, "%d %d %.17g %.17g\n", p + 1,
                        col[k] + 1, val[k].real(), val[k].imag());
          out << buf;
        }
  }
};

namespace detail {

// Assembles from per-link phases.  link_phase(xm, ym, dx, dy) returns
// A(xm, ym) . (dx, dy) for the directed link through midpoint (xm, ym).
template <class LinkPhase>
HermitianOperator assemble_impl(const Grid& g, LinkPhase&& link_phase,
                                const ScalarField* V) {
  if (V && V->grid.node_count() != g.node_count())
    throw config_error("assemble: potential grid mismatch");
  HermitianOperator op;
  op.grid = g;
  op.h = g.h;
  op.dim = g.interior_count();
  const double ih2 = 1.0 / (g.h * g.h);
  const int mx = g.nx - 2;

  // phases on horizontal links (i,j)->(i+1,j) and vertical (i,j)->(i,j+1),
  // evaluated once per undirected link
  std::vector<cdouble> hop_e(g.node_count()), hop_n(g.node_count());
  for (int j = 1; j < g.ny - 1; ++j)
    for (int i = 1; i < g.nx - 1; ++i) {
      int p = g.node_index(i, j);
      if (i < g.nx - 2) {
        double th = link_phase(g.x(i) + 0.5 * g.h, g.y(j), g.h, 0.0);
        hop_e[p] = cdouble(std::cos(th), -std::sin(th)) * -ih2;
      }
      if (j < g.ny - 2) {
        double th = link_phase(g.x(i), g.y(j) + 0.5 * g.h, 0.0, g.h);
        hop_n[p] = cdouble(std::cos(th), -std::sin(th)) * -ih2;
      }
    }

  op.row_ptr.assign(op.dim + 1, 0);
  std::vector<std::pair<int, cdouble>> row;
  row.reserve(5);
  op.col.reserve((size_t)op.dim * 5);
  op.val.reserve((size_t)op.dim * 5);
  for (int q = 0; q < op.dim; ++q) {
    int i = q % mx + 1, j = q / mx + 1;
    int p = g.node_index(i, j);
    row.clear();
    double diag = 4.0 * ih2;
    if (V) {
      double vv = V->values[p];
      if (vv < 0) throw config_error("assemble: potential must be nonnegative");
      diag += vv;
    }
    if (j > 1) row.emplace_back(q - mx, std::conj(hop_n[p - g.nx]));
    if (i > 1) row.emplace_back(q - 1, std::conj(hop_e[p - 1]));
    row.emplace_back(q, cdouble(diag, 0.0));
    if (i < g.nx - 2) row.emplace_back(q + 1, hop_e[p]);
    if (j < g.ny - 2) row.emplace_back(q + mx, hop_n[p]);
    for (auto& [c, v] : row) {
      op.col.push_back(c);
      op.val.push_back(v);
    }
    op.row_ptr[q + 1] = (int)op.col.size();
  }
  return op;
}

}  // namespace detail

// Link phases from the analytic field, evaluated at link midpoints.
template <class FieldFn>
HermitianOperator assemble_fn(const Grid& g, FieldFn&& field,
                              const ScalarField* V = nullptr) {
  return detail::assemble_impl(
      g,
      [&field](double xm, double ym, double dx, double dy) {
        auto [ax, ay] = field(xm, ym);
        return ax * dx + ay * dy;
      },
      V);
}

// Link phases from node samples: midpoint value by endpoint average.
inline HermitianOperator assemble(const Grid& g, const VectorField2& a,
                                  const ScalarField* V = nullptr) {
  if (a.grid.node_count() != g.node_count())
    throw config_error("assemble: field grid mismatch");
  return detail::assemble_impl(
      g,
      [&](double xm, double ym, double dx, double dy) {
        // endpoints of the link
        double x0 = xm - 0.5 * dx, y0 = ym - 0.5 * dy;
        int i0 = (int)std::lround((x0 - g.xmin) / g.h);
        int j0 = (int)std::lround((y0 - g.ymin) / g.h);
        int p = g.node_index(i0, j0);
        int q = g.node_index(i0 + (dx != 0.0 ? 1 : 0), j0 + (dy != 0.0 ? 1 : 0));
        double ax = 0.5 * (a.ax[p] + a.ax[q]);
        double ay = 0.5 * (a.ay[p] + a.ay[q]);
        return ax * dx + ay * dy;
      },
      V);
}

inline HermitianOperator assemble(const Grid& g, const FieldExpression& fx,
                                  const FieldExpression& fy,
                                  const ScalarField* V = nullptr) {
  return assemble_fn(
      g,
      [&](double x, double y) {
        return std::pair<double, double>(fx.eval(x, y), fy.eval(x, y));
      },
      V);
}

}  // namespace magloc
