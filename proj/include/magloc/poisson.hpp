#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "magloc/calculus.hpp"

namespace magloc {

struct CgStats {
  int iterations = 0;
  double relative_residual = 0;
  bool converged = false;
};

// Plain conjugate gradients on a matrix-free SPD operator.
template <class ApplyFn>
inline CgStats conjugate_gradient(int n, ApplyFn&& apply_op,
                                  const std::vector<double>& b,
                                  std::vector<double>& x, double rel_tol,
                                  int max_iter) {
  std::vector<double> r(b), p(n), ap(n);
  std::fill(x.begin(), x.end(), 0.0);
  double bnorm2 = 0;
  for (double v : b) bnorm2 += v * v;
  CgStats st;
  if (bnorm2 == 0) {
    st.converged = true;
    return st;
  }
  p = r;
  double rr = bnorm2;
  for (int it = 0; it < max_iter; ++it) {
    apply_op(p.data(), ap.data());
    double pap = 0;
    for (int i = 0; i < n; ++i) pap += p[i] * ap[i];
    double alpha = rr / pap;
    for (int i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    double rr_new = 0;
    for (int i = 0; i < n; ++i) rr_new += r[i] * r[i];
    st.iterations = it + 1;
    st.relative_residual = std::sqrt(rr_new / bnorm2);
    if (st.relative_residual <= rel_tol) {
      st.converged = true;
      return st;
    }
    double beta = rr_new / rr;
    rr = rr_new;
    for (int i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
  }
  return st;
}

// 5-point -Laplace on interior unknowns, homogeneous Dirichlet rim.
inline void apply_dirichlet_laplacian(const Grid& g, const double* u,
                                      double* out) {
  const int mx = g.nx - 2, my = g.ny - 2;
  const double ih2 = 1.0 / (g.h * g.h);
  for (int j = 0; j < my; ++j)
    for (int i = 0; i < mx; ++i) {
      int p = j * mx + i;
      double s = 4.0 * u[p];
      if (i > 0) s -= u[p - 1];
      if (i < mx - 1) s -= u[p + 1];
      if (j > 0) s -= u[p - mx];
      if (j < my - 1) s -= u[p + mx];
      out[p] = s * ih2;
    }
}

// Solves -Lap u = rhs (interior unknowns) with u = 0 on the rim; returns the
// full-grid field with zero boundary values.
inline ScalarField solve_dirichlet_poisson(const Grid& g,
                                           const std::vector<double>& rhs,
                                           double rel_tol = 1e-10,
                                           int max_iter = 100000,
                                           CgStats* stats = nullptr) {
  int n = g.interior_count();
  std::vector<double> u(n, 0.0);
  auto st = conjugate_gradient(
      n, [&](const double* in, double* out) { apply_dirichlet_laplacian(g, in, out); },
      rhs, u, rel_tol, max_iter);
  if (!st.converged)
    throw numeric_error("dirichlet poisson: CG stalled at residual " +
                        std::to_string(st.relative_residual));
  if (stats) *stats = st;
  ScalarField f(g);
  for (int p = 0; p < n; ++p) {
    int i, j;
    g.interior_coords(p, i, j);
    f.at(i, j) = u[p];
  }
  return f;
}

}  // namespace magloc
