#pragma once

#include <array>

#include "magloc/poisson.hpp"

namespace magloc {

struct HelmholtzDiagnostics {
  double div_residual_inf = 0;   // ||div f||_inf
  double fn_residual_inf = 0;    // max |f.n| over boundary nodes
  double recon_residual_inf = 0; // ||a - grad(phi) - f||_inf
  double div_a_inf = 0;
  CgStats cg;
};

struct HelmholtzParts {
  ScalarField phi;
  VectorField2 f;
  HelmholtzDiagnostics diag;
};

namespace detail {

// Joint least squares for a = grad(phi) + rot(psi): unknowns are phi on all
// nodes (mean pinned to zero) and psi on interior nodes (zero rim, which
// enforces f.n = 0).  The normal equations are SPD, solved by CG.
class HelmholtzSystem {
 public:
  explicit HelmholtzSystem(const Grid& g)
      : g_(g), N_(g.node_count()), M_(g.interior_count()),
        fx_(N_), fy_(N_), tx_(N_), ty_(N_), full_(N_) {}

  int size() const { return N_ + M_; }

  void apply(const double* u, double* out) {
    forward(u, fx_.data(), fy_.data());
    adjoint(fx_.data(), fy_.data(), out);
    project_phi_mean(out);
  }

  void rhs(const VectorField2& a, std::vector<double>& b) {
    b.assign(size(), 0.0);
    adjoint(a.ax.data(), a.ay.data(), b.data());
    project_phi_mean(b.data());
  }

  // u = (phi, psi) -> (fx, fy) = grad(phi) + rot(psi)
  void forward(const double* u, double* fx, double* fy) {
    ddx(g_, u, fx);
    ddy(g_, u, fy);
    expand_psi(u + N_, full_.data());
    ddy(g_, full_.data(), tx_.data());
    for (int p = 0; p < N_; ++p) fx[p] -= tx_[p];
    ddx(g_, full_.data(), tx_.data());
    for (int p = 0; p < N_; ++p) fy[p] += tx_[p];
  }

  void expand_psi(const double* psi, double* full) const {
    for (int p = 0; p < N_; ++p) full[p] = 0.0;
    const int mx = g_.nx - 2;
    for (int q = 0; q < M_; ++q) {
      int i = q % mx + 1, j = q / mx + 1;
      full[j * g_.nx + i] = psi[q];
    }
  }

  void project_phi_mean(double* u) const {
    double mean = 0;
    for (int p = 0; p < N_; ++p) mean += u[p];
    mean /= N_;
    for (int p = 0; p < N_; ++p) u[p] -= mean;
  }

 private:
  // (fx, fy) -> [ddx^T fx + ddy^T fy ; restrict(ddx^T fy - ddy^T fx)]
  void adjoint(const double* fx, const double* fy, double* out) {
    ddx_t(g_, fx, tx_.data());
    ddy_t(g_, fy, ty_.data());
    for (int p = 0; p < N_; ++p) out[p] = tx_[p] + ty_[p];
    ddx_t(g_, fy, tx_.data());
    ddy_t(g_, fx, ty_.data());
    const int mx = g_.nx - 2;
    for (int q = 0; q < M_; ++q) {
      int i = q % mx + 1, j = q / mx + 1;
      int p = j * g_.nx + i;
      out[N_ + q] = tx_[p] - ty_[p];
    }
  }

  Grid g_;
  int N_, M_;
  std::vector<double> fx_, fy_, tx_, ty_, full_;
};

}  // namespace detail

// Splits a into a gradient part grad(phi) and a discretely divergence-free
// part f with f.n = 0 on the rim.  The pair (phi, psi) minimises
// ||a - grad(phi) - rot(psi)||, so feeding f back in returns it unchanged and
// exact discrete gradients come back with f = 0.
inline HelmholtzParts helmholtz_decompose(const VectorField2& a, double tol,
                                          int max_iter = 200000,
                                          double cg_rel_tol = 1e-12) {
  if (!a.all_finite()) throw numeric_error("helmholtz_decompose: non-finite input");
  const Grid& g = a.grid;
  detail::HelmholtzSystem sys(g);
  std::vector<double> b, u(sys.size(), 0.0);
  sys.rhs(a, b);
  auto st = conjugate_gradient(
      sys.size(), [&](const double* in, double* out) { sys.apply(in, out); },
      b, u, cg_rel_tol, max_iter);
  if (!st.converged)
    throw numeric_error("helmholtz_decompose: CG stalled at residual " +
                        std::to_string(st.relative_residual));

  HelmholtzParts parts;
  parts.phi = ScalarField(g);
  sys.project_phi_mean(u.data());
  for (int p = 0; p < g.node_count(); ++p) parts.phi.values[p] = u[p];

  ScalarField psi(g);
  sys.expand_psi(u.data() + g.node_count(), psi.values.data());
  parts.f = rot_gradient(psi);

  auto& d = parts.diag;
  d.cg = st;
  d.div_residual_inf = divergence(parts.f).max_abs();
  d.div_a_inf = divergence(a).max_abs();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (!g.is_boundary(i, j)) continue;
      int p = g.node_index(i, j);
      double fn = 0;
      if (i == 0 || i == g.nx - 1) fn = std::max(fn, std::abs(parts.f.ax[p]));
      if (j == 0 || j == g.ny - 1) fn = std::max(fn, std::abs(parts.f.ay[p]));
      d.fn_residual_inf = std::max(d.fn_residual_inf, fn);
    }
  VectorField2 gp = gradient(parts.phi);
  for (int p = 0; p < g.node_count(); ++p) {
    double rx = a.ax[p] - gp.ax[p] - parts.f.ax[p];
    double ry = a.ay[p] - gp.ay[p] - parts.f.ay[p];
    d.recon_residual_inf = std::max(d.recon_residual_inf, std::hypot(rx, ry));
  }
  double allowed = tol * (1.0 + d.div_a_inf);
  if (d.div_residual_inf > allowed)
    throw numeric_error("helmholtz_decompose: divergence residual " +
                        std::to_string(d.div_residual_inf) + " exceeds " +
                        std::to_string(allowed));
  return parts;
}

struct FieldLinearization {
  VectorField2 a1, a2, anonlin;
  double curl_at_x0 = 0;
  std::array<double, 4> jacobian{};  // [axx axy; ayx ayy]
};

// Splits a about x0 into the symmetric linear part a1 (a gradient), the
// solenoidal rotation a2 = (curl/2) R (x-x0), and the remainder.
inline FieldLinearization linearize_field(const VectorField2& a, double x0,
                                          double y0) {
  const Grid& g = a.grid;
  if (!g.inside(x0, y0))
    throw config_error("linearize_field: x0 must lie strictly inside the domain");
  int i0 = std::clamp((int)std::lround((x0 - g.xmin) / g.h), 1, g.nx - 2);
  int j0 = std::clamp((int)std::lround((y0 - g.ymin) / g.h), 1, g.ny - 2);
  int p = g.node_index(i0, j0);
  const double inv2h = 1.0 / (2.0 * g.h);
  double axx = (a.ax[p + 1] - a.ax[p - 1]) * inv2h;
  double axy = (a.ax[p + g.nx] - a.ax[p - g.nx]) * inv2h;
  double ayx = (a.ay[p + 1] - a.ay[p - 1]) * inv2h;
  double ayy = (a.ay[p + g.nx] - a.ay[p - g.nx]) * inv2h;
  double curl0 = ayx - axy;
  auto [a0x, a0y] = a.interp(x0, y0);
  double sxx = axx, sxy = 0.5 * (axy + ayx), syy = ayy;

  FieldLinearization lin;
  lin.curl_at_x0 = curl0;
  lin.jacobian = {axx, axy, ayx, ayy};
  lin.a1 = VectorField2(g);
  lin.a2 = VectorField2(g);
  lin.anonlin = VectorField2(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      int q = g.node_index(i, j);
      double dx = g.x(i) - x0, dy = g.y(j) - y0;
      lin.a1.ax[q] = a0x + sxx * dx + sxy * dy;
      lin.a1.ay[q] = a0y + sxy * dx + syy * dy;
      lin.a2.ax[q] = 0.5 * curl0 * (-dy);
      lin.a2.ay[q] = 0.5 * curl0 * dx;
      lin.anonlin.ax[q] = a.ax[q] - lin.a1.ax[q] - lin.a2.ax[q];
      lin.anonlin.ay[q] = a.ay[q] - lin.a1.ay[q] - lin.a2.ay[q];
    }
  return lin;
}

}  // namespace magloc
