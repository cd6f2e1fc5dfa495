#pragma once

#include "magloc/poisson.hpp"
#include "magloc/theorem.hpp"

namespace magloc {

// Torsion function: -Lap v = 1, Dirichlet.
inline ScalarField torsion(const Grid& g, double rel_tol = 1e-10,
                           CgStats* stats = nullptr) {
  std::vector<double> rhs(g.interior_count(), 1.0);
  return solve_dirichlet_poisson(g, rhs, rel_tol, 200000, stats);
}

struct LandscapeReport {
  ScalarField v;
  std::vector<double> ratios;   // per pair: max |psi| / (lambda ||psi||inf v)
  std::vector<double> lambdas;
  bool pass = false;
  double tolerance = 1e-6;
};

// |psi(x)| <= lambda ||psi||inf v(x) on interior nodes.
inline LandscapeReport landscape_check(const std::vector<EigenPair>& pairs,
                                       const ScalarField& v) {
  const Grid& g = v.grid;
  LandscapeReport rep;
  rep.v = v;
  for (const auto& pr : pairs) {
    double psi_inf = 0;
    for (const auto& z : pr.psi) psi_inf = std::max(psi_inf, std::abs(z));
    double worst = 0;
    for (int q = 0; q < g.interior_count(); ++q) {
      int i, j;
      g.interior_coords(q, i, j);
      double bound = pr.lambda * psi_inf * v.at(i, j);
      if (bound > 0) worst = std::max(worst, std::abs(pr.psi[q]) / bound);
    }
    rep.ratios.push_back(worst);
    rep.lambdas.push_back(pr.lambda);
  }
  rep.pass = true;
  for (double r : rep.ratios)
    if (!(r <= 1.0 + rep.tolerance)) rep.pass = false;
  return rep;
}

struct HeatKernelRow {
  ScalarField row;          // y -> p_t(x, y), truncated eigenexpansion
  double truncation_bound = 0;
  int clipped_nodes = 0;
  double x = 0, y = 0;
};

// Truncated Dirichlet heat kernel row from A=0 eigenpairs.
inline HeatKernelRow heat_kernel_row(const std::vector<EigenPair>& dpairs,
                                     const Grid& g, double t, double x,
                                     double y) {
  if (!(t > 0)) throw config_error("heat_kernel_row: t must be > 0");
  if (dpairs.empty()) throw config_error("heat_kernel_row: need eigenpairs");
  HeatKernelRow out;
  out.x = x;
  out.y = y;
  out.row = ScalarField(g);
  // snap x to the nearest interior node
  int i0 = std::clamp((int)std::lround((x - g.xmin) / g.h), 1, g.nx - 2);
  int j0 = std::clamp((int)std::lround((y - g.ymin) / g.h), 1, g.ny - 2);
  int q0 = g.interior_index(i0, j0);
  double phi_sum_sq = 0;
  for (const auto& pr : dpairs) {
    cdouble phix = std::conj(pr.psi[q0]);
    double w = std::exp(-pr.lambda * t);
    phi_sum_sq += std::norm(pr.psi[q0]);
    for (int q = 0; q < g.interior_count(); ++q) {
      int i, j;
      g.interior_coords(q, i, j);
      out.row.at(i, j) += w * (phix * pr.psi[q]).real();
    }
  }
  for (double& vv : out.row.values)
    if (vv < 0) {
      vv = 0;
      ++out.clipped_nodes;
    }
  double lamK = dpairs.back().lambda;
  double h2 = g.h * g.h;
  double complement = std::max(1.0 / h2 - phi_sum_sq, 0.0);
  out.truncation_bound =
      std::exp(-lamK * t) * std::sqrt(complement) * (1.0 / g.h);
  return out;
}

// Partial eigensum S_K(x) = sum_k phi_k(x) <phi_k, 1> / lambda_k, the
// truncation of the torsion identity.
inline ScalarField eigensum_torsion(const std::vector<EigenPair>& dpairs,
                                    const Grid& g) {
  ScalarField s(g);
  const double h2 = g.h * g.h;
  for (const auto& pr : dpairs) {
    cdouble inner = 0;
    for (const auto& z : pr.psi) inner += z;
    inner *= h2;  // <phi, 1> up to conjugation
    for (int q = 0; q < g.interior_count(); ++q) {
      int i, j;
      g.interior_coords(q, i, j);
      s.at(i, j) += (std::conj(inner) * pr.psi[q]).real() / pr.lambda;
    }
  }
  return s;
}

// Exact discrete remainder v - S_K: solves -Lap R = 1 - P_K 1.
inline ScalarField torsion_eigensum_remainder(
    const std::vector<EigenPair>& dpairs, const Grid& g,
    double rel_tol = 1e-10) {
  const double h2 = g.h * g.h;
  std::vector<double> rhs(g.interior_count(), 1.0);
  for (const auto& pr : dpairs) {
    cdouble inner = 0;
    for (const auto& z : pr.psi) inner += z;
    inner *= h2;
    for (int q = 0; q < g.interior_count(); ++q)
      rhs[q] -= (std::conj(inner) * pr.psi[q]).real();
  }
  auto R = solve_dirichlet_poisson(g, rhs, rel_tol, 200000);
  return R;
}

struct ImprovedBoundResult {
  double x = 0, y = 0;
  double lambda = 0;
  double psi_inf = 0;
  double v_at_x = 0;
  double original = 0;  // lambda ||psi||inf v(x)
  double improved = 0;  // lambda ||psi||inf sqrt(min(I, v)) sqrt(v)
  double integral_estimate = 0;  // I before clamping
  double budget = 0;
  double head = 0, tail = 0, mc_budget = 0, trunc_budget = 0;
  int t_nodes = 0;
  int zero_survivor_cells = 0;
};

// Corollary-style refinement factor sqrt( Int |E|^2 p_t dy dt ) sqrt(v(x)).
// The time integral is estimated on [t_split, T_max] with log-spaced nodes;
// [0, t_split] is bounded by t_split (since Int p_t dy <= 1) and the tail
// beyond T_max by the eigenexpansion with |E| <= 1.
template <class FieldFn>
inline ImprovedBoundResult improved_landscape_bound(
    double x, double y, const EigenPair& magnetic_pair, FieldFn&& field,
    const std::vector<EigenPair>& dpairs, const Grid& dgrid,
    const ScalarField& v, const McParams& mc, int coarse_cells = 9,
    int time_nodes = 24) {
  if (dpairs.empty()) throw config_error("improved_landscape_bound: need pairs");
  ImprovedBoundResult res;
  // snap the probe to the nearest interior node of the heat-kernel grid
  int i0 = std::clamp((int)std::lround((x - dgrid.xmin) / dgrid.h), 1,
                      dgrid.nx - 2);
  int j0 = std::clamp((int)std::lround((y - dgrid.ymin) / dgrid.h), 1,
                      dgrid.ny - 2);
  res.x = dgrid.x(i0);
  res.y = dgrid.y(j0);
  res.lambda = magnetic_pair.lambda;
  for (const auto& z : magnetic_pair.psi)
    res.psi_inf = std::max(res.psi_inf, std::abs(z));
  res.v_at_x = v.at(i0, j0);
  res.original = res.lambda * res.psi_inf * res.v_at_x;

  const double lam1 = dpairs.front().lambda;
  const double lamK = dpairs.back().lambda;
  const double t_max = 8.0 / lam1;
  const double t_split = std::max(dgrid.h * dgrid.h, 12.0 / lamK);
  res.head = t_split;
  res.t_nodes = time_nodes;

  // coarse cells over the domain
  const int mcell = coarse_cells;
  const double cw = (dgrid.xmax - dgrid.xmin) / mcell;
  const double ch = (dgrid.ymax - dgrid.ymin) / mcell;
  struct Cell {
    double cx, cy;
  };
  std::vector<Cell> cells;
  for (int cj = 0; cj < mcell; ++cj)
    for (int ci = 0; ci < mcell; ++ci)
      cells.push_back({dgrid.xmin + (ci + 0.5) * cw,
                       dgrid.ymin + (cj + 0.5) * ch});

  // node -> cell map for per-cell integrals of the kernel row
  const int Nint = dgrid.interior_count();
  std::vector<int> cell_of(Nint);
  for (int q = 0; q < Nint; ++q) {
    int i, j;
    dgrid.interior_coords(q, i, j);
    int ci = std::min((int)((dgrid.x(i) - dgrid.xmin) / cw), mcell - 1);
    int cj = std::min((int)((dgrid.y(j) - dgrid.ymin) / ch), mcell - 1);
    cell_of[q] = cj * mcell + ci;
  }

  std::vector<double> ts(time_nodes);
  for (int it = 0; it < time_nodes; ++it)
    ts[it] = t_split * std::pow(t_max / t_split, it / (double)(time_nodes - 1));

  const double h2 = dgrid.h * dgrid.h;
  std::vector<double> integrand(time_nodes, 0.0), err_t(time_nodes, 0.0);

  // |E|^2 per (t, cell) by MC, p_t mass per cell by the eigenexpansion
  for (int it = 0; it < time_nodes; ++it) {
    double t = ts[it];
    auto row = heat_kernel_row(dpairs, dgrid, t, res.x, res.y);
    std::vector<double> cell_mass(cells.size(), 0.0);
    for (int q = 0; q < Nint; ++q) {
      int i, j;
      dgrid.interior_coords(q, i, j);
      cell_mass[cell_of[q]] += h2 * row.row.at(i, j);
    }
    std::vector<double> e2(cells.size(), 1.0), e2err(cells.size(), 0.0);
    double dist = dgrid.boundary_distance(res.x, res.y);
    int steps = std::max(
        mc.n_steps, dist > 0 ? (int)std::ceil(64.0 * t / (dist * dist)) : 0);
    parallel_blocks((int)cells.size(), mc.threads, [&](int c) {
      if (cell_mass[c] <= 0) return;
      BridgeSpec spec;
      spec.x0x = res.x;
      spec.x0y = res.y;
      spec.yx = cells[c].cx;
      spec.yy = cells[c].cy;
      spec.t = t;
      spec.n_steps = steps;
      spec.n_paths = mc.n_paths;
      spec.seed = mc.seed;
      auto st = phase_expectation(spec, field, dgrid, 1,
                                  ((uint64_t)it * cells.size() + c) *
                                      (uint64_t)mc.n_paths);
      if (!st.has_survivors()) {
        e2[c] = 1.0;  // |E| <= 1 fallback
        e2err[c] = 0.0;
        return;
      }
      e2[c] = st.modulus * st.modulus;
      e2err[c] = 2.0 * st.modulus * st.stderr_mean +
                 st.stderr_mean * st.stderr_mean;
    });
    for (size_t c = 0; c < cells.size(); ++c) {
      integrand[it] += e2[c] * cell_mass[c];
      err_t[it] += e2err[c] * cell_mass[c];
    }
    // kernel truncation enters with |E|^2 <= 1 over the domain
    double dom = (dgrid.xmax - dgrid.xmin) * (dgrid.ymax - dgrid.ymin);
    err_t[it] += row.truncation_bound * dom;
  }

  double I = 0, Ierr = 0;
  for (int it = 0; it + 1 < time_nodes; ++it) {
    double dt = ts[it + 1] - ts[it];
    I += 0.5 * (integrand[it] + integrand[it + 1]) * dt;
    Ierr += 0.5 * (err_t[it] + err_t[it + 1]) * dt;
  }
  // tail beyond t_max from the eigenexpansion, |E| <= 1
  double tail = 0;
  for (const auto& pr : dpairs) {
    cdouble inner = 0;
    for (const auto& z : pr.psi) inner += z;
    inner *= h2;
    int q0 = dgrid.interior_index(i0, j0);
    tail += std::exp(-pr.lambda * t_max) *
            (std::conj(inner) * pr.psi[q0]).real() / pr.lambda;
  }
  tail = std::max(tail, 0.0) + std::exp(-lamK * t_max) * res.v_at_x;
  res.tail = tail;
  res.mc_budget = Ierr;
  res.integral_estimate = I + res.head + res.tail;
  res.budget = res.head + res.tail + Ierr;

  double I_clamped = std::min(res.integral_estimate + Ierr, res.v_at_x);
  res.improved = res.lambda * res.psi_inf * std::sqrt(I_clamped) *
                 std::sqrt(res.v_at_x);
  return res;
}

}  // namespace magloc
