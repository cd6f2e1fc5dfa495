#pragma once

#include "magloc/bridge.hpp"
#include "magloc/eig.hpp"

namespace magloc {

inline double gaussian_kernel_2d(double r2, double t) {
  return std::exp(-r2 / (4.0 * t)) / (4.0 * M_PI * t);
}

struct TheoremTarget {
  double yx = 0, yy = 0;
  double weight = 0;      // Gaussian kernel value
  double modulus = 0;     // |E exp(iX)| over survivors
  double survival = 0;
  double stderr_mean = 0;
  int n_effective = 0;
  bool skipped = false;   // outside the domain
};

// One evaluation of the path-integral inequality at time horizon t:
// integral of |E exp(iX)| * p_t over targets near x0 against exp(-lambda t).
// `lhs` uses modulus * survival * G (heat-kernel form); `lhs_gauss` replaces
// survival by 1 (free-Gaussian form).
struct TheoremReport {
  double t = 0;
  double lambda = 0;
  double x0x = 0, x0y = 0;
  double lhs = 0;
  double lhs_gauss = 0;
  double lhs_error_budget = 0;
  double rhs = 0;
  bool pass = false;
  bool pass_gauss = false;
  double budget_tail = 0, budget_mc = 0, budget_quad = 0, budget_skipped = 0;
  int n_steps_used = 0;
  int zero_survivor_targets = 0;
  double radius = 0;
  std::vector<TheoremTarget> targets;
};

template <class FieldFn>
inline TheoremReport verify_theorem_at(double x0x, double x0y, double lambda,
                                       const Grid& g, FieldFn&& field,
                                       double t, const McParams& mc) {
  if (!(t > 0)) throw config_error("verify_theorem: t must be > 0");
  TheoremReport rep;
  rep.t = t;
  rep.lambda = lambda;
  rep.x0x = x0x;
  rep.x0y = x0y;
  rep.rhs = std::exp(-lambda * t);
  const double R = 6.0 * std::sqrt(t);
  rep.radius = R;

  // Discrete-killing control: enough steps that exits between samples are
  // unlikely at the boundary-distance scale.
  double dist = g.boundary_distance(x0x, x0y);
  int floor_steps =
      dist > 0 ? (int)std::ceil(64.0 * t / (dist * dist)) : mc.n_steps;
  rep.n_steps_used = std::max(mc.n_steps, floor_steps);

  const int m = mc.targets_per_side;
  const double cell = 2.0 * R / m;
  const double cell_area = cell * cell;

  rep.targets.resize((size_t)m * m);
  for (int jy = 0; jy < m; ++jy)
    for (int jx = 0; jx < m; ++jx) {
      auto& tg = rep.targets[(size_t)jy * m + jx];
      tg.yx = x0x - R + (jx + 0.5) * cell;
      tg.yy = x0y - R + (jy + 0.5) * cell;
      double r2 = (tg.yx - x0x) * (tg.yx - x0x) + (tg.yy - x0y) * (tg.yy - x0y);
      tg.weight = gaussian_kernel_2d(r2, t);
      tg.skipped = !g.inside(tg.yx, tg.yy);
    }

  const int n_targets = m * m;
  parallel_blocks(n_targets, mc.threads, [&](int idx) {
    auto& tg = rep.targets[idx];
    if (tg.skipped) return;
    BridgeSpec spec;
    spec.x0x = x0x;
    spec.x0y = x0y;
    spec.yx = tg.yx;
    spec.yy = tg.yy;
    spec.t = t;
    spec.n_steps = rep.n_steps_used;
    spec.n_paths = mc.n_paths;
    spec.seed = mc.seed;
    auto st = phase_expectation(spec, field, g, 1,
                                (uint64_t)idx * (uint64_t)mc.n_paths);
    tg.modulus = st.modulus;
    tg.survival = st.survival;
    tg.stderr_mean = st.stderr_mean;
    tg.n_effective = st.n_effective;
  });

  for (auto& tg : rep.targets) {
    if (tg.skipped) {
      rep.budget_skipped += tg.weight * cell_area;
      continue;
    }
    if (tg.n_effective == 0) {
      ++rep.zero_survivor_targets;
      rep.budget_mc += tg.weight * cell_area;  // |E| s <= 1
      continue;
    }
    rep.lhs += tg.modulus * tg.survival * tg.weight * cell_area;
    rep.lhs_gauss += tg.modulus * tg.weight * cell_area;
    double surv_sd = std::sqrt(std::max(
        tg.survival * (1.0 - tg.survival) / mc.n_paths, 0.0));
    rep.budget_mc +=
        (tg.stderr_mean + tg.modulus * surv_sd) * tg.weight * cell_area;
    // midpoint-rule error for the Gaussian factor (|E| s <= 1)
    double r2 = (tg.yx - x0x) * (tg.yx - x0x) + (tg.yy - x0y) * (tg.yy - x0y);
    double hess = tg.weight * (1.0 / t + r2 / (4.0 * t * t));
    rep.budget_quad += cell_area * cell * cell / 24.0 * hess * 2.0;
  }
  rep.budget_tail = std::exp(-R * R / (4.0 * t));
  rep.lhs_error_budget = rep.budget_tail + rep.budget_mc + rep.budget_quad +
                         rep.budget_skipped;
  rep.pass = rep.lhs + rep.lhs_error_budget >= rep.rhs;
  rep.pass_gauss = rep.lhs_gauss + rep.lhs_error_budget >= rep.rhs;
  return rep;
}

template <class FieldFn>
inline TheoremReport verify_theorem(const EigenPair& pair, const Grid& g,
                                    FieldFn&& field, double t,
                                    const McParams& mc) {
  if (pair.residual > 1e-6)
    throw config_error("verify_theorem: eigenpair residual too large");
  auto [x0x, x0y] = localization_point(pair, g);
  return verify_theorem_at(x0x, x0y, pair.lambda, g,
                           std::forward<FieldFn>(field), t, mc);
}

struct NearDeterministicTarget {
  double yx = 0, yy = 0;
  double window_prob = 0;  // sup_z P(|X mod 2pi - z| <= 1/100)
  double survival = 0;
  bool near_deterministic = false;
  bool unknown = false;  // zero survivors
  std::vector<uint32_t> histogram;  // kept when McParams::keep_histograms
};

struct NearDeterministicReport {
  double t = 0, radius = 0;
  double x0x = 0, x0y = 0;
  double fraction = 0;  // measure fraction of near-deterministic targets
  int n_targets = 0, n_near_deterministic = 0, n_unknown = 0;
  int n_steps_used = 0;
  std::vector<NearDeterministicTarget> targets;
};

// Measure fraction of near-deterministic endpoints in the ball of `radius`
// around x0 (radius defaults to sqrt(t)).
template <class FieldFn>
inline NearDeterministicReport near_deterministic_fraction(
    double x0x, double x0y, double t, FieldFn&& field, const Grid& g,
    const McParams& mc, double radius = 0) {
  if (!(t > 0)) throw config_error("near_deterministic_fraction: t must be > 0");
  NearDeterministicReport rep;
  rep.t = t;
  rep.x0x = x0x;
  rep.x0y = x0y;
  rep.radius = radius > 0 ? radius : std::sqrt(t);
  double dist = g.boundary_distance(x0x, x0y);
  int floor_steps =
      dist > 0 ? (int)std::ceil(64.0 * t / (dist * dist)) : mc.n_steps;
  rep.n_steps_used = std::max(mc.n_steps, floor_steps);

  const int m = mc.targets_per_side;
  const double cell = 2.0 * rep.radius / m;
  std::vector<NearDeterministicTarget> cand;
  for (int jy = 0; jy < m; ++jy)
    for (int jx = 0; jx < m; ++jx) {
      NearDeterministicTarget tg;
      tg.yx = x0x - rep.radius + (jx + 0.5) * cell;
      tg.yy = x0y - rep.radius + (jy + 0.5) * cell;
      double r2 = (tg.yx - x0x) * (tg.yx - x0x) + (tg.yy - x0y) * (tg.yy - x0y);
      if (r2 > rep.radius * rep.radius) continue;  // keep the disk only
      if (!g.inside(tg.yx, tg.yy)) continue;
      cand.push_back(tg);
    }
  rep.targets = std::move(cand);
  rep.n_targets = (int)rep.targets.size();

  parallel_blocks(rep.n_targets, mc.threads, [&](int idx) {
    auto& tg = rep.targets[idx];
    BridgeSpec spec;
    spec.x0x = x0x;
    spec.x0y = x0y;
    spec.yx = tg.yx;
    spec.yy = tg.yy;
    spec.t = t;
    spec.n_steps = rep.n_steps_used;
    spec.n_paths = mc.n_paths;
    spec.seed = mc.seed;
    auto st = phase_expectation(spec, field, g, 1,
                                (uint64_t)idx * (uint64_t)mc.n_paths);
    tg.survival = st.survival;
    if (!st.has_survivors()) {
      tg.unknown = true;
      return;
    }
    tg.window_prob =
        circular_window_sup(st.circular_histogram, st.n_effective);
    tg.near_deterministic = tg.window_prob >= 0.99;
    if (mc.keep_histograms) tg.histogram = std::move(st.circular_histogram);
  });

  for (auto& tg : rep.targets) {
    if (tg.unknown) ++rep.n_unknown;
    else if (tg.near_deterministic) ++rep.n_near_deterministic;
  }
  rep.fraction = rep.n_targets > 0
                     ? (double)rep.n_near_deterministic / rep.n_targets
                     : 0.0;
  return rep;
}

struct ScalingProbe {
  double b = 0, t = 0;
  double spread_t = 0, spread_2t = 0;  // sample variances of the integral
  double std_t = 0, std_2t = 0;
  double ratio = 0;  // spread_2t / spread_t, ~4 from the t^2 variance scaling
};

// Loop bridges at the origin against the rotational field (B/2) R x.
inline ScalingProbe rotational_scaling_probe(double B, double t,
                                             const McParams& mc) {
  ScalingProbe pr;
  pr.b = B;
  pr.t = t;
  auto field = [B](double x, double y) {
    return std::pair<double, double>(-0.5 * B * y, 0.5 * B * x);
  };
  auto run = [&](double tt, uint64_t stream_offset) {
    const int block = 4096;
    const int n_blocks = (mc.n_paths + block - 1) / block;
    std::vector<double> s1(n_blocks, 0.0), s2(n_blocks, 0.0);
    BridgeSpec spec;
    spec.t = tt;
    spec.n_steps = mc.n_steps;
    spec.n_paths = mc.n_paths;
    spec.seed = mc.seed;
    const double ds = tt / spec.n_steps;
    parallel_blocks(n_blocks, mc.threads, [&](int bidx) {
      const int lo = bidx * block, hi = std::min(mc.n_paths, lo + block);
      double a1 = 0, a2 = 0;
      for (int j = lo; j < hi; ++j) {
        uint64_t pid = stream_offset + (uint64_t)j;
        double px = 0, py = 0, X = 0;
        for (int k = 0; k < spec.n_steps; ++k) {
          auto [fx, fy] = field(px, py);
          double qx = px, qy = py;
          if (k < spec.n_steps - 1)
            detail::bridge_step(qx, qy, k, spec.n_steps, ds, 0, 0, spec.seed,
                                pid);
          else {
            qx = 0;
            qy = 0;
          }
          X += fx * (qx - px) + fy * (qy - py);
          px = qx;
          py = qy;
        }
        a1 += X;
        a2 += X * X;
      }
      s1[bidx] = a1;
      s2[bidx] = a2;
    });
    double t1 = 0, t2 = 0;
    for (int b2 = 0; b2 < n_blocks; ++b2) {
      t1 += s1[b2];
      t2 += s2[b2];
    }
    long n = mc.n_paths;
    return (t2 - t1 * t1 / n) / (n - 1);
  };
  pr.spread_t = run(t, 0);
  pr.spread_2t = run(2.0 * t, (uint64_t)mc.n_paths);
  pr.std_t = std::sqrt(std::max(pr.spread_t, 0.0));
  pr.std_2t = std::sqrt(std::max(pr.spread_2t, 0.0));
  pr.ratio = pr.spread_t > 0 ? pr.spread_2t / pr.spread_t : 0.0;
  return pr;
}

struct FeynmanKacResult {
  cdouble value{0, 0};
  double stderr_mean = 0;
  double survival = 0;
};

// Monte Carlo evaluation of [exp(-t H(A,V)) psi](x) over free paths from x:
// E[ exp(-i Int A.dw - (i/2) Int divA ds - Int V ds) chi psi(w(t)) ].
// psi is given on interior nodes and vanishes on the rim.
template <class FieldFn>
inline FeynmanKacResult feynman_kac_apply(
    const Grid& g, FieldFn&& field, const ScalarField* div_a,
    const ScalarField* V, const std::vector<cdouble>& psi, double t, double x,
    double y, const McParams& mc) {
  if ((int)psi.size() != g.interior_count())
    throw config_error("feynman_kac_apply: psi must live on interior nodes");
  // complex psi as two full-grid fields, zero on the rim
  ScalarField pre(g), pim(g);
  for (int q = 0; q < g.interior_count(); ++q) {
    int i, j;
    g.interior_coords(q, i, j);
    pre.at(i, j) = psi[q].real();
    pim.at(i, j) = psi[q].imag();
  }
  const int n = mc.n_steps;
  const double ds = t / n;
  const int block = 4096;
  const int n_blocks = (mc.n_paths + block - 1) / block;
  struct Partial {
    double sr = 0, si = 0, sr2 = 0, si2 = 0;
    long survivors = 0;
  };
  std::vector<Partial> parts(n_blocks);
  parallel_blocks(n_blocks, mc.threads, [&](int b) {
    auto& pt = parts[b];
    const int lo = b * block, hi = std::min(mc.n_paths, lo + block);
    for (int j = lo; j < hi; ++j) {
      double px = x, py = y, phase = 0, decay = 0;
      bool alive = g.inside(px, py);
      for (int k = 0; k < n && alive; ++k) {
        double z0, z1;
        normal_pair(mc.seed, (uint64_t)j, (uint64_t)k, z0, z1);
        double qx = px + std::sqrt(2.0 * ds) * z0;
        double qy = py + std::sqrt(2.0 * ds) * z1;
        auto [fx, fy] = field(px, py);
        phase += fx * (qx - px) + fy * (qy - py);
        double mx = 0.5 * (px + qx), my = 0.5 * (py + qy);
        bool mid_in = g.inside(mx, my);
        if (div_a && mid_in) phase += 0.5 * div_a->interp(mx, my) * ds;
        if (V && mid_in) decay += V->interp(mx, my) * ds;
        px = qx;
        py = qy;
        alive = g.inside(px, py);
      }
      if (!alive) continue;
      ++pt.survivors;
      cdouble val = std::exp(cdouble(-decay, -phase)) *
                    cdouble(pre.interp(px, py), pim.interp(px, py));
      pt.sr += val.real();
      pt.si += val.imag();
      pt.sr2 += val.real() * val.real();
      pt.si2 += val.imag() * val.imag();
    }
  });
  double sr = 0, si = 0, sr2 = 0, si2 = 0;
  long surv = 0;
  for (auto& pt : parts) {
    sr += pt.sr;
    si += pt.si;
    sr2 += pt.sr2;
    si2 += pt.si2;
    surv += pt.survivors;
  }
  FeynmanKacResult res;
  long N = mc.n_paths;  // killed paths contribute zero
  res.value = cdouble(sr / N, si / N);
  res.survival = (double)surv / N;
  double vr = (sr2 - sr * sr / N) / std::max<long>(N - 1, 1);
  double vi = (si2 - si * si / N) / std::max<long>(N - 1, 1);
  res.stderr_mean =
      std::sqrt(std::max(vr, 0.0) / N + std::max(vi, 0.0) / N);
  return res;
}

}  // namespace magloc
