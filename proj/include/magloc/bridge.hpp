#pragma once

#include <array>
#include <complex>
#include <type_traits>
#include <vector>

#include "magloc/field.hpp"
#include "magloc/parallel.hpp"
#include "magloc/rng.hpp"

namespace magloc {

// Diffusion convention throughout: generator Delta, i.e. per-coordinate
// variance 2t and transition density (4 pi t)^{-d/2} exp(-r^2/4t).

struct BridgeSpec {
  double x0x = 0, x0y = 0;  // start
  double yx = 0, yy = 0;    // pinned endpoint
  double t = 1;
  int n_steps = 2;
  int n_paths = 1;
  uint64_t seed = 1;

  void validate() const {
    if (!(t > 0)) throw config_error("BridgeSpec: t must be > 0");
    if (n_steps < 2) throw config_error("BridgeSpec: n_steps must be >= 2");
    if (n_paths < 1) throw config_error("BridgeSpec: n_paths must be >= 1");
  }
};

struct McParams {
  int n_paths = 10000;
  int n_steps = 256;
  int targets_per_side = 15;
  uint64_t seed = 1;
  int threads = 1;
  bool keep_histograms = false;
};

namespace detail {

// One pinned step: position p at step k of n, endpoint y, step length ds.
// Draws from stream (seed, path_id, k).
inline void bridge_step(double& px, double& py, int k, int n, double ds,
                        double yx, double yy, uint64_t seed, uint64_t path_id) {
  const int m = n - k;  // steps remaining
  double z0, z1;
  normal_pair(seed, path_id, (uint64_t)k, z0, z1);
  const double drift = 1.0 / m;
  const double sd = std::sqrt(2.0 * ds * (double)(m - 1) / (double)m);
  px += (yx - px) * drift + sd * z0;
  py += (yy - py) * drift + sd * z1;
}

}  // namespace detail

inline std::vector<std::array<double, 2>> sample_bridge(const BridgeSpec& spec,
                                                        uint64_t path_index) {
  spec.validate();
  const int n = spec.n_steps;
  const double ds = spec.t / n;
  std::vector<std::array<double, 2>> path(n + 1);
  double px = spec.x0x, py = spec.x0y;
  path[0] = {px, py};
  for (int k = 0; k < n - 1; ++k) {
    detail::bridge_step(px, py, k, n, ds, spec.yx, spec.yy, spec.seed,
                        path_index);
    path[k + 1] = {px, py};
  }
  path[n] = {spec.yx, spec.yy};
  return path;
}

// Left-endpoint Ito sum of F along a polyline.
template <class FieldFn>
  requires std::is_invocable_v<FieldFn&, double, double>
inline double ito_integral(FieldFn&& field,
                           const std::vector<std::array<double, 2>>& path) {
  double acc = 0;
  for (size_t k = 0; k + 1 < path.size(); ++k) {
    auto [fx, fy] = field(path[k][0], path[k][1]);
    acc += fx * (path[k + 1][0] - path[k][0]) + fy * (path[k + 1][1] - path[k][1]);
  }
  return acc;
}

inline double ito_integral(const VectorField2& f,
                           const std::vector<std::array<double, 2>>& path) {
  const Grid& g = f.grid;
  for (auto& p : path)
    if (p[0] < g.xmin || p[0] > g.xmax || p[1] < g.ymin || p[1] > g.ymax)
      throw numeric_error("ito_integral: path point outside grid bounding box");
  return ito_integral([&](double x, double y) { return f.interp(x, y); }, path);
}

inline constexpr int kHistogramBins = 1000;

struct PathIntegralStats {
  cdouble mean_phase{1.0, 0.0};  // over surviving paths
  double modulus = 1.0;
  double survival = 0.0;
  double stderr_mean = 0.0;  // component stderrs combined in quadrature
  int n_effective = 0;
  int n_paths = 0;
  std::vector<uint32_t> circular_histogram;  // X mod 2pi, 1000 bins

  bool has_survivors() const { return n_effective > 0; }
};

// Samples pinned bridges, kills paths that step outside the open rectangle,
// and averages exp(iX) with X the left-endpoint Ito sum of F.
template <class FieldFn>
inline PathIntegralStats phase_expectation(const BridgeSpec& spec,
                                           FieldFn&& field, double xmin,
                                           double xmax, double ymin,
                                           double ymax, int threads = 1,
                                           uint64_t stream_offset = 0) {
  spec.validate();
  const int n = spec.n_steps;
  const double ds = spec.t / n;

  struct Partial {
    double sc = 0, ss = 0, sc2 = 0, ss2 = 0;
    long survivors = 0;
    std::vector<uint32_t> hist;
  };
  const int block = 4096;
  const int n_blocks = (spec.n_paths + block - 1) / block;
  std::vector<Partial> parts(n_blocks);

  auto inside = [&](double px, double py) {
    return px > xmin && px < xmax && py > ymin && py < ymax;
  };

  parallel_blocks(n_blocks, threads, [&](int b) {
    Partial& pt = parts[b];
    pt.hist.assign(kHistogramBins, 0);
    const int lo = b * block, hi = std::min(spec.n_paths, lo + block);
    for (int j = lo; j < hi; ++j) {
      uint64_t pid = stream_offset + (uint64_t)j;
      double px = spec.x0x, py = spec.x0y, X = 0;
      bool alive = inside(px, py);
      for (int k = 0; k < n && alive; ++k) {
        auto [fx, fy] = field(px, py);
        double qx = px, qy = py;
        if (k < n - 1)
          detail::bridge_step(qx, qy, k, n, ds, spec.yx, spec.yy, spec.seed,
                              pid);
        else {
          qx = spec.yx;
          qy = spec.yy;
        }
        X += fx * (qx - px) + fy * (qy - py);
        px = qx;
        py = qy;
        alive = inside(px, py);
      }
      if (!alive) continue;
      ++pt.survivors;
      double c = std::cos(X), s = std::sin(X);
      pt.sc += c;
      pt.ss += s;
      pt.sc2 += c * c;
      pt.ss2 += s * s;
      double w = std::fmod(X, 2.0 * M_PI);
      if (w < 0) w += 2.0 * M_PI;
      int bin = std::min((int)(w / (2.0 * M_PI) * kHistogramBins),
                         kHistogramBins - 1);
      ++pt.hist[bin];
    }
  });

  PathIntegralStats st;
  st.n_paths = spec.n_paths;
  st.circular_histogram.assign(kHistogramBins, 0);
  double sc = 0, ss = 0, sc2 = 0, ss2 = 0;
  long surv = 0;
  for (auto& pt : parts) {
    sc += pt.sc;
    ss += pt.ss;
    sc2 += pt.sc2;
    ss2 += pt.ss2;
    surv += pt.survivors;
    if (!pt.hist.empty())
      for (int i = 0; i < kHistogramBins; ++i)
        st.circular_histogram[i] += pt.hist[i];
  }
  st.n_effective = (int)surv;
  st.survival = (double)surv / spec.n_paths;
  if (surv > 0) {
    st.mean_phase = cdouble(sc / surv, ss / surv);
    st.modulus = std::abs(st.mean_phase);
    if (surv > 1) {
      double vc = (sc2 - sc * sc / surv) / (surv - 1);
      double vs = (ss2 - ss * ss / surv) / (surv - 1);
      st.stderr_mean = std::sqrt(std::max(vc, 0.0) / surv +
                                 std::max(vs, 0.0) / surv);
    }
  } else {
    st.mean_phase = 0;
    st.modulus = 0;
  }
  return st;
}

template <class FieldFn>
inline PathIntegralStats phase_expectation(const BridgeSpec& spec,
                                           FieldFn&& field, const Grid& g,
                                           int threads = 1,
                                           uint64_t stream_offset = 0) {
  return phase_expectation(spec, std::forward<FieldFn>(field), g.xmin, g.xmax,
                           g.ymin, g.ymax, threads, stream_offset);
}

// Windowed circular concentration: sup over z = 2 pi j / 1000 of the
// histogram mass within 1/100 of z.
inline double circular_window_sup(const std::vector<uint32_t>& hist,
                                  long n_samples, double halfwidth = 0.01) {
  if (n_samples <= 0) return 0;
  const int B = (int)hist.size();
  const double binw = 2.0 * M_PI / B;
  long best = 0;
  for (int j = 0; j < B; ++j) {
    double z = j * binw;
    long s = 0;
    int reach = (int)(halfwidth / binw) + 1;
    for (int d = -reach; d <= reach; ++d) {
      int b = ((j + d) % B + B) % B;
      double center = (b + 0.5) * binw;
      double dist = std::abs(center - z);
      dist = std::min(dist, 2.0 * M_PI - dist);
      if (dist <= halfwidth) s += hist[b];
    }
    best = std::max(best, s);
  }
  return (double)best / n_samples;
}

}  // namespace magloc
