#pragma once

#include <algorithm>

#include "magloc/helmholtz.hpp"
#include "magloc/eig.hpp"

namespace magloc {

struct SublevelMask {
  std::vector<uint8_t> mask;  // interior nodes
  double threshold = 0;
  double quantile = 0;
  bool degenerate = false;  // constant |curl|
};

// Interior nodes where |curl| lies at or below its q-quantile.
inline SublevelMask curl_sublevel_mask(const ScalarField& curlfield,
                                       double quantile) {
  if (!(quantile > 0 && quantile < 1))
    throw config_error("curl_sublevel_mask: quantile must be in (0,1)");
  const Grid& g = curlfield.grid;
  const int n = g.interior_count();
  std::vector<double> vals(n);
  for (int q = 0; q < n; ++q) {
    int i, j;
    g.interior_coords(q, i, j);
    vals[q] = std::abs(curlfield.at(i, j));
  }
  std::vector<double> sorted(vals);
  std::sort(sorted.begin(), sorted.end());
  SublevelMask out;
  out.quantile = quantile;
  out.threshold = sorted[(size_t)(quantile * (n - 1))];
  out.degenerate = sorted.back() - sorted.front() <=
                   1e-12 * std::max(1.0, sorted.back());
  out.mask.resize(n);
  for (int q = 0; q < n; ++q) out.mask[q] = vals[q] <= out.threshold ? 1 : 0;
  return out;
}

struct PredictionRow {
  double lambda = 0;
  double x0x = 0, x0y = 0;
  double curl_at_x0 = 0;
  double lambda_sq = 0;
  double ratio = 0;       // |curl A(x0)| / lambda^2
  double percentile = 0;  // of |curl A(x0)| among interior |curl| values
  double nonlinearity = 0;  // sup_B ||A_nonlin|| relative to |curl|/lambda
  bool in_sublevel = false;
  bool near_boundary = false;  // x0 within one cell of the rim
  bool nonlinearity_unreliable = false;  // |curl(x0)| ~ 0
};

struct PredictionReport {
  std::vector<PredictionRow> rows;
  SublevelMask mask;
  double max_ratio = 0;  // empirical Corollary-2 constant across pairs
};

inline PredictionReport corollary2_report(const std::vector<EigenPair>& pairs,
                                          const VectorField2& a,
                                          double quantile = 0.1) {
  const Grid& g = a.grid;
  auto curl_a = curl(a);
  PredictionReport rep;
  rep.mask = curl_sublevel_mask(curl_a, quantile);

  const int n = g.interior_count();
  std::vector<double> allcurl(n);
  for (int q = 0; q < n; ++q) {
    int i, j;
    g.interior_coords(q, i, j);
    allcurl[q] = std::abs(curl_a.at(i, j));
  }
  std::vector<double> sorted(allcurl);
  std::sort(sorted.begin(), sorted.end());

  for (const auto& pr : pairs) {
    PredictionRow row;
    row.lambda = pr.lambda;
    row.lambda_sq = pr.lambda * pr.lambda;
    auto [x0, y0] = localization_point(pr, g);
    row.x0x = x0;
    row.x0y = y0;
    int i0 = (int)std::lround((x0 - g.xmin) / g.h);
    int j0 = (int)std::lround((y0 - g.ymin) / g.h);
    row.near_boundary = i0 <= 1 || j0 <= 1 || i0 >= g.nx - 2 || j0 >= g.ny - 2;
    row.curl_at_x0 = std::abs(curl_a.at(i0, j0));
    row.ratio = row.curl_at_x0 / row.lambda_sq;
    row.percentile =
        100.0 *
        (std::upper_bound(sorted.begin(), sorted.end(), row.curl_at_x0) -
         sorted.begin()) /
        n;
    row.in_sublevel = rep.mask.mask[g.interior_index(i0, j0)] != 0;

    // nonlinear remainder over the 1/sqrt(lambda) ball, against |curl|/lambda
    auto lin = linearize_field(a, x0, y0);
    double radius = 1.0 / std::sqrt(pr.lambda);
    double sup_nl = 0;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        double dx = g.x(i) - x0, dy = g.y(j) - y0;
        if (dx * dx + dy * dy > radius * radius) continue;
        int p = g.node_index(i, j);
        sup_nl = std::max(
            sup_nl, std::hypot(lin.anonlin.ax[p], lin.anonlin.ay[p]));
      }
    double scale = row.curl_at_x0 / pr.lambda;
    row.nonlinearity_unreliable = scale <= 1e-9 * (1.0 + a.max_norm());
    row.nonlinearity = row.nonlinearity_unreliable ? 0.0 : sup_nl / scale;
    rep.max_ratio = std::max(rep.max_ratio, row.ratio);
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace magloc
