#include <catch2/catch_amalgamated.hpp>

#include "magloc/predict.hpp"

using namespace magloc;

namespace {
VectorField2 example1_field(const Grid& g, double a) {
  return sample_field_fn([a](double x, double y) {
    return std::pair<double, double>(-a * (x * x + y * y),
                                     -a * (x * x - y * y));
  }, g);
}
}  // namespace

TEST_CASE("example 1 sublevel mask is a band around the diagonal",
          "[predict]") {
  Grid g = build_grid(-1, 1, -1, 1, 65);
  auto A = example1_field(g, 1000);
  auto mask = curl_sublevel_mask(curl(A), 0.1);
  CHECK(!mask.degenerate);
  int count = 0;
  double max_offdiag = 0;
  for (int q = 0; q < g.interior_count(); ++q) {
    if (!mask.mask[q]) continue;
    ++count;
    int i, j;
    g.interior_coords(q, i, j);
    max_offdiag = std::max(max_offdiag, std::abs(g.x(i) - g.y(j)));
  }
  // about 10% of the nodes, all close to x = y
  CHECK(count >= (int)(0.08 * g.interior_count()));
  CHECK(count <= (int)(0.14 * g.interior_count()));
  CHECK(max_offdiag <= 0.25);
  // every diagonal node is inside
  for (int i = 1; i < g.nx - 1; ++i)
    CHECK(mask.mask[g.interior_index(i, i)] == 1);
}

TEST_CASE("constant |curl| trips the degenerate flag", "[predict]") {
  Grid g = build_grid(-1, 1, -1, 1, 17);
  auto A = sample_field_fn([](double x, double y) {
    return std::pair<double, double>(-0.5 * y, 0.5 * x);
  }, g);
  auto mask = curl_sublevel_mask(curl(A), 0.1);
  CHECK(mask.degenerate);
  int all = 0;
  for (auto m : mask.mask) all += m;
  CHECK(all == g.interior_count());
}

TEST_CASE("quantile near one covers nearly all nodes", "[predict]") {
  Grid g = build_grid(-1, 1, -1, 1, 33);
  auto A = example1_field(g, 10);
  auto mask = curl_sublevel_mask(curl(A), 0.999);
  int count = 0;
  for (auto m : mask.mask) count += m;
  CHECK(count >= (int)(0.99 * g.interior_count()));
  CHECK_THROWS_AS(curl_sublevel_mask(curl(A), 0.0), config_error);
  CHECK_THROWS_AS(curl_sublevel_mask(curl(A), 1.0), config_error);
}

TEST_CASE("report for the free Laplacian is degenerate with zero ratios",
          "[predict]") {
  Grid g = build_grid(-1, 1, -1, 1, 33);
  auto H = assemble(g, VectorField2(g));
  auto r = smallest_eigenpairs(H, 2, 1e-8, 200, 7, {}, 2);
  REQUIRE(r.converged);
  auto rep = corollary2_report(r.pairs, VectorField2(g), 0.1);
  CHECK(rep.mask.degenerate);
  for (const auto& row : rep.rows) {
    CHECK(row.ratio == 0.0);
    CHECK(row.percentile >= 0.0);
    CHECK(row.percentile <= 100.0);
  }
}

TEST_CASE("example 1 localization points sit in the low-curl band",
          "[predict]") {
  Grid g = build_grid(-1, 1, -1, 1, 129);
  double a = 100;
  auto H = assemble_fn(g, [a](double x, double y) {
    return std::pair<double, double>(-a * (x * x + y * y),
                                     -a * (x * x - y * y));
  });
  auto r = smallest_eigenpairs(H, 2, 1e-8, 300, 7, {}, 2);
  REQUIRE(r.converged);
  auto A = example1_field(g, a);
  auto rep = corollary2_report(r.pairs, A, 0.1);
  for (const auto& row : rep.rows) {
    CHECK(row.in_sublevel);
    CHECK(std::isfinite(row.ratio));
    CHECK(row.ratio >= 0.0);
    CHECK(row.percentile <= 50.0);
    CHECK(!row.near_boundary);
  }
  CHECK(rep.max_ratio >= rep.rows[0].ratio);
}

TEST_CASE("prediction is invariant under quadratic gauge shifts",
          "[predict]") {
  Grid g = build_grid(-1, 1, -1, 1, 65);
  double a = 5;
  auto field = [a](double x, double y) {
    double f = 5 * M_PI * std::sin(x * x + y * y);
    return std::pair<double, double>(-a * std::cos(f), -a * std::sin(f));
  };
  auto shifted = [&](double x, double y) {
    auto [ax, ay] = field(x, y);
    return std::pair<double, double>(ax + 2 * x + y, ay - 2 * y + x);
  };
  auto r1 = smallest_eigenpairs(assemble_fn(g, field), 1, 1e-8, 200, 7, {}, 2);
  auto r2 = smallest_eigenpairs(assemble_fn(g, shifted), 1, 1e-8, 200, 9, {}, 2);
  REQUIRE(r1.converged);
  REQUIRE(r2.converged);
  auto rep1 = corollary2_report(r1.pairs, sample_field_fn(field, g), 0.1);
  auto rep2 = corollary2_report(r2.pairs, sample_field_fn(shifted, g), 0.1);
  CHECK(rep1.rows[0].x0x == Catch::Approx(rep2.rows[0].x0x).margin(g.h + 1e-12));
  CHECK(rep1.rows[0].x0y == Catch::Approx(rep2.rows[0].x0y).margin(g.h + 1e-12));
  CHECK(rep1.rows[0].curl_at_x0 ==
        Catch::Approx(rep2.rows[0].curl_at_x0).margin(1e-6 * (1 + a)));
}

TEST_CASE("ground state energy grows with the uniform field strength",
          "[predict]") {
  double prev = 0;
  for (double B : {10.0, 50.0, 100.0}) {
    Grid g = build_grid(-1, 1, -1, 1, 65);
    auto H = assemble_fn(g, [B](double x, double y) {
      return std::pair<double, double>(-0.5 * B * y, 0.5 * B * x);
    });
    // strong uniform fields form quasi-degenerate Landau clusters whose
    // in-cluster splittings floor the vector residual; the eigenvalue error
    // stays ~res^2/gap, ample for this comparison
    auto r = smallest_eigenpairs(H, 1, 1e-4, 300, 7, {}, 2);
    REQUIRE(r.converged);
    auto rep = corollary2_report(
        r.pairs, sample_field_fn([B](double x, double y) {
          return std::pair<double, double>(-0.5 * B * y, 0.5 * B * x);
        }, g), 0.1);
    CHECK(rep.rows[0].ratio ==
          Catch::Approx(B / std::pow(r.pairs[0].lambda, 2)).epsilon(1e-6));
    CHECK(r.pairs[0].lambda > prev);
    prev = r.pairs[0].lambda;
  }
}
