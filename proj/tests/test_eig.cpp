#include <catch2/catch_amalgamated.hpp>
#include <algorithm>

#include "magloc/eig.hpp"

using namespace magloc;

namespace {

std::vector<double> exact_dirichlet_spectrum(const Grid& g, int count) {
  std::vector<double> v;
  const int m = g.nx - 2;
  for (int p = 1; p <= m; ++p)
    for (int q = 1; q <= m; ++q)
      v.push_back(4.0 / (g.h * g.h) *
                  (std::pow(std::sin(p * M_PI * g.h / 4), 2) +
                   std::pow(std::sin(q * M_PI * g.h / 4), 2)));
  std::sort(v.begin(), v.end());
  v.resize(count);
  return v;
}

HermitianOperator example3_operator(int n, double a) {
  Grid g = build_grid(-1, 1, -1, 1, n);
  return assemble_fn(g, [a](double x, double y) {
    double f = 5 * M_PI * std::sin(x * x + y * y);
    return std::pair<double, double>(-a * std::cos(f), -a * std::sin(f));
  });
}

}  // namespace

TEST_CASE("1x1 operator", "[eig]") {
  Grid g = build_grid(-1, 1, -1, 1, 3);
  auto H = assemble(g, VectorField2(g));
  auto r = smallest_eigenpairs(H, 1, 1e-10, 100, 1);
  REQUIRE(r.converged);
  CHECK(r.pairs[0].lambda == Catch::Approx(4.0).margin(1e-12));
  CHECK(std::abs(r.pairs[0].psi[0]) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("free Laplacian matches the closed-form discrete spectrum",
          "[eig]") {
  Grid g = build_grid(-1, 1, -1, 1, 129);
  auto H = assemble(g, VectorField2(g));
  auto r = smallest_eigenpairs(H, 4, 1e-8, 200, 7, {}, 2);
  REQUIRE(r.converged);
  auto exact = exact_dirichlet_spectrum(g, 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(r.pairs[i].lambda - exact[i]) <= 1e-10 * exact[i]);
    CHECK(r.pairs[i].residual <= 1e-8);
  }
  // continuum limits pi^2/2, 5 pi^2/4 (x2), 2 pi^2
  CHECK(r.pairs[0].lambda == Catch::Approx(M_PI * M_PI / 2).epsilon(2e-4));
  CHECK(r.pairs[3].lambda == Catch::Approx(2 * M_PI * M_PI).epsilon(5e-4));
}

TEST_CASE("discrete eigenvalues increase monotonically under refinement",
          "[eig]") {
  double prev = 0;
  for (int n : {33, 65, 129}) {
    Grid g = build_grid(-1, 1, -1, 1, n);
    auto H = assemble(g, VectorField2(g));
    auto r = smallest_eigenpairs(H, 1, 1e-9, 200, 7, {}, 2);
    REQUIRE(r.converged);
    CHECK(r.pairs[0].lambda > prev);
    CHECK(r.pairs[0].lambda < M_PI * M_PI / 2);
    prev = r.pairs[0].lambda;
  }
}

TEST_CASE("returned block is orthonormal in the weighted inner product",
          "[eig]") {
  auto H = example3_operator(65, 5);
  auto r = smallest_eigenpairs(H, 5, 1e-8, 200, 3, {}, 2);
  REQUIRE(r.converged);
  double h = H.h, worst = 0;
  for (size_t i = 0; i < r.pairs.size(); ++i)
    for (size_t j = 0; j <= i; ++j) {
      cdouble s = 0;
      for (int p = 0; p < H.dim; ++p)
        s += std::conj(r.pairs[i].psi[p]) * r.pairs[j].psi[p];
      s *= h * h;
      worst = std::max(worst, std::abs(s - (i == j ? 1.0 : 0.0)));
    }
  CHECK(worst <= 1e-8);
}

TEST_CASE("spectrum is invariant under quadratic gauge shifts", "[eig]") {
  Grid g = build_grid(-1, 1, -1, 1, 65);
  double a = 5, tol = 1e-8;
  auto field = [a](double x, double y) {
    double f = 5 * M_PI * std::sin(x * x + y * y);
    return std::pair<double, double>(-a * std::cos(f), -a * std::sin(f));
  };
  auto H = assemble_fn(g, field);
  auto Hg = assemble_fn(g, [&](double x, double y) {
    auto [ax, ay] = field(x, y);
    return std::pair<double, double>(ax + 2 * x + y, ay - 2 * y + x);
  });
  auto r1 = smallest_eigenpairs(H, 4, tol, 200, 7, {}, 2);
  auto r2 = smallest_eigenpairs(Hg, 4, tol, 200, 8, {}, 2);
  REQUIRE(r1.converged);
  REQUIRE(r2.converged);
  for (int i = 0; i < 4; ++i)
    CHECK(std::abs(r1.pairs[i].lambda - r2.pairs[i].lambda) <=
          10 * tol * std::max(1.0, r1.pairs[i].lambda));
}

TEST_CASE("results are bitwise deterministic across thread counts", "[eig]") {
  auto H = example3_operator(33, 5);
  auto a = smallest_eigenpairs(H, 3, 1e-8, 200, 42, {}, 1);
  auto b = smallest_eigenpairs(H, 3, 1e-8, 200, 42, {}, 4);
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  for (int i = 0; i < 3; ++i) {
    CHECK(a.pairs[i].lambda == b.pairs[i].lambda);
    REQUIRE(std::equal(a.pairs[i].psi.begin(), a.pairs[i].psi.end(),
                       b.pairs[i].psi.begin(),
                       [](cdouble u, cdouble v) { return u == v; }));
  }
  auto c = smallest_eigenpairs(H, 3, 1e-8, 200, 43, {}, 1);
  REQUIRE(c.converged);
  CHECK(std::abs(a.pairs[0].lambda - c.pairs[0].lambda) <= 1e-7);
}

TEST_CASE("jacobi preconditioner option still converges", "[eig]") {
  Grid g = build_grid(-1, 1, -1, 1, 33);
  auto H = assemble(g, VectorField2(g));
  EigOptions opts;
  opts.preconditioner = "jacobi";
  auto r = smallest_eigenpairs(H, 2, 1e-7, 3000, 7, opts, 1);
  REQUIRE(r.converged);
  auto exact = exact_dirichlet_spectrum(g, 2);
  CHECK(r.pairs[0].lambda == Catch::Approx(exact[0]).epsilon(1e-8));
}

TEST_CASE("argument validation and non-convergence diagnostics", "[eig]") {
  Grid g = build_grid(-1, 1, -1, 1, 9);
  auto H = assemble(g, VectorField2(g));
  CHECK_THROWS_AS(smallest_eigenpairs(H, 0, 1e-8, 10, 1), config_error);
  CHECK_THROWS_AS(smallest_eigenpairs(H, H.dim + 1, 1e-8, 10, 1),
                  config_error);
  CHECK_THROWS_AS(smallest_eigenpairs(H, 1, 0.0, 10, 1), config_error);

  auto Hbig = example3_operator(33, 5);
  EigOptions opts;
  opts.preconditioner = "jacobi";
  auto r = smallest_eigenpairs(Hbig, 2, 1e-12, 2, 1, opts, 1);
  CHECK(!r.converged);
  CHECK(r.iterations == 2);
  REQUIRE(r.pairs.size() == 2);
  CHECK(r.pairs[0].residual > 1e-12);
}

TEST_CASE("localization point picks the |psi| maximum", "[eig]") {
  Grid g = build_grid(-1, 1, -1, 1, 33);
  auto H = assemble(g, VectorField2(g));
  auto r = smallest_eigenpairs(H, 1, 1e-9, 200, 7, {}, 1);
  REQUIRE(r.converged);
  auto [x0, y0] = localization_point(r.pairs[0], g);
  CHECK(std::abs(x0) <= g.h + 1e-12);
  CHECK(std::abs(y0) <= g.h + 1e-12);

  // modulating by a phase leaves the point unchanged
  EigenPair mod = r.pairs[0];
  for (int q = 0; q < H.dim; ++q) {
    int i, j;
    g.interior_coords(q, i, j);
    mod.psi[q] *= std::exp(cdouble(0, -(g.x(i) * g.x(i) - g.y(j))));
  }
  auto [x1, y1] = localization_point(mod, g);
  CHECK(x1 == x0);
  CHECK(y1 == y0);
}

TEST_CASE("ties resolve to the smallest interior index", "[eig]") {
  Grid g = build_grid(-1, 1, -1, 1, 5);
  EigenPair pr;
  pr.lambda = 1;
  pr.psi.assign(g.interior_count(), cdouble(0.5, 0));
  auto [x0, y0] = localization_point(pr, g);
  CHECK(x0 == g.x(1));
  CHECK(y0 == g.y(1));
}
