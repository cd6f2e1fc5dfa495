#include <catch2/catch_amalgamated.hpp>
#include <fstream>
#include <sstream>

#include "magloc/operator.hpp"
#include "magloc/rng.hpp"

using namespace magloc;

namespace {

std::vector<cdouble> random_vec(int n, uint64_t seed) {
  std::vector<cdouble> v(n);
  for (int p = 0; p < n; ++p) {
    double z0, z1;
    normal_pair(seed, 9, p, z0, z1);
    v[p] = {z0, z1};
  }
  return v;
}

}  // namespace

TEST_CASE("one interior node gives the 1x1 matrix [4/h^2]", "[operator]") {
  Grid g = build_grid(-1, 1, -1, 1, 3);
  auto H = assemble(g, VectorField2(g));
  REQUIRE(H.dim == 1);
  CHECK(H.entry(0, 0) == cdouble(4.0, 0.0));
}

TEST_CASE("A=0 reduces to the real 5-point Laplacian", "[operator]") {
  Grid g = build_grid(-1, 1, -1, 1, 9);
  auto H = assemble(g, VectorField2(g));
  const double ih2 = 1.0 / (g.h * g.h);
  const int mx = g.nx - 2;
  for (int p = 0; p < H.dim; ++p) {
    int nnz = H.row_ptr[p + 1] - H.row_ptr[p];
    CHECK(nnz <= 5);
    for (int k = H.row_ptr[p]; k < H.row_ptr[p + 1]; ++k) {
      int q = H.col[k];
      if (q == p) CHECK(H.val[k] == cdouble(4.0 * ih2, 0.0));
      else {
        CHECK((std::abs(q - p) == 1 || std::abs(q - p) == mx));
        CHECK(H.val[k] == cdouble(-ih2, 0.0));
      }
    }
  }
}

TEST_CASE("stored entries are conjugate-symmetric bit for bit", "[operator]") {
  Grid g = build_grid(-1, 1, -1, 1, 17);
  auto A = sample_field_fn([](double x, double y) {
    return std::pair<double, double>(-3 * (x * x + y * y), 2 * x * y);
  }, g);
  auto H = assemble(g, A);
  for (int p = 0; p < H.dim; ++p)
    for (int k = H.row_ptr[p]; k < H.row_ptr[p + 1]; ++k) {
      int q = H.col[k];
      cdouble back = H.entry(q, p);
      REQUIRE(back.real() == H.val[k].real());
      REQUIRE(back.imag() == -H.val[k].imag());
    }
}

TEST_CASE("Rayleigh quotients are real and nonnegative", "[operator]") {
  Grid g = build_grid(-1, 1, -1, 1, 13);
  auto A = sample_field_fn([](double x, double y) {
    return std::pair<double, double>(5 * y, -5 * x * x);
  }, g);
  auto V = sample_scalar_fn([](double x, double y) {
    return 3.0 + x + y;  // >= 1 on the closed square
  }, g);
  auto H = assemble(g, A, &V);
  double hnorm = H.gershgorin_upper();
  std::vector<cdouble> w(H.dim);
  for (int trial = 0; trial < 100; ++trial) {
    auto v = random_vec(H.dim, 100 + trial);
    H.apply(v, w);
    cdouble q = 0;
    double n2 = 0;
    for (int p = 0; p < H.dim; ++p) {
      q += std::conj(v[p]) * w[p];
      n2 += std::norm(v[p]);
    }
    REQUIRE(q.real() >= 0.0);
    REQUIRE(std::abs(q.imag()) <= 1e-13 * n2 * hnorm);
  }
}

TEST_CASE("apply picks out matrix columns", "[operator]") {
  Grid g = build_grid(-1, 1, -1, 1, 7);
  auto A = sample_field_fn([](double x, double y) {
    return std::pair<double, double>(y, x * y);
  }, g);
  auto H = assemble(g, A);
  std::vector<cdouble> e(H.dim, 0.0), col(H.dim);
  e[1] = 1.0;
  H.apply(e, col);
  for (int p = 0; p < H.dim; ++p) CHECK(col[p] == H.entry(p, 1));
  std::vector<cdouble> bad(H.dim + 1);
  std::vector<cdouble> out;
  CHECK_THROWS_AS(H.apply(bad, out), config_error);
}

TEST_CASE("discrete sine modes are exact eigenvectors of the A=0 operator",
          "[operator]") {
  Grid g = build_grid(-1, 1, -1, 1, 17);
  auto H = assemble(g, VectorField2(g));
  const int m = g.nx - 2;
  for (int pp : {1, 2}) {
    for (int qq : {1, 3}) {
      std::vector<cdouble> mode(H.dim), out(H.dim);
      for (int q = 0; q < H.dim; ++q) {
        int i, j;
        g.interior_coords(q, i, j);
        mode[q] = std::sin(pp * M_PI * i / (m + 1.0)) *
                  std::sin(qq * M_PI * j / (m + 1.0));
      }
      double lam = 4.0 / (g.h * g.h) *
                   (std::pow(std::sin(pp * M_PI * g.h / 4), 2) +
                    std::pow(std::sin(qq * M_PI * g.h / 4), 2));
      H.apply(mode, out);
      for (int q = 0; q < H.dim; ++q)
        CHECK(std::abs(out[q] - lam * mode[q]) <= 1e-9);
    }
  }
}

TEST_CASE("quadratic gauge shifts conjugate the operator exactly",
          "[operator]") {
  Grid g = build_grid(-1, 1, -1, 1, 21);
  double a = 4.0;
  auto field = [a](double x, double y) {
    return std::pair<double, double>(-a * (x * x + y * y),
                                     -a * (x * x - y * y));
  };
  auto gauge = [](double x, double y) { return x * x - y * y + x * y; };
  auto grad_gauge = [](double x, double y) {
    return std::pair<double, double>(2 * x + y, -2 * y + x);
  };
  auto H = assemble_fn(g, field);
  auto Hg = assemble_fn(g, [&](double x, double y) {
    auto [ax, ay] = field(x, y);
    auto [gx, gy] = grad_gauge(x, y);
    return std::pair<double, double>(ax + gx, ay + gy);
  });
  // H(A + grad g) = D H(A) D^H with D = diag(exp(i g)); the midpoint rule is
  // exact for the linear grad g, so equality holds to rounding.
  double ih2 = 1.0 / (g.h * g.h);
  for (int p = 0; p < H.dim; ++p) {
    int pi, pj;
    g.interior_coords(p, pi, pj);
    double gp = gauge(g.x(pi), g.y(pj));
    for (int k = H.row_ptr[p]; k < H.row_ptr[p + 1]; ++k) {
      int q = H.col[k];
      int qi, qj;
      g.interior_coords(q, qi, qj);
      double gq = gauge(g.x(qi), g.y(qj));
      cdouble want = std::exp(cdouble(0, gp)) * H.val[k] *
                     std::exp(cdouble(0, -gq));
      CHECK(std::abs(Hg.entry(p, q) - want) <= 1e-12 * ih2);
    }
  }
}

TEST_CASE("negative potentials are rejected", "[operator]") {
  Grid g = build_grid(-1, 1, -1, 1, 7);
  auto V = sample_scalar_fn([](double x, double) { return x; }, g);
  CHECK_THROWS_AS(assemble(g, VectorField2(g), &V), config_error);
}

TEST_CASE("grid mismatch is rejected", "[operator]") {
  Grid g = build_grid(-1, 1, -1, 1, 7);
  Grid g2 = build_grid(-1, 1, -1, 1, 9);
  VectorField2 A(g2);
  CHECK_THROWS_AS(assemble(g, A), config_error);
}

TEST_CASE("matrix market export holds the lower triangle", "[operator]") {
  Grid g = build_grid(-1, 1, -1, 1, 7);
  auto A = sample_field_fn([](double x, double y) {
    return std::pair<double, double>(y, -x);
  }, g);
  auto H = assemble(g, A);
  std::string path = "mm_test.mtx";
  H.write_matrix_market(path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "%%MatrixMarket matrix coordinate complex hermitian");
  int rows, cols;
  size_t nnz;
  in >> rows >> cols >> nnz;
  CHECK(rows == H.dim);
  CHECK(cols == H.dim);
  size_t seen = 0;
  int r, c;
  double re, im;
  while (in >> r >> c >> re >> im) {
    REQUIRE(r >= c);  // lower triangle, 1-based
    cdouble want = H.entry(r - 1, c - 1);
    REQUIRE(re == Catch::Approx(want.real()).margin(0));
    REQUIRE(im == Catch::Approx(want.imag()).margin(0));
    ++seen;
  }
  CHECK(seen == nnz);
  std::remove(path.c_str());
}
