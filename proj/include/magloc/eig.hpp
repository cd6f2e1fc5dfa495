#pragma once

#include <Eigen/Dense>
#include <string>

#include "magloc/operator.hpp"
#include "magloc/rng.hpp"

namespace magloc {

struct EigenPair {
  double lambda = 0;
  std::vector<cdouble> psi;  // interior nodes, unit norm in h^2-weighted L2
  double residual = 0;
};

struct EigOptions {
  std::string preconditioner = "auto";  // auto | chebyshev | jacobi
  int cheb_degree = 0;                  // 0 = pick from the spectral range
  int guard = 3;
  int dense_threshold = 600;
};

struct EigResult {
  std::vector<EigenPair> pairs;
  bool converged = false;
  int iterations = 0;
};

namespace detail {

inline void apply_block(const HermitianOperator& H, const Eigen::MatrixXcd& X,
                        Eigen::MatrixXcd& Y, int threads) {
  const int cols = (int)X.cols();
  Y.resize(H.dim, cols);
  const int chunk = 1 << 16;
  const int nchunks = (H.dim + chunk - 1) / chunk;
  parallel_blocks(cols * nchunks, threads, [&](int b) {
    int c = b / nchunks, r = (b % nchunks) * chunk;
    int r1 = std::min(r + chunk, H.dim);
    H.apply_rows(X.col(c).data(), Y.col(c).data(), r, r1);
  });
}

}  // namespace detail

// Chebyshev filter: overwrites B with p(H) B where p amplifies [0, cut)
// relative to [cut, ub], normalized so p(0) = 1.
inline void cheb_filter_block(const HermitianOperator& H, Eigen::MatrixXcd& B,
                              int degree, double cut, double ub, int threads) {
  using Eigen::MatrixXcd;
  const double e = 0.5 * (ub - cut), c = 0.5 * (ub + cut);
  const double sigma1 = e / c;
  double sigma = sigma1;
  MatrixXcd Y, T;
  detail::apply_block(H, B, Y, threads);
  Y = ((Y - c * B) * (sigma1 / e)).eval();
  for (int j = 2; j <= degree; ++j) {
    double sigma_new = 1.0 / (2.0 / sigma1 - sigma);
    detail::apply_block(H, Y, T, threads);
    T = ((T - c * Y) * (2.0 * sigma_new / e) - (sigma * sigma_new) * B).eval();
    B.swap(Y);
    Y.swap(T);
    sigma = sigma_new;
  }
  B.swap(Y);
}

// Block LOBPCG with Rayleigh-Ritz over [X W P], soft locking, and either a
// Chebyshev filter or the diagonal as preconditioner.  Deterministic for a
// fixed seed at any thread count.
inline EigResult smallest_eigenpairs(const HermitianOperator& H, int k,
                                     double tol = 1e-8, int max_iter = 300,
                                     uint64_t seed = 1, EigOptions opts = {},
                                     int threads = 1) {
  using Eigen::MatrixXcd;
  using detail::apply_block;
  if (k < 1 || k > H.dim)
    throw config_error("smallest_eigenpairs: need 1 <= k <= dim");
  if (!(tol > 0)) throw config_error("smallest_eigenpairs: tol must be > 0");

  const int dim = H.dim;
  const double scale_to_l2 = 1.0 / H.h;

  auto make_pairs = [&](const MatrixXcd& X, const Eigen::VectorXd& lam,
                        EigResult& out) {
    std::vector<cdouble> hx(dim);
    out.pairs.resize(k);
    for (int i = 0; i < k; ++i) {
      H.apply(X.col(i).data(), hx.data());
      double rn = 0;
      for (int p = 0; p < dim; ++p) rn += std::norm(hx[p] - lam[i] * X(p, i));
      auto& pr = out.pairs[i];
      pr.lambda = lam[i];
      pr.residual = std::sqrt(rn) / std::max(lam[i], 1.0);
      pr.psi.resize(dim);
      for (int p = 0; p < dim; ++p) pr.psi[p] = X(p, i) * scale_to_l2;
    }
  };

  const int m = std::min(k + opts.guard, dim);

  if (dim <= std::max(opts.dense_threshold, 4 * m)) {
    MatrixXcd D = MatrixXcd::Zero(dim, dim);
    for (int p = 0; p < dim; ++p)
      for (int t = H.row_ptr[p]; t < H.row_ptr[p + 1]; ++t)
        D(p, H.col[t]) = H.val[t];
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(D);
    EigResult out;
    out.converged = true;
    MatrixXcd X = es.eigenvectors().leftCols(k);
    Eigen::VectorXd lam = es.eigenvalues().head(k);
    make_pairs(X, lam, out);
    return out;
  }

  const double gersh = H.gershgorin_upper();
  const bool use_cheb = opts.preconditioner != "jacobi";

  auto mgs_self = [](MatrixXcd& B, MatrixXcd& HB) {
    int kept = 0;
    for (int j = 0; j < B.cols(); ++j) {
      Eigen::VectorXcd v = B.col(j), hv = HB.col(j);
      double n0 = v.norm();
      if (n0 == 0) continue;
      for (int pass = 0; pass < 2; ++pass)
        for (int i = 0; i < kept; ++i) {
          cdouble c = B.col(i).dot(v);
          v -= c * B.col(i);
          hv -= c * HB.col(i);
        }
      double n1 = v.norm();
      if (n1 < 1e-8 * n0 || n1 == 0) continue;
      B.col(kept) = v / n1;
      HB.col(kept) = hv / n1;
      ++kept;
    }
    B.conservativeResize(Eigen::NoChange, kept);
    HB.conservativeResize(Eigen::NoChange, kept);
  };
  auto project_out = [](const MatrixXcd& Q, const MatrixXcd& HQ, MatrixXcd& B,
                        MatrixXcd& HB) {
    if (Q.cols() == 0 || B.cols() == 0) return;
    MatrixXcd C = Q.adjoint() * B;
    B.noalias() -= Q * C;
    HB.noalias() -= HQ * C;
  };

  // Seeded start; stream = column, step = row.
  MatrixXcd X(dim, m);
  for (int c = 0; c < m; ++c)
    for (int p = 0; p < dim; ++p) {
      double z0, z1;
      normal_pair(seed, (uint64_t)c << 32, p, z0, z1);
      X(p, c) = cdouble(z0, z1);
    }
  {
    MatrixXcd Xcopy = X;  // lockstep partner so mgs_self can be reused
    mgs_self(X, Xcopy);
  }
  MatrixXcd HX;
  apply_block(H, X, HX, threads);

  MatrixXcd P(dim, 0), HP(dim, 0);
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(m);
  EigResult out;
  std::vector<double> res(m, 1.0);

  for (int it = 0; it < max_iter; ++it) {
    out.iterations = it + 1;
    {
      MatrixXcd G = X.adjoint() * HX;
      G = (cdouble(0.5, 0) * (G + G.adjoint())).eval();
      Eigen::SelfAdjointEigenSolver<MatrixXcd> es(G);
      MatrixXcd C = es.eigenvectors();
      lam = es.eigenvalues();
      X = (X * C).eval();
      HX = (HX * C).eval();
    }
    MatrixXcd R = HX - X * lam.asDiagonal();
    double worst = 0;
    for (int i = 0; i < m; ++i) {
      res[i] = R.col(i).norm() / std::max(lam[i], 1.0);
      if (i < k) worst = std::max(worst, res[i]);
    }
    if (worst <= tol) {
      out.converged = true;
      break;
    }

    std::vector<int> active;
    for (int i = 0; i < m; ++i)
      if (res[i] > 0.1 * tol) active.push_back(i);
    MatrixXcd W(dim, (int)active.size());

    if (use_cheb) {
      // Filter the active Ritz vectors; the X-projection below then leaves
      // the amplified correction directions.
      for (size_t a = 0; a < active.size(); ++a) W.col(a) = X.col(active[a]);
      double cut = std::clamp(lam[m - 1] * 1.1, 1e-10 * gersh, 0.5 * gersh);
      int deg = opts.cheb_degree > 0
                    ? opts.cheb_degree
                    : std::clamp((int)std::ceil(3.5 * std::sqrt(gersh / cut)),
                                 8, 600);
      cheb_filter_block(H, W, deg, cut, gersh, threads);
    } else {
      for (size_t a = 0; a < active.size(); ++a) W.col(a) = R.col(active[a]);
      Eigen::VectorXd diag(dim);
      for (int p = 0; p < dim; ++p)
        for (int t = H.row_ptr[p]; t < H.row_ptr[p + 1]; ++t)
          if (H.col[t] == p) diag[p] = H.val[t].real();
      W.array().colwise() /= diag.array();
    }
    MatrixXcd HW;
    apply_block(H, W, HW, threads);

    project_out(X, HX, W, HW);
    project_out(X, HX, W, HW);
    mgs_self(W, HW);
    project_out(X, HX, P, HP);
    project_out(W, HW, P, HP);
    mgs_self(P, HP);
    // Column normalization above can amplify stale recombination error, so
    // refresh the products before they enter the Gram matrix.
    if (W.cols() > 0) apply_block(H, W, HW, threads);
    if (P.cols() > 0) apply_block(H, P, HP, threads);

    const int nw = (int)W.cols(), np = (int)P.cols();
    const int ns = m + nw + np;
    MatrixXcd S(dim, ns), HS(dim, ns);
    S.leftCols(m) = X;
    HS.leftCols(m) = HX;
    if (nw) {
      S.middleCols(m, nw) = W;
      HS.middleCols(m, nw) = HW;
    }
    if (np) {
      S.rightCols(np) = P;
      HS.rightCols(np) = HP;
    }
    MatrixXcd G = S.adjoint() * HS;
    G = (cdouble(0.5, 0) * (G + G.adjoint())).eval();
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(G);
    MatrixXcd C = es.eigenvectors().leftCols(m);
    lam = es.eigenvalues().head(m);
    X = (S * C).eval();
    apply_block(H, X, HX, threads);
    if (ns > m) {
      MatrixXcd Cwp = C.bottomRows(ns - m);
      P = (S.rightCols(ns - m) * Cwp).eval();
      HP = (HS.rightCols(ns - m) * Cwp).eval();
    } else {
      P.resize(dim, 0);
      HP.resize(dim, 0);
    }
  }

  make_pairs(X, lam, out);
  return out;
}

// Interior node where |psi| peaks; ties resolved by the smaller index.
inline std::pair<double, double> localization_point(const EigenPair& pair,
                                                    const Grid& g) {
  int best = 0;
  double bestv = -1;
  for (int p = 0; p < (int)pair.psi.size(); ++p) {
    double v = std::abs(pair.psi[p]);
    if (v > bestv) {
      bestv = v;
      best = p;
    }
  }
  int i, j;
  g.interior_coords(best, i, j);
  return {g.x(i), g.y(j)};
}

}  // namespace magloc
