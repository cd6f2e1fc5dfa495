#pragma once

#include <chrono>
#include <filesystem>

#include <json.hpp>

#include "magloc/config.hpp"
#include "magloc/landscape.hpp"
#include "magloc/predict.hpp"

namespace magloc {

using nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

// Collects artifacts, stage wall times, and warnings; written last so it can
// checksum everything.  Wall times make the manifest the one output that is
// not byte-reproducible.
class Manifest {
 public:
  Manifest(const RunConfig& cfg, std::string dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
    auto [ax, ay] = cfg.field_expressions();
    config_ = {{"domain", {{"xmin", cfg.xmin}, {"xmax", cfg.xmax},
                           {"ymin", cfg.ymin}, {"ymax", cfg.ymax}, {"n", cfg.n}}},
               {"field", {{"builtin", cfg.builtin}, {"a", cfg.a}, {"b", cfg.b},
                          {"ax", ax}, {"ay", ay}, {"v", cfg.v_expr}}},
               {"solver", {{"k", cfg.k}, {"tol", cfg.tol},
                           {"max_iter", cfg.max_iter}, {"seed", cfg.seed},
                           {"preconditioner", cfg.preconditioner}}},
               {"mc", {{"paths", cfg.mc_paths}, {"steps", cfg.mc_steps},
                       {"targets", cfg.mc_targets}, {"quantile", cfg.quantile},
                       {"t_factors", cfg.t_factors}}},
               {"output", {{"dir", dir_}, {"threads", cfg.effective_threads()}}}};
  }

  const std::string& dir() const { return dir_; }

  std::string path(const std::string& name) const { return dir_ + "/" + name; }

  void add_file(const std::string& name) { files_.push_back(name); }

  void write_json_artifact(const std::string& name, const json& j) {
    write_text_file(path(name), j.dump(2) + "\n");
    add_file(name);
  }

  void warn(const std::string& msg) {
    warnings_.push_back(msg);
    std::fprintf(stderr, "warning: %s\n", msg.c_str());
  }

  void stage_done(const std::string& name, double seconds) {
    stages_.push_back({{"stage", name}, {"seconds", seconds}});
  }

  void finalize() {
    json inventory = json::array();
    for (const auto& f : files_)
      inventory.push_back({{"file", f}, {"sha256", Sha256::of_file(path(f))}});
    json m = {{"version", kVersion},
              {"config", config_},
              {"warnings", warnings_},
              {"stages", stages_},
              {"files", inventory}};
    write_text_file(path("manifest.json"), m.dump(2) + "\n");
  }

 private:
  std::string dir_;
  json config_;
  std::vector<std::string> warnings_;
  json stages_ = json::array();
  std::vector<std::string> files_;
};

class StageTimer {
 public:
  StageTimer(Manifest& m, std::string name)
      : m_(m), name_(std::move(name)),
        t0_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    m_.stage_done(name_, std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - t0_).count());
  }

 private:
  Manifest& m_;
  std::string name_;
  std::chrono::steady_clock::time_point t0_;
};

struct SolveArtifacts {
  Grid grid;
  FieldExpression ax, ay;
  VectorField2 a;
  std::optional<ScalarField> potential;
  HermitianOperator op;
  EigResult eig;
};

// Shared solve stage: grid + field + operator + eigenpairs.
inline SolveArtifacts run_solve_stage(const RunConfig& cfg,
                                      Manifest* manifest = nullptr) {
  SolveArtifacts art;
  art.grid = build_grid(cfg.xmin, cfg.xmax, cfg.ymin, cfg.ymax, cfg.n);
  auto [axs, ays] = cfg.field_expressions();
  art.ax = parse_expression(axs);
  art.ay = parse_expression(ays);
  art.a = sample_field(art.ax, art.ay, art.grid);
  const ScalarField* vptr = nullptr;
  if (!cfg.v_expr.empty()) {
    art.potential = sample_scalar(parse_expression(cfg.v_expr), art.grid);
    for (double v : art.potential->values)
      if (v < 0) throw config_error("potential must be nonnegative");
    vptr = &*art.potential;
  }
  double phase_scale = art.a.max_norm() * art.grid.h;
  if (phase_scale > 0.5 && manifest)
    manifest->warn("max|A|*h = " + fmt17(phase_scale) +
                   " exceeds 0.5; refine the grid for reliable accuracy");
  art.op = assemble(art.grid, art.ax, art.ay, vptr);
  EigOptions opts;
  opts.preconditioner = cfg.preconditioner;
  art.eig = smallest_eigenpairs(art.op, cfg.k, cfg.tol, cfg.max_iter, cfg.seed,
                                opts, cfg.effective_threads());
  return art;
}

inline ScalarField abs_field(const Grid& g, const std::vector<cdouble>& psi,
                             int part /*0 abs, 1 re, 2 im*/) {
  ScalarField f(g);
  for (int q = 0; q < g.interior_count(); ++q) {
    int i, j;
    g.interior_coords(q, i, j);
    f.at(i, j) = part == 0 ? std::abs(psi[q])
                           : (part == 1 ? psi[q].real() : psi[q].imag());
  }
  return f;
}

inline json eig_json(const SolveArtifacts& art) {
  json lam = json::array(), resid = json::array(), locs = json::array();
  for (const auto& pr : art.eig.pairs) {
    lam.push_back(pr.lambda);
    resid.push_back(pr.residual);
    auto [x0, y0] = localization_point(pr, art.grid);
    locs.push_back({{"x", x0}, {"y", y0}});
  }
  return {{"lambdas", lam},
          {"residuals", resid},
          {"localization_points", locs},
          {"converged", art.eig.converged},
          {"iterations", art.eig.iterations}};
}

// solve: eigenpairs + field artifacts.  Returns the process exit code.
inline int cmd_solve(const RunConfig& cfg) {
  Manifest manifest(cfg, cfg.resolved_out_dir());
  SolveArtifacts art;
  {
    StageTimer t(manifest, "solve");
    art = run_solve_stage(cfg, &manifest);
  }
  manifest.write_json_artifact("lambdas.json", eig_json(art));
  {
    StageTimer t(manifest, "export");
    for (size_t i = 0; i < art.eig.pairs.size(); ++i) {
      const auto& psi = art.eig.pairs[i].psi;
      const char* names[3] = {"abs_psi", "re_psi", "im_psi"};
      for (int part = 0; part < 3; ++part) {
        auto f = abs_field(art.grid, psi, part);
        std::string base = std::string(names[part]) + "_" + std::to_string(i);
        write_scalar_csv(manifest.path(base + ".csv"), f, names[part]);
        manifest.add_file(base + ".csv");
        write_pgm(manifest.path(base + ".pgm"), f);
        manifest.add_file(base + ".pgm");
      }
    }
    if (cfg.export_mm) {
      art.op.write_matrix_market(manifest.path("operator.mtx"));
      manifest.add_file("operator.mtx");
    }
  }
  manifest.finalize();
  return art.eig.converged ? 0 : 2;
}

inline json helmholtz_json(const HelmholtzParts& parts) {
  return {{"div_residual_inf", parts.diag.div_residual_inf},
          {"div_a_inf", parts.diag.div_a_inf},
          {"fn_residual_inf", parts.diag.fn_residual_inf},
          {"recon_residual_inf", parts.diag.recon_residual_inf},
          {"cg_iterations", parts.diag.cg.iterations},
          {"cg_relative_residual", parts.diag.cg.relative_residual}};
}

inline int cmd_decompose(const RunConfig& cfg) {
  Manifest manifest(cfg, cfg.resolved_out_dir());
  Grid g = build_grid(cfg.xmin, cfg.xmax, cfg.ymin, cfg.ymax, cfg.n);
  auto [axs, ays] = cfg.field_expressions();
  auto a = sample_field(parse_expression(axs), parse_expression(ays), g);
  HelmholtzParts parts;
  {
    StageTimer t(manifest, "decompose");
    parts = helmholtz_decompose(a, cfg.tol);
  }
  manifest.write_json_artifact("helmholtz.json", helmholtz_json(parts));
  write_scalar_csv(manifest.path("phi.csv"), parts.phi, "phi");
  manifest.add_file("phi.csv");
  write_vector_csv(manifest.path("f.csv"), parts.f);
  manifest.add_file("f.csv");
  write_scalar_csv(manifest.path("curl_f.csv"), curl(parts.f), "curl_f");
  manifest.add_file("curl_f.csv");
  write_scalar_csv(manifest.path("div_residual.csv"), divergence(parts.f),
                   "div_f");
  manifest.add_file("div_residual.csv");
  manifest.finalize();
  std::printf("decompose: div-residual %.3e (allowed %.3e), f.n %.3e\n",
              parts.diag.div_residual_inf,
              cfg.tol * (1 + parts.diag.div_a_inf),
              parts.diag.fn_residual_inf);
  return 0;
}

inline json theorem_json(const TheoremReport& rep) {
  json targets = json::array();
  for (const auto& tg : rep.targets)
    targets.push_back({{"y", {tg.yx, tg.yy}},
                       {"weight", tg.weight},
                       {"modulus", tg.modulus},
                       {"survival", tg.survival},
                       {"stderr", tg.stderr_mean},
                       {"n_effective", tg.n_effective},
                       {"skipped", tg.skipped}});
  return {{"t", rep.t},
          {"lambda", rep.lambda},
          {"x0", {rep.x0x, rep.x0y}},
          {"lhs", rep.lhs},
          {"lhs_gauss", rep.lhs_gauss},
          {"lhs_error_budget", rep.lhs_error_budget},
          {"rhs", rep.rhs},
          {"pass", rep.pass},
          {"pass_gauss", rep.pass_gauss},
          {"budget", {{"gauss_tail", rep.budget_tail},
                      {"mc", rep.budget_mc},
                      {"quadrature", rep.budget_quad},
                      {"skipped_targets", rep.budget_skipped}}},
          {"n_steps_used", rep.n_steps_used},
          {"zero_survivor_targets", rep.zero_survivor_targets},
          {"radius", rep.radius},
          {"targets", targets}};
}

inline json near_deterministic_json(const NearDeterministicReport& rep) {
  json targets = json::array();
  for (const auto& tg : rep.targets)
    targets.push_back({{"y", {tg.yx, tg.yy}},
                       {"window_prob", tg.window_prob},
                       {"survival", tg.survival},
                       {"near_deterministic", tg.near_deterministic},
                       {"unknown", tg.unknown}});
  return {{"t", rep.t},
          {"radius", rep.radius},
          {"x0", {rep.x0x, rep.x0y}},
          {"fraction", rep.fraction},
          {"n_targets", rep.n_targets},
          {"n_near_deterministic", rep.n_near_deterministic},
          {"n_unknown", rep.n_unknown},
          {"n_steps_used", rep.n_steps_used},
          {"targets", targets}};
}

// verify-theorem: inline solve + decompose, then the Main Theorem and the
// near-deterministic fraction at each t = c / lambda_1.
inline int cmd_verify_theorem(const RunConfig& cfg) {
  Manifest manifest(cfg, cfg.resolved_out_dir());
  RunConfig scfg = cfg;
  scfg.k = 1;
  SolveArtifacts art;
  {
    StageTimer t(manifest, "solve");
    art = run_solve_stage(scfg, &manifest);
  }
  if (!art.eig.converged) {
    manifest.finalize();
    return 2;
  }
  HelmholtzParts parts;
  {
    StageTimer t(manifest, "decompose");
    parts = helmholtz_decompose(art.a, cfg.tol);
  }
  const auto& pair = art.eig.pairs[0];
  McParams mc;
  mc.n_paths = cfg.mc_paths;
  mc.n_steps = cfg.mc_steps;
  mc.targets_per_side = cfg.mc_targets;
  mc.seed = cfg.seed;
  mc.threads = cfg.effective_threads();
  auto field = [&](double x, double y) { return parts.f.interp(x, y); };

  json reports = json::array(), cor1 = json::array();
  std::string hist_csv = "c,target,yx,yy";
  for (int b = 0; b < kHistogramBins; ++b)
    hist_csv += ",b" + std::to_string(b);
  hist_csv += "\n";
  bool all_pass = true;
  {
    StageTimer t(manifest, "verify");
    for (double c : cfg.t_factors) {
      double tt = c / pair.lambda;
      auto rep = verify_theorem(pair, art.grid, field, tt, mc);
      json rj = theorem_json(rep);
      rj["c"] = c;
      reports.push_back(rj);
      all_pass = all_pass && rep.pass;

      auto [x0, y0] = localization_point(pair, art.grid);
      McParams mc_h = mc;
      mc_h.keep_histograms = true;
      auto nd = near_deterministic_fraction(x0, y0, tt, field, art.grid, mc_h);
      json nj = near_deterministic_json(nd);
      nj["c"] = c;
      cor1.push_back(nj);
      for (size_t ti = 0; ti < nd.targets.size(); ++ti) {
        const auto& tg = nd.targets[ti];
        hist_csv += fmt17(c) + "," + std::to_string(ti) + "," + fmt17(tg.yx) +
                    "," + fmt17(tg.yy);
        for (uint32_t hv : tg.histogram) hist_csv += "," + std::to_string(hv);
        hist_csv += "\n";
      }
    }
  }
  manifest.write_json_artifact("theorem_report.json", reports);
  manifest.write_json_artifact("cor1_table.json", cor1);
  write_text_file(manifest.path("cor1_histograms.csv"), hist_csv);
  manifest.add_file("cor1_histograms.csv");
  manifest.finalize();
  return all_pass ? 0 : 3;
}

// landscape: torsion + Eq.(1) ratios + the Corollary-3 improved bound at the
// eigenfunction maxima and the domain center.
inline int cmd_landscape(const RunConfig& cfg) {
  Manifest manifest(cfg, cfg.resolved_out_dir());
  SolveArtifacts art;
  {
    StageTimer t(manifest, "solve");
    art = run_solve_stage(cfg, &manifest);
  }
  if (!art.eig.converged) {
    manifest.finalize();
    return 2;
  }
  ScalarField v;
  LandscapeReport rep;
  {
    StageTimer t(manifest, "torsion");
    v = torsion(art.grid);
    rep = landscape_check(art.eig.pairs, v);
  }
  write_scalar_csv(manifest.path("torsion.csv"), v, "v");
  manifest.add_file("torsion.csv");
  write_pgm(manifest.path("torsion.pgm"), v);
  manifest.add_file("torsion.pgm");

  json lj = {{"lambdas", rep.lambdas},
             {"ratios", rep.ratios},
             {"pass", rep.pass},
             {"tolerance", rep.tolerance}};

  {
    StageTimer t(manifest, "cor3");
    Grid dg = build_grid(cfg.xmin, cfg.xmax, cfg.ymin, cfg.ymax,
                         cfg.dirichlet_n);
    auto H0 = assemble(dg, VectorField2(dg));
    EigOptions opts;
    opts.preconditioner = cfg.preconditioner;
    auto dres = smallest_eigenpairs(H0, cfg.dirichlet_k, cfg.tol, cfg.max_iter,
                                    cfg.seed, opts, cfg.effective_threads());
    auto vd = torsion(dg);
    HelmholtzParts parts = helmholtz_decompose(art.a, cfg.tol);
    auto field = [&](double x, double y) { return parts.f.interp(x, y); };
    McParams mc;
    mc.n_paths = cfg.cor3_paths;
    mc.n_steps = cfg.mc_steps;
    mc.seed = cfg.seed;
    mc.threads = cfg.effective_threads();

    std::vector<std::pair<double, double>> probes;
    for (const auto& pr : art.eig.pairs)
      probes.push_back(localization_point(pr, art.grid));
    probes.push_back({0.5 * (cfg.xmin + cfg.xmax), 0.5 * (cfg.ymin + cfg.ymax)});

    json samples = json::array();
    bool ordered = true;
    for (auto [px, py] : probes) {
      auto ib = improved_landscape_bound(px, py, art.eig.pairs[0], field,
                                         dres.pairs, dg, vd, mc,
                                         cfg.cor3_cells, cfg.cor3_time_nodes);
      ordered = ordered && ib.improved <= ib.original * (1 + 1e-12);
      samples.push_back({{"x", ib.x},
                         {"y", ib.y},
                         {"original", ib.original},
                         {"improved", ib.improved},
                         {"integral_estimate", ib.integral_estimate},
                         {"v_at_x", ib.v_at_x},
                         {"budget", ib.budget}});
    }
    lj["improved_bound_samples"] = samples;
    lj["improved_ordered"] = ordered;
  }
  manifest.write_json_artifact("landscape_report.json", lj);
  manifest.finalize();
  return rep.pass ? 0 : 3;
}

inline int cmd_predict(const RunConfig& cfg) {
  Manifest manifest(cfg, cfg.resolved_out_dir());
  SolveArtifacts art;
  {
    StageTimer t(manifest, "solve");
    art = run_solve_stage(cfg, &manifest);
  }
  if (!art.eig.converged) {
    manifest.finalize();
    return 2;
  }
  PredictionReport rep;
  {
    StageTimer t(manifest, "predict");
    rep = corollary2_report(art.eig.pairs, art.a, cfg.quantile);
  }
  json rows = json::array();
  for (const auto& r : rep.rows)
    rows.push_back({{"lambda", r.lambda},
                    {"x0", {r.x0x, r.x0y}},
                    {"curl_at_x0", r.curl_at_x0},
                    {"lambda_sq", r.lambda_sq},
                    {"ratio", r.ratio},
                    {"percentile", r.percentile},
                    {"nonlinearity", r.nonlinearity},
                    {"nonlinearity_unreliable", r.nonlinearity_unreliable},
                    {"in_sublevel", r.in_sublevel},
                    {"near_boundary", r.near_boundary}});
  json pj = {{"rows", rows},
             {"quantile", rep.mask.quantile},
             {"threshold", rep.mask.threshold},
             {"degenerate_curl", rep.mask.degenerate},
             {"max_ratio", rep.max_ratio}};
  manifest.write_json_artifact("prediction_report.json", pj);

  auto curl_a = curl(art.a);
  write_scalar_csv(manifest.path("curl.csv"), curl_a, "curl");
  manifest.add_file("curl.csv");
  write_pgm(manifest.path("curl.pgm"), curl_a);
  manifest.add_file("curl.pgm");
  ScalarField maskf(art.grid);
  for (int q = 0; q < art.grid.interior_count(); ++q) {
    int i, j;
    art.grid.interior_coords(q, i, j);
    maskf.at(i, j) = rep.mask.mask[q];
  }
  write_pgm(manifest.path("mask.pgm"), maskf);
  manifest.add_file("mask.pgm");
  manifest.finalize();
  return 0;
}

// report: bundle every known JSON artifact in the output directory.
inline int cmd_report(const RunConfig& cfg) {
  std::string dir = cfg.resolved_out_dir();
  json agg = {{"version", kVersion}};
  const char* names[] = {"lambdas.json",         "helmholtz.json",
                         "theorem_report.json",  "cor1_table.json",
                         "landscape_report.json", "prediction_report.json"};
  json found = json::object();
  for (const char* name : names) {
    std::string p = dir + "/" + std::string(name);
    if (!std::filesystem::exists(p)) continue;
    found[name] = {{"content", json::parse(read_text_file(p))},
                   {"sha256", Sha256::of_file(p)}};
  }
  agg["artifacts"] = found;
  write_text_file(dir + "/report.json", agg.dump(2) + "\n");
  std::printf("report: aggregated %zu artifacts into %s/report.json\n",
              found.size(), dir.c_str());
  return 0;
}

}  // namespace magloc
