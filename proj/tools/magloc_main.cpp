#include <CLI11.hpp>

#include "magloc/pipeline.hpp"

using namespace magloc;

namespace {

struct FlagSet {
  std::string config;
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  int n = 0;
  std::string field, ax, ay, v;
  double a = 0, b = 0;
  int k = 0;
  double tol = 0;
  int max_iter = 0;
  uint64_t seed = 0;
  std::string precond;
  int paths = 0, steps = 0, targets = 0;
  std::string t_factors;
  double quantile = 0;
  std::string out;
  bool export_mm = false;
  int threads = 0;

  CLI::Option *o_xmin = nullptr, *o_xmax = nullptr, *o_ymin = nullptr,
              *o_ymax = nullptr, *o_n = nullptr, *o_field = nullptr,
              *o_ax = nullptr, *o_ay = nullptr, *o_v = nullptr, *o_a = nullptr,
              *o_b = nullptr, *o_k = nullptr, *o_tol = nullptr,
              *o_max_iter = nullptr, *o_seed = nullptr, *o_precond = nullptr,
              *o_paths = nullptr, *o_steps = nullptr, *o_targets = nullptr,
              *o_tf = nullptr, *o_quantile = nullptr, *o_out = nullptr,
              *o_mm = nullptr, *o_threads = nullptr;
};

void attach(CLI::App* sub, FlagSet& f) {
  sub->add_option("--config", f.config, "INI config file");
  f.o_xmin = sub->add_option("--xmin", f.xmin, "domain lower x bound");
  f.o_xmax = sub->add_option("--xmax", f.xmax, "domain upper x bound");
  f.o_ymin = sub->add_option("--ymin", f.ymin, "domain lower y bound");
  f.o_ymax = sub->add_option("--ymax", f.ymax, "domain upper y bound");
  f.o_n = sub->add_option("--n", f.n, "grid nodes per side");
  f.o_field = sub->add_option("--field", f.field,
                              "builtin field: example1|example3|example4|uniform|zero");
  f.o_ax = sub->add_option("--ax", f.ax, "x-component expression");
  f.o_ay = sub->add_option("--ay", f.ay, "y-component expression");
  f.o_v = sub->add_option("--V", f.v, "scalar potential expression (>= 0)");
  f.o_a = sub->add_option("--a", f.a, "builtin field amplitude");
  f.o_b = sub->add_option("--B", f.b, "uniform field strength");
  f.o_k = sub->add_option("--k", f.k, "number of eigenpairs");
  f.o_tol = sub->add_option("--tol", f.tol, "solver relative residual");
  f.o_max_iter = sub->add_option("--max-iter", f.max_iter, "solver iteration cap");
  f.o_seed = sub->add_option("--seed", f.seed, "RNG seed");
  f.o_precond = sub->add_option("--precond", f.precond,
                                "preconditioner: auto|chebyshev|jacobi");
  f.o_paths = sub->add_option("--paths", f.paths, "Monte Carlo paths per target");
  f.o_steps = sub->add_option("--steps", f.steps, "bridge time steps");
  f.o_targets = sub->add_option("--targets", f.targets, "targets per side");
  f.o_tf = sub->add_option("--t-factors", f.t_factors,
                           "comma list of c in t = c/lambda");
  f.o_quantile = sub->add_option("--quantile", f.quantile, "curl sublevel quantile");
  f.o_out = sub->add_option("--out", f.out,
                            "output directory (default $MAGLOC_OUT or ./out)");
  f.o_mm = sub->add_flag("--export-mm", f.export_mm,
                         "write the operator in Matrix Market format");
  f.o_threads = sub->add_option("--threads", f.threads, "worker threads");
}

RunConfig build_config(const FlagSet& f) {
  RunConfig cfg;
  if (!f.config.empty()) load_config_file(cfg, f.config);
  if (f.o_xmin->count()) cfg.xmin = f.xmin;
  if (f.o_xmax->count()) cfg.xmax = f.xmax;
  if (f.o_ymin->count()) cfg.ymin = f.ymin;
  if (f.o_ymax->count()) cfg.ymax = f.ymax;
  if (f.o_n->count()) cfg.n = f.n;
  if (f.o_field->count()) cfg.builtin = f.field;
  if (f.o_ax->count()) cfg.ax_expr = f.ax;
  if (f.o_ay->count()) cfg.ay_expr = f.ay;
  if (f.o_v->count()) cfg.v_expr = f.v;
  if (f.o_a->count()) cfg.a = f.a;
  if (f.o_b->count()) cfg.b = f.b;
  if (f.o_k->count()) cfg.k = f.k;
  if (f.o_tol->count()) cfg.tol = f.tol;
  if (f.o_max_iter->count()) cfg.max_iter = f.max_iter;
  if (f.o_seed->count()) cfg.seed = f.seed;
  if (f.o_precond->count()) cfg.preconditioner = f.precond;
  if (f.o_paths->count()) cfg.mc_paths = f.paths;
  if (f.o_steps->count()) cfg.mc_steps = f.steps;
  if (f.o_targets->count()) cfg.mc_targets = f.targets;
  if (f.o_tf->count()) cfg.t_factors = detail::parse_double_list(f.t_factors);
  if (f.o_quantile->count()) cfg.quantile = f.quantile;
  if (f.o_out->count()) cfg.out_dir = f.out;
  if (f.o_mm->count()) cfg.export_mm = true;
  if (f.o_threads->count()) cfg.threads = f.threads;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"magloc: eigenpairs and localization diagnostics for the 2D "
               "magnetic Laplacian (-i grad - A)^2 with Dirichlet walls"};
  app.require_subcommand(1);

  FlagSet fs, fd, fv, fl, fp, fr;
  auto* solve = app.add_subcommand("solve", "assemble H(A[,V]) and compute eigenpairs");
  attach(solve, fs);
  auto* decomp = app.add_subcommand("decompose", "Helmholtz split A = grad(phi) + F");
  attach(decomp, fd);
  auto* verify = app.add_subcommand("verify-theorem",
                                    "path-integral inequality and near-deterministic fractions");
  attach(verify, fv);
  auto* land = app.add_subcommand("landscape", "torsion bound and its refinement");
  attach(land, fl);
  auto* pred = app.add_subcommand("predict", "curl sublevel predictor");
  attach(pred, fp);
  auto* repo = app.add_subcommand("report", "aggregate artifacts into report.json");
  attach(repo, fr);

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(build_config(fs));
    if (decomp->parsed()) return cmd_decompose(build_config(fd));
    if (verify->parsed()) return cmd_verify_theorem(build_config(fv));
    if (land->parsed()) return cmd_landscape(build_config(fl));
    if (pred->parsed()) return cmd_predict(build_config(fp));
    if (repo->parsed()) return cmd_report(build_config(fr));
  } catch (const config_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const numeric_error& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "failure: %s\n", e.what());
    return 2;
  }
  return 0;
}
