#pragma once

#include <cstdlib>
#include <map>
#include <sstream>
#include <vector>

#include "magloc/expr.hpp"
#include "magloc/io.hpp"
#include "magloc/parallel.hpp"

namespace magloc {

struct RunConfig {
  // [domain]
  double xmin = -1, xmax = 1, ymin = -1, ymax = 1;
  int n = 129;
  // [field]
  std::string builtin;  // example1 | example3 | example4 | uniform | (empty)
  double a = 50;
  double b = 1;  // uniform-field strength
  std::string ax_expr, ay_expr, v_expr;
  // [solver]
  int k = 4;
  double tol = 1e-8;
  int max_iter = 300;
  uint64_t seed = 1;
  std::string preconditioner = "auto";
  // [mc]
  int mc_paths = 10000;
  int mc_steps = 256;
  int mc_targets = 15;
  std::vector<double> t_factors = {0.25, 1.0};
  double quantile = 0.1;
  int cor3_paths = 1500;
  int cor3_cells = 9;
  int cor3_time_nodes = 24;
  int dirichlet_n = 65;   // auxiliary grid for torsion/heat-kernel spectra
  int dirichlet_k = 100;
  // [output]
  std::string out_dir;
  bool export_mm = false;
  int threads = 0;  // 0 = hardware default

  int effective_threads() const {
    return threads > 0 ? threads : default_threads();
  }

  std::string resolved_out_dir() const {
    if (!out_dir.empty()) return out_dir;
    const char* env = std::getenv("MAGLOC_OUT");
    return env && *env ? env : "out";
  }

  // Final component expressions with builtin parameters baked in.
  std::pair<std::string, std::string> field_expressions() const {
    if (builtin.empty()) {
      if (ax_expr.empty() || ay_expr.empty())
        throw config_error("field: need builtin or both ax and ay expressions");
      return {ax_expr, ay_expr};
    }
    std::string as = "(" + fmt17(a) + ")", bs = "(" + fmt17(b) + ")";
    if (builtin == "example1")
      return {"-" + as + "*(x^2+y^2)", "-" + as + "*(x^2-y^2)"};
    if (builtin == "example3")
      return {"-" + as + "*cos(5*pi*sin(x^2+y^2))",
              "-" + as + "*sin(5*pi*sin(x^2+y^2))"};
    if (builtin == "example4")
      return {"-" + as + "*cos(pi*sin(pi*x)*cos(pi*y))",
              "-" + as + "*sin(pi*sin(pi*x)*cos(pi*y))"};
    if (builtin == "uniform")
      return {"-" + bs + "/2*y", bs + "/2*x"};
    if (builtin == "zero") return {"0", "0"};
    throw config_error("field: unknown builtin '" + builtin + "'");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  return out;
}

}  // namespace detail

// Flat INI: [domain] [field] [solver] [mc] [output] sections, key = value.
inline void apply_ini(RunConfig& cfg, const std::string& text,
                      const std::string& origin = "config") {
  std::stringstream ss(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw config_error(origin + ":" + std::to_string(lineno) +
                           ": malformed section header");
      section = detail::trim(t.substr(1, t.size() - 2));
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw config_error(origin + ":" + std::to_string(lineno) +
                         ": expected key = value");
    std::string key = detail::trim(t.substr(0, eq));
    std::string val = detail::trim(t.substr(eq + 1));
    std::string skey = section + "." + key;
    try {
      if (skey == "domain.xmin") cfg.xmin = std::stod(val);
      else if (skey == "domain.xmax") cfg.xmax = std::stod(val);
      else if (skey == "domain.ymin") cfg.ymin = std::stod(val);
      else if (skey == "domain.ymax") cfg.ymax = std::stod(val);
      else if (skey == "domain.n") cfg.n = std::stoi(val);
      else if (skey == "field.builtin") cfg.builtin = val;
      else if (skey == "field.a") cfg.a = std::stod(val);
      else if (skey == "field.b") cfg.b = std::stod(val);
      else if (skey == "field.ax") cfg.ax_expr = val;
      else if (skey == "field.ay") cfg.ay_expr = val;
      else if (skey == "field.v") cfg.v_expr = val;
      else if (skey == "solver.k") cfg.k = std::stoi(val);
      else if (skey == "solver.tol") cfg.tol = std::stod(val);
      else if (skey == "solver.max_iter") cfg.max_iter = std::stoi(val);
      else if (skey == "solver.seed") cfg.seed = std::stoull(val);
      else if (skey == "solver.preconditioner") cfg.preconditioner = val;
      else if (skey == "mc.paths") cfg.mc_paths = std::stoi(val);
      else if (skey == "mc.steps") cfg.mc_steps = std::stoi(val);
      else if (skey == "mc.targets") cfg.mc_targets = std::stoi(val);
      else if (skey == "mc.t_factors") cfg.t_factors = detail::parse_double_list(val);
      else if (skey == "mc.quantile") cfg.quantile = std::stod(val);
      else if (skey == "mc.cor3_paths") cfg.cor3_paths = std::stoi(val);
      else if (skey == "mc.cor3_cells") cfg.cor3_cells = std::stoi(val);
      else if (skey == "mc.cor3_time_nodes") cfg.cor3_time_nodes = std::stoi(val);
      else if (skey == "mc.dirichlet_n") cfg.dirichlet_n = std::stoi(val);
      else if (skey == "mc.dirichlet_k") cfg.dirichlet_k = std::stoi(val);
      else if (skey == "output.dir") cfg.out_dir = val;
      else if (skey == "output.export_mm")
        cfg.export_mm = (val == "true" || val == "1" || val == "yes");
      else if (skey == "output.threads") cfg.threads = std::stoi(val);
      else
        throw config_error(origin + ":" + std::to_string(lineno) +
                           ": unknown key '" + skey + "'");
    } catch (const config_error&) {
      throw;
    } catch (const std::exception&) {
      throw config_error(origin + ":" + std::to_string(lineno) +
                         ": bad value for '" + skey + "'");
    }
  }
}

inline void load_config_file(RunConfig& cfg, const std::string& path) {
  apply_ini(cfg, read_text_file(path), path);
}

}  // namespace magloc
