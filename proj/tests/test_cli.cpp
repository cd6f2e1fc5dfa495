#include <catch2/catch_amalgamated.hpp>
#include <cstdlib>
#include <filesystem>

#include <json.hpp>

#include "magloc/io.hpp"
#include "magloc/pipeline.hpp"

using namespace magloc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  std::string cmd = std::string(MAGLOC_CLI_PATH) + " " + args + " 2>cli_stderr.txt";
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("solve writes eigen artifacts with a checksummed manifest",
          "[cli]") {
  TempDir dir("cli_solve_out");
  int rc = run_cli("solve --field zero --n 17 --k 2 --seed 3 --threads 2 --out " +
                   dir.str());
  REQUIRE(rc == 0);
  auto lam = json::parse(read_text_file(dir.str() + "/lambdas.json"));
  REQUIRE(lam["lambdas"].size() == 2);
  CHECK(lam["converged"].get<bool>());
  CHECK(lam["lambdas"][0].get<double>() ==
        Catch::Approx(M_PI * M_PI / 2).epsilon(0.01));

  auto manifest = json::parse(read_text_file(dir.str() + "/manifest.json"));
  CHECK(manifest["config"]["domain"]["n"].get<int>() == 17);
  bool found = false;
  for (auto& item : manifest["files"]) {
    std::string name = item["file"].get<std::string>();
    std::string sha = Sha256::of_file(dir.str() + "/" + name);
    REQUIRE(sha == item["sha256"].get<std::string>());
    if (name == "abs_psi_0.pgm") found = true;
  }
  CHECK(found);
}

TEST_CASE("solve honors the matrix market export flag", "[cli]") {
  TempDir dir("cli_mm_out");
  REQUIRE(run_cli("solve --field uniform --B 5 --n 9 --k 1 --export-mm --out " +
                  dir.str()) == 0);
  auto mm = read_text_file(dir.str() + "/operator.mtx");
  CHECK(mm.rfind("%%MatrixMarket matrix coordinate complex hermitian", 0) == 0);
}

TEST_CASE("malformed expressions exit with the config code", "[cli]") {
  TempDir dir("cli_err_out");
  CHECK(run_cli("decompose --ax \"sin(x\" --ay 0 --n 9 --out " + dir.str()) == 1);
  CHECK(run_cli("solve --field bogus --n 9 --out " + dir.str()) == 1);
  CHECK(run_cli("solve --ax x --n 9 --out " + dir.str()) == 1);  // missing ay
}

TEST_CASE("config file values load and flags override them", "[cli]") {
  TempDir dir("cli_cfg_out");
  write_text_file("cli_test.ini",
                  "[domain]\nn = 9\n[field]\nbuiltin = zero\n"
                  "[solver]\nk = 1\n[output]\ndir = " + dir.str() + "\n");
  REQUIRE(run_cli("solve --config cli_test.ini --n 13") == 0);
  auto manifest = json::parse(read_text_file(dir.str() + "/manifest.json"));
  CHECK(manifest["config"]["domain"]["n"].get<int>() == 13);  // flag wins
  CHECK(manifest["config"]["solver"]["k"].get<int>() == 1);
  std::remove("cli_test.ini");
}

TEST_CASE("decompose emits the split fields", "[cli]") {
  TempDir dir("cli_dec_out");
  REQUIRE(run_cli("decompose --field example1 --a 5 --n 17 --out " +
                  dir.str()) == 0);
  auto h = json::parse(read_text_file(dir.str() + "/helmholtz.json"));
  CHECK(h["div_residual_inf"].get<double>() <=
        1e-8 * (1 + h["div_a_inf"].get<double>()));
  CHECK(h["fn_residual_inf"].get<double>() <= 1e-8);
  CHECK(fs::exists(dir.str() + "/phi.csv"));
  CHECK(fs::exists(dir.str() + "/f.csv"));
  CHECK(fs::exists(dir.str() + "/curl_f.csv"));
}

TEST_CASE("verify-theorem passes on the free field end to end", "[cli]") {
  TempDir dir("cli_vt_out");
  REQUIRE(run_cli("verify-theorem --field zero --n 17 --k 1 --paths 400 "
                  "--steps 32 --targets 5 --t-factors 0.3 --seed 5 "
                  "--threads 2 --out " + dir.str()) == 0);
  auto rep = json::parse(read_text_file(dir.str() + "/theorem_report.json"));
  REQUIRE(rep.size() == 1);
  CHECK(rep[0]["pass"].get<bool>());
  CHECK(rep[0]["rhs"].get<double>() == Catch::Approx(std::exp(-0.3)));
  auto cor1 = json::parse(read_text_file(dir.str() + "/cor1_table.json"));
  CHECK(cor1[0]["fraction"].get<double>() == 1.0);
  CHECK(fs::exists(dir.str() + "/cor1_histograms.csv"));
}

TEST_CASE("predict reports the sublevel hit for the quadratic field",
          "[cli]") {
  TempDir dir("cli_pred_out");
  REQUIRE(run_cli("predict --field example1 --a 100 --n 65 --k 1 --out " +
                  dir.str()) == 0);
  auto rep = json::parse(read_text_file(dir.str() + "/prediction_report.json"));
  CHECK(rep["rows"][0]["in_sublevel"].get<bool>());
  CHECK(fs::exists(dir.str() + "/mask.pgm"));
  CHECK(fs::exists(dir.str() + "/curl.csv"));
}

TEST_CASE("landscape command writes ratios and the refinement samples",
          "[cli]") {
  TempDir dir("cli_land_out");
  write_text_file("landscape_small.ini",
                  "[mc]\ncor3_paths = 200\ncor3_cells = 5\n"
                  "cor3_time_nodes = 8\ndirichlet_n = 17\ndirichlet_k = 20\n");
  REQUIRE(run_cli("landscape --field zero --n 17 --k 1 --paths 200 --steps 32 "
                  "--seed 5 --threads 2 --out " + dir.str() +
                  " --config landscape_small.ini") == 0);
  std::remove("landscape_small.ini");
  auto rep = json::parse(read_text_file(dir.str() + "/landscape_report.json"));
  CHECK(rep["pass"].get<bool>());
  CHECK(rep["ratios"][0].get<double>() < 1.0);
  CHECK(rep["improved_ordered"].get<bool>());
  REQUIRE(rep["improved_bound_samples"].size() >= 2);
  for (auto& s : rep["improved_bound_samples"])
    CHECK(s["improved"].get<double>() <=
          s["original"].get<double>() * (1 + 1e-12));
}

TEST_CASE("identical config and seed give byte-identical reports", "[cli]") {
  TempDir d1("cli_det1"), d2("cli_det2");
  std::string args = "verify-theorem --field uniform --B 20 --n 17 --k 1 "
                     "--paths 300 --steps 32 --targets 5 --t-factors 0.5 "
                     "--seed 9 --out ";
  REQUIRE(run_cli(args + d1.str() + " --threads 1") == 0);
  REQUIRE(run_cli(args + d2.str() + " --threads 4") == 0);
  CHECK(read_text_file(d1.str() + "/theorem_report.json") ==
        read_text_file(d2.str() + "/theorem_report.json"));
  CHECK(read_text_file(d1.str() + "/cor1_table.json") ==
        read_text_file(d2.str() + "/cor1_table.json"));
  CHECK(read_text_file(d1.str() + "/cor1_histograms.csv") ==
        read_text_file(d2.str() + "/cor1_histograms.csv"));
}

TEST_CASE("report aggregates prior artifacts", "[cli]") {
  TempDir dir("cli_rep_out");
  REQUIRE(run_cli("solve --field zero --n 9 --k 1 --out " + dir.str()) == 0);
  REQUIRE(run_cli("report --out " + dir.str()) == 0);
  auto rep = json::parse(read_text_file(dir.str() + "/report.json"));
  CHECK(rep["artifacts"].contains("lambdas.json"));
}

TEST_CASE("environment variable sets the default output directory", "[cli]") {
  TempDir dir("cli_env_out");
  setenv("MAGLOC_OUT", dir.str().c_str(), 1);
  REQUIRE(run_cli("solve --field zero --n 9 --k 1") == 0);
  unsetenv("MAGLOC_OUT");
  CHECK(fs::exists(dir.str() + "/lambdas.json"));
}
