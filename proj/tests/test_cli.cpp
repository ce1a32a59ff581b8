#include <catch2/catch.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "robcov/io.hpp"
#include "robcov/spectra.hpp"

using namespace robcov;
namespace fs = std::filesystem;

namespace {

const char* cli_path() { return ROBCOV_CLI_PATH; }

int run_cli(const std::string& args) {
  const std::string cmd = std::string(cli_path()) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WEXITSTATUS(status);
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "robcov_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// composite Simpson over a uniform grid, trapezoid for a trailing odd panel
double integrate_curve(const Matrix& xs_rho) {
  const Index m = xs_rho.rows();
  const double h = xs_rho(1, 0) - xs_rho(0, 0);
  double acc = 0.0;
  Index i = 0;
  for (; i + 2 < m; i += 2)
    acc += h / 3.0 * (xs_rho(i, 1) + 4.0 * xs_rho(i + 1, 1) + xs_rho(i + 2, 1));
  if (i + 1 < m) acc += 0.5 * h * (xs_rho(i, 1) + xs_rho(i + 1, 1));
  return acc;
}

}  // namespace

TEST_CASE("cli mp emits a unit-mass density", "[cli]") {
  const fs::path dir = fresh_dir("mp");
  REQUIRE(run_cli("mp --y 0.2 --grid 512 --out " + dir.string()) == 0);
  const Matrix curve = read_csv(dir / "mp_density.csv");
  REQUIRE(curve.rows() == 512);
  CHECK(curve(0, 1) == 0.0);              // density vanishes at the edges
  CHECK(curve(511, 1) == 0.0);
  CHECK(integrate_curve(curve) == Approx(1.0).margin(1e-4));
  CHECK(fs::exists(dir / "resolved_config.json"));
}

TEST_CASE("cli estimate on a univariate csv returns the unit matrix", "[cli]") {
  const fs::path dir = fresh_dir("estimate_p1");
  const fs::path data = dir / "data.csv";
  write_text(data, "1.5\n-2.0\n0.25\n");
  REQUIRE(run_cli("estimate --estimator tyler --input " + data.string() +
                  " --out " + dir.string()) == 0);
  json j;
  std::ifstream(dir / "estimate.json") >> j;
  const auto flat = j["matrix"].get<std::vector<double>>();
  REQUIRE(flat.size() == 1);
  CHECK(flat[0] == Approx(1.0).margin(1e-12));
  CHECK(j["converged"] == true);
}

TEST_CASE("cli outputs are byte-identical across reruns", "[cli]") {
  const fs::path a = fresh_dir("det_a");
  const fs::path b = fresh_dir("det_b");
  const std::string flags =
      "estimate --estimator maronna --u rational:2 --dist gaussian "
      "--n 80 --p 10 --seed 31 --format csv --out ";
  REQUIRE(run_cli(flags + a.string()) == 0);
  REQUIRE(run_cli(flags + b.string()) == 0);
  CHECK(slurp(a / "estimate.json") == slurp(b / "estimate.json"));
  CHECK(slurp(a / "resolved_config.json") == slurp(b / "resolved_config.json"));
  const Matrix m = read_csv(a / "estimate.csv");  // csv mirror of the matrix
  CHECK(m.rows() == 10);
  CHECK(m.cols() == 10);

  json j;
  std::ifstream(a / "estimate.json") >> j;
  const auto w = j["weight_vector"].get<std::vector<double>>();
  REQUIRE(w.size() == 80);  // quadratic forms at the solution, one per sample
  for (double v : w) CHECK(v > 0.0);
  CHECK(j["residual"].get<double>() >= 0.0);
}

TEST_CASE("cli usage errors exit with 2", "[cli]") {
  CHECK(run_cli("definitely-not-a-command") == 2);
  CHECK(run_cli("estimate --no-such-flag 3") == 2);
  CHECK(run_cli("gmp --y 0.2") == 2);  // missing required --h-file
  CHECK(run_cli("") == 2);             // a subcommand is required
  CHECK(run_cli("mp --y 0.2 --grid 1") == 2);
}

TEST_CASE("cli numerical failures exit with 1", "[cli]") {
  const fs::path dir = fresh_dir("numfail");
  const fs::path data = dir / "bad.csv";
  write_text(data, "1,2\n2,4\n3,6\n");  // rank deficient
  CHECK(run_cli("estimate --estimator tyler --input " + data.string() +
                " --out " + dir.string()) == 1);
}

TEST_CASE("cli esd writes spectrum and ks summary", "[cli][heavy]") {
  const fs::path dir = fresh_dir("esd");
  REQUIRE(run_cli("esd --estimator tyler --dist gaussian --n 1000 --p 200 "
                  "--seed 3 --out " +
                  dir.string()) == 0);
  json j;
  std::ifstream(dir / "esd.json") >> j;
  CHECK(j["law"] == "mp");
  CHECK(j["ks"].get<double>() < 0.05);
  std::ifstream spec(dir / "spectrum.csv");
  std::string line;
  int lines = 0;
  while (std::getline(spec, line)) ++lines;
  CHECK(lines == 200);
  CHECK(fs::exists(dir / "histogram.csv"));
}

TEST_CASE("cli gmp tabulates the generalized law", "[cli]") {
  const fs::path dir = fresh_dir("gmp");
  const fs::path hfile = dir / "h.json";
  write_text(hfile,
             json{{"atoms", json::array({json{{"t", 1.0}, {"pi", 0.5}},
                                         json{{"t", 3.0}, {"pi", 0.5}}})}}
                 .dump());
  REQUIRE(run_cli("gmp --h-file " + hfile.string() +
                  " --y 0.2 --grid 128 --eta 0.001 --out " + dir.string()) == 0);
  const Matrix curve = read_csv(dir / "gmp_density.csv");
  REQUIRE(curve.rows() == 128);
  for (Index i = 0; i < curve.rows(); ++i) CHECK(curve(i, 1) >= 0.0);
  CHECK(curve.col(1).maxCoeff() > 0.1);
}

TEST_CASE("cli largest-eig experiment", "[cli][heavy]") {
  const fs::path dir = fresh_dir("largest");
  REQUIRE(run_cli("experiment largest-eig --n 1000 --y 0.2 --reps 3 --seed 5 "
                  "--jobs 2 --out " +
                  dir.string()) == 0);
  json j;
  std::ifstream(dir / "report.json") >> j;
  CHECK(j["target"].get<double>() == Approx(2.0944271909999155));
  CHECK(j["lambda_max"].size() == 3);
}

TEST_CASE("cli gmp with a point mass reproduces the mp density", "[cli][heavy]") {
  const fs::path dir = fresh_dir("gmp_vs_mp");
  const fs::path hfile = dir / "dirac.json";
  write_text(hfile,
             json{{"atoms", json::array({json{{"t", 1.0}, {"pi", 1.0}}})}}.dump());
  REQUIRE(run_cli("gmp --h-file " + hfile.string() +
                  " --y 0.2 --grid 200 --eta 0.0001 --out " + dir.string()) == 0);
  const Matrix curve = read_csv(dir / "gmp_density.csv");
  const auto [lo, hi] = mp_support(0.2);
  int compared = 0;
  for (Index i = 0; i < curve.rows(); ++i) {
    const double x = curve(i, 0);
    if (x < lo + 0.15 || x > hi - 0.15) continue;  // edges are eta-smoothed
    CHECK(curve(i, 1) == Approx(mp_density(0.2, x)).margin(2e-2));
    ++compared;
  }
  CHECK(compared > 50);
}

TEST_CASE("cli spike experiment writes a full report", "[cli][heavy]") {
  const fs::path dir = fresh_dir("spike");
  REQUIRE(run_cli("experiment spike --model 1 --reps 5 --seed 7 --out " +
                  dir.string()) == 0);
  json j;
  std::ifstream(dir / "report.json") >> j;
  CHECK(j["tyler_mean"].get<double>() >= 0.8);
  CHECK(j["sample_mean"].get<double>() <= 0.4);
  CHECK(j["config"]["seed"] == 7);
  CHECK(fs::exists(dir / "resolved_config.json"));
  CHECK(fs::exists(dir / "tyler_eigenvalues_hist.csv"));
}

TEST_CASE("cli experiment results are independent of --jobs", "[cli][heavy]") {
  const fs::path a = fresh_dir("jobs1");
  const fs::path b = fresh_dir("jobs2");
  // small sizes keep this quick; the built-in statistical checks may or may
  // not pass here, so only determinism is asserted: equal exit codes and
  // equal reports
  const std::string base =
      "experiment convergence --ns 100 200 400 --reps 3 --seed 5 --y 0.2 ";
  const int code_a = run_cli(base + "--jobs 1 --out " + a.string());
  const int code_b = run_cli(base + "--jobs 2 --out " + b.string());
  REQUIRE(code_a != 2);
  CHECK(code_a == code_b);
  json ja, jb;
  std::ifstream(a / "report.json") >> ja;
  std::ifstream(b / "report.json") >> jb;
  ja.erase("config");
  jb.erase("config");  // configs differ only in the jobs field
  CHECK(ja.dump() == jb.dump());
}
