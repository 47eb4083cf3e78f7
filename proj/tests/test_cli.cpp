#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sdde/cli.hpp"

using namespace sdde;
using namespace sdde::cli;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("sdde_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string write_config(const fs::path& dir, const std::string& body) {
  const fs::path file = dir / "exp.cfg";
  std::ofstream out(file);
  out << body;
  out.close();
  return file.string();
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const char* kBasisConfig = R"(# basis dump
weight.p = 0
weight.lambda = 1
task.type = basis
task.kmax = 4
task.xi_min = -2
task.xi_points = 5
)";

}  // namespace

TEST_CASE("parsing fills defaults and digests are content hashes") {
  const ExperimentConfig a = parse_config("weight.p = 0\nweight.lambda = 1\n");
  CHECK(a.p == 0.0);
  CHECK(a.quad_nodes == 4000);
  CHECK(a.task_type == "simulate");

  const ExperimentConfig b = parse_config("weight.lambda = 1\nweight.p = 0\n");
  CHECK(a.digest() == b.digest());  // order does not matter
  const ExperimentConfig c = parse_config("weight.p = 0\nweight.lambda = 1.5\n");
  CHECK(a.digest() != c.digest());
}

TEST_CASE("unknown keys, duplicates and malformed lines are rejected with line numbers") {
  try {
    parse_config("weight.p = 0\nweight.lambda = 1\nnot.a.key = 3\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line_number == 3);
    CHECK(std::string(e.what()).find("not.a.key") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("weight.p = 0\nweight.p = 1\nweight.lambda = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("weight.p 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("weight.p = zero\nweight.lambda = 1\n"), ConfigError);
}

TEST_CASE("invalid lambda exits with code 2 and names the constraint") {
  const fs::path dir = fresh_dir("badlambda");
  const std::string cfg = write_config(dir, "weight.p = 1\nweight.lambda = 0.5\n");
  std::ostringstream out, err;
  CliOverrides overrides;
  overrides.out_dir = dir.string();
  const int code = run_cli("basis", cfg, overrides, out, err);
  CHECK(code == 2);
  CHECK(err.str().find("max(p, p/2)") != std::string::npos);
}

TEST_CASE("basis dump reproduces the boundary value") {
  const fs::path dir = fresh_dir("basis");
  const std::string cfg = write_config(dir, kBasisConfig);
  std::ostringstream out, err;
  CliOverrides overrides;
  overrides.out_dir = dir.string();
  REQUIRE(run_cli("basis", cfg, overrides, out, err) == 0);
  const std::string csv = slurp(dir / "basis.csv");
  // row k=1, xi=0 carries L_0(0) = sqrt(2 p0) = sqrt(2)
  CHECK(csv.find("1,0,1.4142135623730951") != std::string::npos);
  CHECK(fs::exists(dir / "basis.csv.meta.json"));
}

TEST_CASE("project task writes deterministic artifacts") {
  const fs::path dir = fresh_dir("project");
  const std::string cfg = write_config(dir, R"(
weight.p = 0
weight.lambda = 1
kernel.gamma.type = uniform_window
kernel.gamma.delta = 1
task.type = project
task.kernel = gamma
task.n = 16
)");
  std::ostringstream out, err;
  CliOverrides overrides;
  overrides.out_dir = dir.string();
  REQUIRE(run_cli("project", cfg, overrides, out, err) == 0);
  const std::string first = slurp(dir / "projection.csv");
  CHECK(first.rfind("k,coeff,cumulative_tail", 0) == 0);
  CHECK(std::count(first.begin(), first.end(), '\n') == 18);  // header + 17 rows

  REQUIRE(run_cli("project", cfg, overrides, out, err) == 0);
  CHECK(slurp(dir / "projection.csv") == first);  // byte-identical rerun
}

TEST_CASE("error scan emits CSV and JSON that replay byte-identically") {
  const fs::path dir = fresh_dir("scan");
  const std::string cfg = write_config(dir, R"(
weight.p = 0
weight.lambda = 4
kernel.gamma.type = uniform_window
kernel.gamma.delta = 0.25
dynamics.type = gbm
dynamics.drift = 0.05
dynamics.vol = 0.2
initial.s0 = 1
initial.s1 = constant
initial.s1_value = 1
sim.dt = 0.0078125
sim.T = 0.5
sim.paths = 100
sim.seed = 11
task.type = error-scan
task.n_list = 2,4
)");
  std::ostringstream out, err;
  CliOverrides overrides;
  overrides.out_dir = dir.string();
  REQUIRE(run_cli("error-scan", cfg, overrides, out, err) == 0);
  const std::string csv = slurp(dir / "error_scan.csv");
  const std::string json = slurp(dir / "error_scan.json");
  REQUIRE(run_cli("error-scan", cfg, overrides, out, err) == 0);
  CHECK(slurp(dir / "error_scan.csv") == csv);
  CHECK(slurp(dir / "error_scan.json") == json);
  CHECK(json.find("config_digest") != std::string::npos);
}

TEST_CASE("price task runs end to end") {
  const fs::path dir = fresh_dir("price");
  const std::string cfg = write_config(dir, R"(
weight.p = 0
weight.lambda = 8
kernel.gamma.type = uniform_window
kernel.gamma.delta = 0.25
dynamics.type = gbm
dynamics.drift = 0
dynamics.vol = 0.2
initial.s0 = 1
initial.s1 = constant
initial.s1_value = 1
sim.dt = 0.015625
sim.T = 0.5
sim.paths = 1000
sim.seed = 4
task.type = price
task.n = 4
task.strike = 1
task.payoff = put
task.exercise_dates = 4
task.degree = 2
)");
  std::ostringstream out, err;
  CliOverrides overrides;
  overrides.out_dir = dir.string();
  REQUIRE(run_cli("price", cfg, overrides, out, err) == 0);
  const std::string json = slurp(dir / "price.json");
  CHECK(json.find("\"value\"") != std::string::npos);
  CHECK(json.find("\"stderr\"") != std::string::npos);
  CHECK(json.find("\"config_digest\"") != std::string::npos);
}

TEST_CASE("tabulated kernels load from two-column CSV") {
  const fs::path dir = fresh_dir("tabulated");
  {
    std::ofstream csv(dir / "kernel.csv");
    csv << "# xi, value\n";
    for (int i = 0; i <= 400; ++i) {
      const double xi = -2.0 + 2.0 * i / 400.0;
      csv << xi << "," << std::exp(xi) << "\n";
    }
  }
  const std::string cfg = write_config(dir, std::string(R"(
weight.p = 0
weight.lambda = 1
kernel.gamma.type = tabulated
kernel.gamma.csv = )") + (dir / "kernel.csv").string() + R"(
task.type = project
task.kernel = gamma
task.n = 4
)");
  std::ostringstream out, err;
  CliOverrides overrides;
  overrides.out_dir = dir.string();
  REQUIRE(run_cli("project", cfg, overrides, out, err) == 0);
  // tabulated e^xi on [-2, 0] projects mostly onto the first basis function
  const std::string csv = slurp(dir / "projection.csv");
  CHECK(csv.find("k,coeff,cumulative_tail") == 0);
  std::istringstream rows(csv);
  std::string line;
  std::getline(rows, line);  // header
  std::getline(rows, line);  // k = 0
  std::getline(rows, line);  // k = 1
  const double c1 = std::stod(line.substr(line.find(',') + 1));
  CHECK(std::abs(c1 - 1.0 / std::sqrt(2.0)) < 0.05);
}

TEST_CASE("numerical blowup maps to exit code 3") {
  const fs::path dir = fresh_dir("blowup");
  const std::string cfg = write_config(dir, R"(
weight.p = 0
weight.lambda = 1
dynamics.type = linear
dynamics.b0 = 0
dynamics.bx = 200
dynamics.s0 = 0
sim.dt = 0.0625
sim.T = 4
sim.paths = 10
sim.seed = 1
sim.guard = 1000
initial.s0 = 1
task.type = simulate
task.n = 1
)");
  std::ostringstream out, err;
  CliOverrides overrides;
  overrides.out_dir = dir.string();
  const int code = run_cli("simulate", cfg, overrides, out, err);
  CHECK(code == 3);
  CHECK(err.str().find("simulate") != std::string::npos);
}

TEST_CASE("seed override changes the artifacts") {
  const fs::path dir = fresh_dir("seed");
  const std::string cfg = write_config(dir, R"(
weight.p = 0
weight.lambda = 1
dynamics.type = gbm
dynamics.drift = 0
dynamics.vol = 0.2
initial.s0 = 1
sim.dt = 0.03125
sim.T = 0.5
sim.seed = 1
task.type = simulate
task.n = 2
)");
  std::ostringstream out, err;
  CliOverrides overrides;
  overrides.out_dir = dir.string();
  REQUIRE(run_cli("simulate", cfg, overrides, out, err) == 0);
  const std::string first = slurp(dir / "oracle_path_0.csv");
  overrides.seed = 99;
  REQUIRE(run_cli("simulate", cfg, overrides, out, err) == 0);
  CHECK(slurp(dir / "oracle_path_0.csv") != first);
}
