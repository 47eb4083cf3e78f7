#ifndef SDDE_CLI_HPP
#define SDDE_CLI_HPP

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sdde/applications.hpp"

namespace sdde::cli {

/// Parsed, validated experiment description. Every field is explicit after
/// parsing; the canonical serialization (and hence the digest) includes
/// defaulted values.
struct ExperimentConfig {
  // weight + quadrature
  double p = 0.0;
  double lambda = 1.0;
  int quad_nodes = 4000;
  double quad_tail_tol = 1e-48;

  // kernels: per-role description
  struct KernelBlock {
    std::string type = "zero";  // zero | uniform_window | exp_poly | tabulated
    double delta = 1.0;
    double height = 0.0;  // 0 = 1/delta
    std::vector<std::array<double, 5>> terms;  // j, re_mu, im_mu, re_c, im_c
    std::string csv;
  };
  KernelBlock alpha, beta, gamma;
  double gamma0 = 0.0;

  // dynamics
  std::string dynamics_type = "gbm";  // gbm | mean_revert_delay | linear
  double drift = 0.0;
  double vol = 0.2;
  double rate = 1.0;
  std::array<double, 8> linear_coeffs = {0, 0, 0, 0, 0, 0, 0, 0};  // b0 bx by bu s0 sx sy su

  // initial state
  double s0 = 1.0;
  std::string s1_type = "constant";  // constant | recent_constant | zero | csv
  double s1_value = 1.0;
  double s1_depth = 1.0;
  std::string s1_csv;

  // simulation
  double dt = 1.0 / 256.0;
  double T = 1.0;
  int paths = 1000;
  uint64_t seed = 1;
  std::string aux_step = "euler";  // euler | exact
  double guard = 1e12;

  // task
  std::string task_type = "simulate";
  std::string task_kernel = "gamma";
  int task_n = 8;
  std::vector<int> task_n_list = {2, 4, 8, 16};
  int task_batches = 10;
  int task_kmax = 4;
  double task_xi_min = -5.0;
  int task_xi_points = 101;
  double task_strike = 1.0;
  std::string task_payoff = "put";  // put | call | identity
  std::string task_direction = "max";
  int task_exercise_dates = 10;
  int task_degree = 2;
  std::string task_policy = "constant";  // constant | tanh_s | tanh_ya
  double task_policy_value = 0.0;
  double task_policy_scale = 0.5;
  double task_policy_level = 1.0;
  std::string task_cost = "abs";  // abs | quad
  int task_export_paths = 1;

  std::string output_dir;  // empty = resolve via --out / env / cwd

  std::string canonical_text() const;
  std::string digest() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Assembled runtime objects shared by the tasks.
struct Experiment {
  WeightSpec spec;
  QuadratureRule rule;
  SddeProblem problem;
  SimOptions sim_options;
  ChainSimOptions chain_options;
};

Experiment build_experiment(const ExperimentConfig& config);

struct CliOverrides {
  std::optional<std::string> out_dir;
  std::optional<uint64_t> seed;
  int verbosity = 0;
};

/// Runs `task_name` from the config at `config_path`. Returns the process
/// exit code: 0 success, 2 config validation failure, 3 numerical failure.
int run_cli(const std::string& task_name, const std::string& config_path,
            const CliOverrides& overrides, std::ostream& out, std::ostream& err);

uint64_t fnv1a64(const std::string& text);
std::string format_full(double v);  // 17 significant digits

}  // namespace sdde::cli

#endif
