#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "sdde/cli.hpp"

namespace sdde::cli {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

std::string resolve_out_dir(const ExperimentConfig& config, const CliOverrides& overrides) {
  if (overrides.out_dir.has_value()) return *overrides.out_dir;
  if (!config.output_dir.empty()) return config.output_dir;
  if (const char* env = std::getenv("SDDE_OUT_DIR"); env != nullptr && *env != '\0') return env;
  return ".";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write output file: " + path.string());
  out << text;
}

void write_meta(const fs::path& artifact, const ExperimentConfig& config,
                const std::string& task) {
  Json meta;
  meta["config_digest"] = config.digest();
  meta["task"] = task;
  meta["artifact"] = artifact.filename().string();
  meta["created_unix"] = static_cast<long long>(
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count());
  write_text(artifact.string() + ".meta.json", meta.dump(2) + "\n");
}

std::string csv_row(const std::vector<double>& values) {
  std::string row;
  for (size_t i = 0; i < values.size(); ++i) {
    if (i) row += ",";
    row += format_full(values[i]);
  }
  return row + "\n";
}

const Kernel& selected_kernel(const Experiment& e, const std::string& which) {
  const std::optional<Kernel>* k = nullptr;
  if (which == "alpha") k = &e.problem.alpha;
  else if (which == "beta") k = &e.problem.beta;
  else if (which == "gamma") k = &e.problem.gamma;
  else throw ConfigError("field 'task.kernel': expected alpha, beta or gamma");
  if (!k->has_value()) throw ConfigError("task.kernel = " + which + " but that kernel is zero");
  return **k;
}

std::optional<ProjectedKernel> project_if(const std::optional<Kernel>& k, int n,
                                          const Experiment& e) {
  if (!k.has_value()) return std::nullopt;
  return project_kernel(*k, n, e.spec, e.rule);
}

double payoff_value(const ExperimentConfig& config, double z) {
  if (config.task_payoff == "put") return std::max(config.task_strike - z, 0.0);
  if (config.task_payoff == "call") return std::max(z - config.task_strike, 0.0);
  if (config.task_payoff == "identity") return z;
  throw ConfigError("field 'task.payoff': unknown payoff '" + config.task_payoff + "'");
}

StoppingProblem make_stopping(const ExperimentConfig& config) {
  StoppingProblem prob;
  prob.T = config.T;
  prob.dt = config.dt;
  if (config.task_exercise_dates < 1) {
    throw ConfigError("field 'task.exercise_dates': must be >= 1");
  }
  const auto steps = static_cast<long long>(std::llround(config.T / config.dt));
  if (steps % config.task_exercise_dates != 0) {
    throw ConfigError("field 'task.exercise_dates': must divide T/dt evenly");
  }
  for (int j = 1; j <= config.task_exercise_dates; ++j) {
    prob.exercise_dates.push_back(config.dt *
                                  static_cast<double>(steps * j / config.task_exercise_dates));
  }
  prob.payoff = [config](double, double z) { return payoff_value(config, z); };
  prob.direction =
      config.task_direction == "min" ? StopDirection::minimize : StopDirection::maximize;
  return prob;
}

ControlProblem make_control_problem(const ExperimentConfig& config) {
  ControlProblem prob;
  prob.T = config.T;
  if (config.task_cost == "abs") {
    prob.running_cost = [](double, double z, double u) { return std::abs(z) + u * u; };
    prob.terminal_cost = [](double z) { return std::abs(z); };
  } else if (config.task_cost == "quad") {
    prob.running_cost = [](double, double z, double u) { return z * z + u * u; };
    prob.terminal_cost = [](double z) { return z * z; };
  } else {
    throw ConfigError("field 'task.cost': unknown cost '" + config.task_cost + "'");
  }
  return prob;
}

CoupledControl make_policy(const ExperimentConfig& config, const MarkovSystem& sys) {
  CoupledControl policy;
  if (config.task_policy == "constant") {
    policy.oracle.impl = config.task_policy_value;
    policy.chain.impl = config.task_policy_value;
  } else if (config.task_policy == "tanh_s") {
    const double scale = config.task_policy_scale, level = config.task_policy_level;
    policy.oracle.impl = OracleControl::Feedback(
        [scale, level](double, double s, double) { return scale * std::tanh(level - s); });
    policy.chain.impl = ChainControl::Feedback(
        [scale, level](double, const VecX& x) { return scale * std::tanh(level - x[0]); });
  } else if (config.task_policy == "tanh_ya") {
    const double scale = config.task_policy_scale, level = config.task_policy_level;
    policy.oracle.impl = OracleControl::Feedback(
        [scale, level](double, double, double ya) { return scale * std::tanh(level - ya); });
    policy.chain.impl = ChainControl::Feedback([scale, level, sys](double, const VecX& x) {
      return scale * std::tanh(level - sys.delay_input_alpha(x));
    });
  } else {
    throw ConfigError("field 'task.policy': unknown policy '" + config.task_policy + "'");
  }
  return policy;
}

void run_project(const ExperimentConfig& config, const Experiment& e, const fs::path& dir,
                 std::ostream& out) {
  const Kernel& kernel = selected_kernel(e, config.task_kernel);
  const ProjectedKernel pk = project_kernel(kernel, config.task_n, e.spec, e.rule);
  std::string csv = "k,coeff,cumulative_tail\n";
  double acc = 0.0;
  for (int k = 0; k <= pk.n; ++k) {
    acc += pk.coeffs[k] * pk.coeffs[k];
    csv += std::to_string(k) + "," + format_full(pk.coeffs[k]) + "," +
           format_full(std::max(pk.norm_sq_w - acc, 0.0)) + "\n";
  }
  const fs::path file = dir / "projection.csv";
  write_text(file, csv);
  write_meta(file, config, "project");
  out << "project: wrote " << file.string() << " (norm_sq_w = " << format_full(pk.norm_sq_w)
      << ", tail_sq = " << format_full(tail_norm_sq(pk)) << ")\n";
}

void run_basis(const ExperimentConfig& config, const Experiment& e, const fs::path& dir,
               std::ostream& out) {
  if (config.task_kmax < 1) throw ConfigError("field 'task.kmax': must be >= 1");
  if (config.task_xi_points < 2) throw ConfigError("field 'task.xi_points': must be >= 2");
  if (!(config.task_xi_min < 0.0)) throw ConfigError("field 'task.xi_min': must be negative");
  std::string csv = "k,xi,L\n";
  for (int k = 1; k <= config.task_kmax; ++k) {
    for (int i = 0; i < config.task_xi_points; ++i) {
      // xi_min .. 0, landing on +0 exactly at the right edge
      const double frac = static_cast<double>(i) / (config.task_xi_points - 1);
      const double xi = config.task_xi_min - config.task_xi_min * frac;
      csv += std::to_string(k) + "," + format_full(xi) + "," +
             format_full(basis_eval(k, e.spec, xi)) + "\n";
    }
  }
  const fs::path file = dir / "basis.csv";
  write_text(file, csv);
  write_meta(file, config, "basis");
  out << "basis: wrote " << file.string() << "\n";
}

void run_simulate(const ExperimentConfig& config, const Experiment& e, const fs::path& dir,
                  std::ostream& out) {
  const int export_count = std::max(1, config.task_export_paths);
  const auto steps = static_cast<int>(std::llround(config.T / config.dt));
  const auto pa = project_if(e.problem.alpha, config.task_n, e);
  const auto pb = project_if(e.problem.beta, config.task_n, e);
  const auto pg = project_if(e.problem.gamma, config.task_n, e);
  const MarkovSystem sys = build_laguerre_system(config.task_n, e.spec, pa, pb, pg,
                                                 config.gamma0, e.problem.dyn);
  const VecX x0 = project_initial_state(e.problem.init, config.task_n, e.spec, e.rule);
  for (int p = 0; p < export_count; ++p) {
    const NoisePath noise = make_noise(config.dt, steps, config.seed, static_cast<uint64_t>(p));
    const OraclePath path =
        simulate_sdde(e.problem, OracleControl{}, noise, config.T, e.sim_options);
    std::string csv = "t,S,Z,y_alpha,y_beta\n";
    for (size_t i = 0; i < path.times.size(); ++i) {
      csv += csv_row({path.times[i], path.S[static_cast<Index>(i)],
                      path.Z[static_cast<Index>(i)], path.y_alpha[static_cast<Index>(i)],
                      path.y_beta[static_cast<Index>(i)]});
    }
    const fs::path file = dir / ("oracle_path_" + std::to_string(p) + ".csv");
    write_text(file, csv);
    write_meta(file, config, "simulate");

    const ChainPath chain =
        simulate_chain(sys, x0, ChainControl{}, noise, config.T, e.chain_options);
    std::string ccsv = "t,S";
    for (int k = 1; k <= sys.n; ++k) ccsv += ",X" + std::to_string(k);
    ccsv += ",Z\n";
    for (size_t i = 0; i < chain.times.size(); ++i) {
      std::vector<double> row;
      row.push_back(chain.times[i]);
      for (int k = 0; k <= sys.n; ++k) row.push_back(chain.states(static_cast<Index>(i), k));
      row.push_back(chain.Z[static_cast<Index>(i)]);
      ccsv += csv_row(row);
    }
    const fs::path cfile = dir / ("chain_path_" + std::to_string(p) + ".csv");
    write_text(cfile, ccsv);
    write_meta(cfile, config, "simulate");
    out << "simulate: wrote " << file.string() << " and " << cfile.string() << "\n";
  }
}

void run_error_scan(const ExperimentConfig& config, const Experiment& e, const fs::path& dir,
                    std::ostream& out) {
  ErrorScanConfig scan;
  scan.problem = e.problem;
  scan.control = CoupledControl::constant(0.0);
  scan.rule = e.rule;
  scan.dt = config.dt;
  scan.T = config.T;
  scan.paths = config.paths;
  scan.seed = config.seed;
  scan.batches = config.task_batches;
  scan.oracle_options = e.sim_options;
  scan.chain_options = e.chain_options;
  const ErrorReport report = error_scan(scan, config.task_n_list);

  std::string csv = "n,tail_alpha,tail_beta,tail_gamma,tail_total,mean_sup_sq,std_error\n";
  for (const auto& row : report.rows) {
    csv += std::to_string(row.n) + "," + format_full(row.tail_alpha) + "," +
           format_full(row.tail_beta) + "," + format_full(row.tail_gamma) + "," +
           format_full(row.tail_total) + "," + format_full(row.mean_sup_sq) + "," +
           format_full(row.std_error) + "\n";
  }
  const fs::path file = dir / "error_scan.csv";
  write_text(file, csv);
  write_meta(file, config, "error-scan");

  Json summary;
  summary["config_digest"] = config.digest();
  summary["paths"] = report.paths;
  summary["batches"] = report.batches;
  summary["dt"] = report.dt;
  summary["T"] = report.T;
  summary["seed"] = report.seed;
  auto fit_json = [](const RateFit& f) {
    Json j;
    if (std::isfinite(f.slope)) {
      j["slope"] = f.slope;
      j["intercept"] = f.intercept;
      j["r2"] = f.r2;
    } else {
      j["slope"] = nullptr;
    }
    return j;
  };
  summary["tail_fit"] = fit_json(report.tail_fit);
  summary["error_fit"] = fit_json(report.error_fit);
  const fs::path jfile = dir / "error_scan.json";
  write_text(jfile, summary.dump(2) + "\n");
  write_meta(jfile, config, "error-scan");
  out << "error-scan: wrote " << file.string() << " and " << jfile.string() << "\n";
}

void run_price(const ExperimentConfig& config, const Experiment& e, const fs::path& dir,
               std::ostream& out) {
  const auto pa = project_if(e.problem.alpha, config.task_n, e);
  const auto pb = project_if(e.problem.beta, config.task_n, e);
  const auto pg = project_if(e.problem.gamma, config.task_n, e);
  const MarkovSystem sys =
      build_laguerre_system(config.task_n, e.spec, pa, pb, pg, config.gamma0, e.problem.dyn);
  const VecX x0 = project_initial_state(e.problem.init, config.task_n, e.spec, e.rule);
  const StoppingProblem prob = make_stopping(config);
  LsmcOptions options;
  options.chain_options = e.chain_options;
  options.oracle_options = e.sim_options;
  const LsmcValue v =
      lsmc_value(sys, x0, prob, config.paths, config.task_degree, config.seed, options);

  Json j;
  j["value"] = v.value;
  j["stderr"] = v.std_error;
  j["in_sample"] = v.in_sample;
  j["n"] = config.task_n;
  j["paths"] = config.paths;
  j["seed"] = config.seed;
  j["degree"] = config.task_degree;
  j["exercise_dates"] = config.task_exercise_dates;
  j["payoff"] = config.task_payoff;
  j["strike"] = config.task_strike;
  j["config_digest"] = config.digest();
  const fs::path file = dir / "price.json";
  write_text(file, j.dump(2) + "\n");
  write_meta(file, config, "price");
  out << "price: value = " << format_full(v.value) << " +- " << format_full(v.std_error)
      << " (wrote " << file.string() << ")\n";
}

void run_control_eval(const ExperimentConfig& config, const Experiment& e, const fs::path& dir,
                      std::ostream& out) {
  const auto pa = project_if(e.problem.alpha, config.task_n, e);
  const auto pb = project_if(e.problem.beta, config.task_n, e);
  const auto pg = project_if(e.problem.gamma, config.task_n, e);
  const MarkovSystem sys =
      build_laguerre_system(config.task_n, e.spec, pa, pb, pg, config.gamma0, e.problem.dyn);
  const VecX x0 = project_initial_state(e.problem.init, config.task_n, e.spec, e.rule);
  const ControlProblem prob = make_control_problem(config);
  const CoupledControl policy = make_policy(config, sys);

  const ValueEstimate chain_cost =
      policy_cost(sys, x0, prob, policy.chain, config.dt, config.paths, config.seed,
                  e.chain_options);
  const ValueEstimate oracle_cost =
      policy_cost(e.problem, prob, policy.oracle, config.dt, config.paths, config.seed,
                  e.sim_options);

  Json j;
  j["oracle"] = Json{{"value", oracle_cost.value}, {"stderr", oracle_cost.std_error}};
  j["chain"] = Json{{"value", chain_cost.value},
                    {"stderr", chain_cost.std_error},
                    {"n", config.task_n}};
  j["gap"] = std::abs(oracle_cost.value - chain_cost.value);
  j["paths"] = config.paths;
  j["seed"] = config.seed;
  j["policy"] = config.task_policy;
  j["cost"] = config.task_cost;
  j["config_digest"] = config.digest();
  const fs::path file = dir / "control_eval.json";
  write_text(file, j.dump(2) + "\n");
  write_meta(file, config, "control-eval");
  out << "control-eval: J_oracle = " << format_full(oracle_cost.value)
      << ", J_chain = " << format_full(chain_cost.value) << " (wrote " << file.string() << ")\n";
}

}  // namespace

int run_cli(const std::string& task_name, const std::string& config_path,
            const CliOverrides& overrides, std::ostream& out, std::ostream& err) {
  ExperimentConfig config;
  try {
    config = load_config(config_path);
    if (task_name != config.task_type) {
      // the subcommand wins; tasks share the rest of the config
      config.task_type = task_name;
    }
    if (overrides.seed.has_value()) config.seed = *overrides.seed;

    const Experiment e = build_experiment(config);
    const fs::path dir = resolve_out_dir(config, overrides);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory: " + dir.string());

    if (overrides.verbosity > 0) {
      out << "config digest " << config.digest() << ", task " << config.task_type << "\n";
    }
    if (config.task_type == "project") {
      run_project(config, e, dir, out);
    } else if (config.task_type == "basis") {
      run_basis(config, e, dir, out);
    } else if (config.task_type == "simulate") {
      run_simulate(config, e, dir, out);
    } else if (config.task_type == "error-scan") {
      run_error_scan(config, e, dir, out);
    } else if (config.task_type == "price") {
      run_price(config, e, dir, out);
    } else if (config.task_type == "control-eval") {
      run_control_eval(config, e, dir, out);
    } else {
      throw ConfigError("unknown task: " + config.task_type);
    }
    return 0;
  } catch (const ConfigError& ex) {
    err << config_path << ": " << ex.what() << "\n";
    return 2;
  } catch (const DomainError& ex) {
    err << config_path << ": " << ex.what() << "\n";
    return 2;
  } catch (const NumericalBlowup& ex) {
    err << "task " << task_name << " failed numerically: " << ex.what() << "\n";
    return 3;
  } catch (const RegressionError& ex) {
    err << "task " << task_name << " failed numerically: " << ex.what() << "\n";
    return 3;
  } catch (const IntegrabilityError& ex) {
    err << "task " << task_name << " failed numerically: " << ex.what() << "\n";
    return 3;
  }
}

}  // namespace sdde::cli
