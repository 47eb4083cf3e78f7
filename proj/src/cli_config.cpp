#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sdde/cli.hpp"

namespace sdde::cli {

uint64_t fnv1a64(const std::string& text) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

struct Entry {
  int line;
  std::string value;
  bool used = false;
};

using KvMap = std::map<std::string, Entry>;

KvMap tokenize(const std::string& text) {
  KvMap kv;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected 'key = value'", line_no);
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key", line_no);
    if (kv.count(key)) throw ConfigError("duplicate key '" + key + "'", line_no);
    kv[key] = Entry{line_no, value};
  }
  return kv;
}

class Reader {
 public:
  explicit Reader(KvMap kv) : kv_(std::move(kv)) {}

  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  std::string str(const std::string& key, const std::string& fallback) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    it->second.used = true;
    return it->second.value;
  }

  double num(const std::string& key, double fallback) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    it->second.used = true;
    try {
      size_t pos = 0;
      const double v = std::stod(it->second.value, &pos);
      if (pos != it->second.value.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("field '" + key + "': not a number: '" + it->second.value + "'",
                        it->second.line);
    }
  }

  int integer(const std::string& key, int fallback) {
    const double v = num(key, fallback);
    if (v != std::floor(v)) {
      throw ConfigError("field '" + key + "': expected an integer", line_of(key));
    }
    return static_cast<int>(v);
  }

  uint64_t u64(const std::string& key, uint64_t fallback) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    it->second.used = true;
    if (it->second.value.find('-') != std::string::npos) {
      throw ConfigError("field '" + key + "': not a non-negative integer", it->second.line);
    }
    try {
      return std::stoull(it->second.value);
    } catch (const std::exception&) {
      throw ConfigError("field '" + key + "': not a non-negative integer", it->second.line);
    }
  }

  std::vector<int> int_list(const std::string& key, std::vector<int> fallback) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    it->second.used = true;
    std::vector<int> out;
    std::string token;
    std::istringstream in(it->second.value);
    while (std::getline(in, token, ',')) {
      try {
        out.push_back(std::stoi(token));
      } catch (const std::exception&) {
        throw ConfigError("field '" + key + "': bad integer list", it->second.line);
      }
    }
    if (out.empty()) throw ConfigError("field '" + key + "': empty list", it->second.line);
    return out;
  }

  int line_of(const std::string& key) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? 0 : it->second.line;
  }

  void read_kernel(const std::string& role, ExperimentConfig::KernelBlock& block) {
    const std::string prefix = "kernel." + role + ".";
    block.type = str(prefix + "type", "zero");
    if (block.type == "zero") {
      // nothing else
    } else if (block.type == "uniform_window") {
      block.delta = num(prefix + "delta", 1.0);
      if (!(block.delta > 0.0)) {
        throw ConfigError("field '" + prefix + "delta': must be positive",
                          line_of(prefix + "delta"));
      }
      block.height = num(prefix + "height", 0.0);
    } else if (block.type == "exp_poly") {
      for (int i = 0;; ++i) {
        const std::string key = prefix + "term." + std::to_string(i);
        if (!has(key)) break;
        std::istringstream in(str(key, ""));
        std::array<double, 5> t{};
        if (!(in >> t[0] >> t[1] >> t[2] >> t[3] >> t[4])) {
          throw ConfigError("field '" + key + "': expected 'j re_mu im_mu re_c im_c'",
                            line_of(key));
        }
        block.terms.push_back(t);
      }
      if (block.terms.empty()) {
        throw ConfigError("kernel." + role + ": exp_poly needs at least kernel." + role +
                          ".term.0");
      }
    } else if (block.type == "tabulated") {
      block.csv = str(prefix + "csv", "");
      if (block.csv.empty()) {
        throw ConfigError("kernel." + role + ": tabulated kernel needs '" + prefix + "csv'");
      }
    } else {
      throw ConfigError("field '" + prefix + "type': unknown kernel type '" + block.type + "'",
                        line_of(prefix + "type"));
    }
  }

  void ensure_all_used() const {
    for (const auto& [key, entry] : kv_) {
      if (!entry.used) {
        throw ConfigError("unknown field '" + key + "'", entry.line);
      }
    }
  }

 private:
  KvMap kv_;
};

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  Reader r(tokenize(text));
  ExperimentConfig c;

  c.p = r.num("weight.p", c.p);
  c.lambda = r.num("weight.lambda", c.lambda);
  if (!(c.lambda > std::max(c.p, 0.5 * c.p))) {
    throw ConfigError("field 'weight.lambda': must satisfy lambda > max(p, p/2)",
                      r.line_of("weight.lambda"));
  }
  c.quad_nodes = r.integer("quadrature.nodes", c.quad_nodes);
  if (c.quad_nodes < 16) {
    throw ConfigError("field 'quadrature.nodes': must be >= 16", r.line_of("quadrature.nodes"));
  }
  c.quad_tail_tol = r.num("quadrature.tail_tol", c.quad_tail_tol);
  if (!(c.quad_tail_tol > 0.0)) {
    throw ConfigError("field 'quadrature.tail_tol': must be positive",
                      r.line_of("quadrature.tail_tol"));
  }

  r.read_kernel("alpha", c.alpha);
  r.read_kernel("beta", c.beta);
  r.read_kernel("gamma", c.gamma);
  c.gamma0 = r.num("kernel.gamma0", c.gamma0);

  c.dynamics_type = r.str("dynamics.type", c.dynamics_type);
  if (c.dynamics_type == "gbm") {
    c.drift = r.num("dynamics.drift", c.drift);
    c.vol = r.num("dynamics.vol", c.vol);
  } else if (c.dynamics_type == "mean_revert_delay") {
    c.rate = r.num("dynamics.rate", c.rate);
    c.vol = r.num("dynamics.vol", c.vol);
  } else if (c.dynamics_type == "linear") {
    static const char* names[8] = {"b0", "bx", "by", "bu", "s0", "sx", "sy", "su"};
    for (int i = 0; i < 8; ++i) {
      c.linear_coeffs[static_cast<size_t>(i)] =
          r.num(std::string("dynamics.") + names[i], c.linear_coeffs[static_cast<size_t>(i)]);
    }
  } else {
    throw ConfigError("field 'dynamics.type': unknown dynamics '" + c.dynamics_type + "'",
                      r.line_of("dynamics.type"));
  }

  c.s0 = r.num("initial.s0", c.s0);
  c.s1_type = r.str("initial.s1", c.s1_type);
  if (c.s1_type == "constant") {
    c.s1_value = r.num("initial.s1_value", c.s1_value);
  } else if (c.s1_type == "recent_constant") {
    c.s1_value = r.num("initial.s1_value", c.s1_value);
    c.s1_depth = r.num("initial.s1_depth", c.s1_depth);
    if (!(c.s1_depth > 0.0)) {
      throw ConfigError("field 'initial.s1_depth': must be positive",
                        r.line_of("initial.s1_depth"));
    }
  } else if (c.s1_type == "zero") {
    c.s1_value = 0.0;
  } else if (c.s1_type == "csv") {
    c.s1_csv = r.str("initial.s1_csv", "");
    if (c.s1_csv.empty()) throw ConfigError("initial.s1 = csv needs 'initial.s1_csv'");
  } else {
    throw ConfigError("field 'initial.s1': unknown history type '" + c.s1_type + "'",
                      r.line_of("initial.s1"));
  }

  c.dt = r.num("sim.dt", c.dt);
  if (!(c.dt > 0.0)) throw ConfigError("field 'sim.dt': must be positive", r.line_of("sim.dt"));
  c.T = r.num("sim.T", c.T);
  if (!(c.T > 0.0)) throw ConfigError("field 'sim.T': must be positive", r.line_of("sim.T"));
  const double steps = c.T / c.dt;
  if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps)) {
    throw ConfigError("field 'sim.dt': dt must divide T", r.line_of("sim.dt"));
  }
  c.paths = r.integer("sim.paths", c.paths);
  if (c.paths < 1) throw ConfigError("field 'sim.paths': must be >= 1", r.line_of("sim.paths"));
  c.seed = r.u64("sim.seed", c.seed);
  c.aux_step = r.str("sim.aux_step", c.aux_step);
  if (c.aux_step != "euler" && c.aux_step != "exact") {
    throw ConfigError("field 'sim.aux_step': expected 'euler' or 'exact'",
                      r.line_of("sim.aux_step"));
  }
  c.guard = r.num("sim.guard", c.guard);

  c.task_type = r.str("task.type", c.task_type);
  static const char* known_tasks[] = {"project", "simulate",     "error-scan",
                                      "price",   "control-eval", "basis"};
  if (std::find_if(std::begin(known_tasks), std::end(known_tasks), [&](const char* t) {
        return c.task_type == t;
      }) == std::end(known_tasks)) {
    throw ConfigError("field 'task.type': unknown task '" + c.task_type + "'",
                      r.line_of("task.type"));
  }
  c.task_kernel = r.str("task.kernel", c.task_kernel);
  c.task_n = r.integer("task.n", c.task_n);
  c.task_n_list = r.int_list("task.n_list", c.task_n_list);
  c.task_batches = r.integer("task.batches", c.task_batches);
  c.task_kmax = r.integer("task.kmax", c.task_kmax);
  c.task_xi_min = r.num("task.xi_min", c.task_xi_min);
  c.task_xi_points = r.integer("task.xi_points", c.task_xi_points);
  c.task_strike = r.num("task.strike", c.task_strike);
  c.task_payoff = r.str("task.payoff", c.task_payoff);
  c.task_direction = r.str("task.direction", c.task_direction);
  c.task_exercise_dates = r.integer("task.exercise_dates", c.task_exercise_dates);
  c.task_degree = r.integer("task.degree", c.task_degree);
  c.task_policy = r.str("task.policy", c.task_policy);
  c.task_policy_value = r.num("task.policy_value", c.task_policy_value);
  c.task_policy_scale = r.num("task.policy_scale", c.task_policy_scale);
  c.task_policy_level = r.num("task.policy_level", c.task_policy_level);
  c.task_cost = r.str("task.cost", c.task_cost);
  c.task_export_paths = r.integer("task.export_paths", c.task_export_paths);
  c.output_dir = r.str("output.dir", c.output_dir);

  r.ensure_all_used();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

namespace {

void emit_kernel(std::ostringstream& out, const char* role,
                 const ExperimentConfig::KernelBlock& k) {
  out << "kernel." << role << ".type = " << k.type << "\n";
  if (k.type == "uniform_window") {
    out << "kernel." << role << ".delta = " << format_full(k.delta) << "\n";
    out << "kernel." << role << ".height = " << format_full(k.height) << "\n";
  } else if (k.type == "exp_poly") {
    for (size_t i = 0; i < k.terms.size(); ++i) {
      out << "kernel." << role << ".term." << i << " = ";
      for (int j = 0; j < 5; ++j) out << (j ? " " : "") << format_full(k.terms[i][static_cast<size_t>(j)]);
      out << "\n";
    }
  } else if (k.type == "tabulated") {
    out << "kernel." << role << ".csv = " << k.csv << "\n";
  }
}

}  // namespace

std::string ExperimentConfig::canonical_text() const {
  std::ostringstream out;
  out << "weight.p = " << format_full(p) << "\n";
  out << "weight.lambda = " << format_full(lambda) << "\n";
  out << "quadrature.nodes = " << quad_nodes << "\n";
  out << "quadrature.tail_tol = " << format_full(quad_tail_tol) << "\n";
  emit_kernel(out, "alpha", alpha);
  emit_kernel(out, "beta", beta);
  emit_kernel(out, "gamma", gamma);
  out << "kernel.gamma0 = " << format_full(gamma0) << "\n";
  out << "dynamics.type = " << dynamics_type << "\n";
  if (dynamics_type == "gbm") {
    out << "dynamics.drift = " << format_full(drift) << "\n";
    out << "dynamics.vol = " << format_full(vol) << "\n";
  } else if (dynamics_type == "mean_revert_delay") {
    out << "dynamics.rate = " << format_full(rate) << "\n";
    out << "dynamics.vol = " << format_full(vol) << "\n";
  } else {
    static const char* names[8] = {"b0", "bx", "by", "bu", "s0", "sx", "sy", "su"};
    for (int i = 0; i < 8; ++i) {
      out << "dynamics." << names[i] << " = "
          << format_full(linear_coeffs[static_cast<size_t>(i)]) << "\n";
    }
  }
  out << "initial.s0 = " << format_full(s0) << "\n";
  out << "initial.s1 = " << s1_type << "\n";
  if (s1_type == "constant") out << "initial.s1_value = " << format_full(s1_value) << "\n";
  if (s1_type == "recent_constant") {
    out << "initial.s1_value = " << format_full(s1_value) << "\n";
    out << "initial.s1_depth = " << format_full(s1_depth) << "\n";
  }
  if (s1_type == "csv") out << "initial.s1_csv = " << s1_csv << "\n";
  out << "sim.dt = " << format_full(dt) << "\n";
  out << "sim.T = " << format_full(T) << "\n";
  out << "sim.paths = " << paths << "\n";
  out << "sim.seed = " << seed << "\n";
  out << "sim.aux_step = " << aux_step << "\n";
  out << "sim.guard = " << format_full(guard) << "\n";
  out << "task.type = " << task_type << "\n";
  out << "task.kernel = " << task_kernel << "\n";
  out << "task.n = " << task_n << "\n";
  out << "task.n_list = ";
  for (size_t i = 0; i < task_n_list.size(); ++i) out << (i ? "," : "") << task_n_list[i];
  out << "\n";
  out << "task.batches = " << task_batches << "\n";
  out << "task.kmax = " << task_kmax << "\n";
  out << "task.xi_min = " << format_full(task_xi_min) << "\n";
  out << "task.xi_points = " << task_xi_points << "\n";
  out << "task.strike = " << format_full(task_strike) << "\n";
  out << "task.payoff = " << task_payoff << "\n";
  out << "task.direction = " << task_direction << "\n";
  out << "task.exercise_dates = " << task_exercise_dates << "\n";
  out << "task.degree = " << task_degree << "\n";
  out << "task.policy = " << task_policy << "\n";
  out << "task.policy_value = " << format_full(task_policy_value) << "\n";
  out << "task.policy_scale = " << format_full(task_policy_scale) << "\n";
  out << "task.policy_level = " << format_full(task_policy_level) << "\n";
  out << "task.cost = " << task_cost << "\n";
  out << "task.export_paths = " << task_export_paths << "\n";
  out << "output.dir = " << output_dir << "\n";
  return out.str();
}

std::string ExperimentConfig::digest() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_text())));
  return buf;
}

namespace {

std::pair<std::vector<double>, std::vector<double>> load_two_column_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open CSV file: " + path);
  std::vector<double> xs, ys;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    if (line.find_first_not_of(" \t\r,") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double x, y;
    if (!(ls >> x >> y)) {
      throw ConfigError("CSV " + path + ": expected two numeric columns", line_no);
    }
    xs.push_back(x);
    ys.push_back(y);
  }
  if (xs.size() < 2) throw ConfigError("CSV " + path + ": need at least 2 rows");
  return {xs, ys};
}

std::optional<Kernel> build_kernel(const ExperimentConfig::KernelBlock& block, KernelRole role,
                                   const WeightSpec& spec) {
  if (block.type == "zero") return std::nullopt;
  if (block.type == "uniform_window") {
    return make_window_kernel(block.delta, role, block.height);
  }
  if (block.type == "exp_poly") {
    std::vector<ExpPolyTerm> terms;
    for (const auto& t : block.terms) {
      if (t[0] < 0 || t[0] != std::floor(t[0])) {
        throw ConfigError("exp_poly term: power must be a non-negative integer");
      }
      const double needed = spec.lambda_star() - spec.p;
      if (!(t[1] > needed)) {
        throw ConfigError("exp_poly term: Re(mu) must exceed lambda_star - p = " +
                          format_full(needed));
      }
      terms.push_back(ExpPolyTerm{static_cast<int>(t[0]), {t[1], t[2]}, {t[3], t[4]}});
    }
    return make_exppoly_kernel(ExpPolyFunction::make(std::move(terms)), role);
  }
  auto [xs, ys] = load_two_column_csv(block.csv);
  return make_tabulated_kernel(std::move(xs), std::move(ys), role);
}

}  // namespace

Experiment build_experiment(const ExperimentConfig& config) {
  Experiment e;
  e.spec = make_weight(config.p, config.lambda);

  e.problem.spec = e.spec;
  e.problem.alpha = build_kernel(config.alpha, KernelRole::alpha, e.spec);
  e.problem.beta = build_kernel(config.beta, KernelRole::beta, e.spec);
  e.problem.gamma = build_kernel(config.gamma, KernelRole::gamma, e.spec);
  e.problem.gamma0 = config.gamma0;

  std::vector<double> breakpoints;
  for (const auto& k : {e.problem.alpha, e.problem.beta, e.problem.gamma}) {
    if (k.has_value()) {
      for (double b : kernel_breakpoints(*k)) breakpoints.push_back(b);
    }
  }
  e.rule = make_quadrature(e.spec, config.quad_nodes, config.quad_tail_tol, breakpoints);

  if (config.dynamics_type == "gbm") {
    e.problem.dyn = make_gbm_dynamics(config.drift, config.vol);
  } else if (config.dynamics_type == "mean_revert_delay") {
    e.problem.dyn = make_mean_revert_delay_dynamics(config.rate, config.vol);
  } else {
    const auto& lc = config.linear_coeffs;
    e.problem.dyn = make_linear_dynamics(lc[0], lc[1], lc[2], lc[3], lc[4], lc[5], lc[6], lc[7]);
  }

  if (config.s1_type == "csv") {
    auto [xs, ys] = load_two_column_csv(config.s1_csv);
    e.problem.init = InitialDatum::from_grid(config.s0, std::move(xs), std::move(ys));
  } else if (config.s1_type == "recent_constant") {
    e.problem.init = InitialDatum::recent_constant(config.s0, config.s1_value, config.s1_depth);
  } else {
    e.problem.init = InitialDatum::constant(config.s0, config.s1_value);
  }

  e.sim_options.history_cutoff = e.rule.cutoff;
  e.sim_options.blowup_guard = config.guard;
  e.chain_options.exact_aux_step = config.aux_step == "exact";
  e.chain_options.blowup_guard = config.guard;
  return e;
}

}  // namespace sdde::cli
