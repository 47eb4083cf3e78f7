#include "sdde/applications.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

namespace sdde {

namespace {

template <typename Fn>
void parallel_paths(int count, const Fn& fn) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int workers =
      static_cast<int>(std::min<unsigned>(hw, static_cast<unsigned>(std::max(count, 1))));
  std::exception_ptr first_error = nullptr;
  std::mutex error_mutex;
  std::atomic<int> next{0};
  auto work = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// exponent vectors with total degree <= degree, deterministic order
std::vector<std::vector<int>> monomials_up_to(int nvars, int degree) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(static_cast<size_t>(nvars), 0);
  std::function<void(int, int)> rec = [&](int var, int remaining) {
    if (var == nvars) {
      out.push_back(cur);
      return;
    }
    for (int e = 0; e <= remaining; ++e) {
      cur[static_cast<size_t>(var)] = e;
      rec(var + 1, remaining - e);
    }
    cur[static_cast<size_t>(var)] = 0;
  };
  rec(0, degree);
  return out;
}

Eigen::RowVectorXd features_row(const Eigen::RowVectorXd& vars,
                                const std::vector<std::vector<int>>& monos) {
  Eigen::RowVectorXd out(static_cast<Index>(monos.size()));
  for (size_t m = 0; m < monos.size(); ++m) {
    double prod = 1.0;
    for (size_t v = 0; v < monos[m].size(); ++v) {
      for (int e = 0; e < monos[m][v]; ++e) prod *= vars[static_cast<Index>(v)];
    }
    out[static_cast<Index>(m)] = prod;
  }
  return out;
}

VecX ridge_solve(const MatX& a, const VecX& y, double ridge) {
  MatX ata = a.transpose() * a;
  const VecX aty = a.transpose() * y;
  if (!ata.allFinite() || !aty.allFinite()) {
    throw RegressionError("lsmc: non-finite regression inputs");
  }
  const double scale = std::max(ata.trace() / static_cast<double>(ata.rows()), 1e-300);
  ata.diagonal().array() += ridge * scale;
  Eigen::LDLT<MatX> ldlt(ata);
  if (ldlt.info() != Eigen::Success) {
    throw RegressionError("lsmc: normal equations singular beyond ridge tolerance");
  }
  const VecX beta = ldlt.solve(aty);
  if (!beta.allFinite()) {
    throw RegressionError("lsmc: normal equations singular beyond ridge tolerance");
  }
  return beta;
}

// state observations at the exercise dates
struct PathTable {
  std::vector<MatX> vars;  // one (paths x nvars) block per date
  std::vector<VecX> z;
};

std::vector<size_t> date_indices(const StoppingProblem& prob) {
  if (prob.exercise_dates.empty()) throw DomainError("stopping: no exercise dates");
  std::vector<size_t> idx;
  double prev = -1.0;
  for (double date : prob.exercise_dates) {
    if (date <= prev) throw DomainError("stopping: exercise dates must increase");
    prev = date;
    const auto i = static_cast<size_t>(std::llround(date / prob.dt));
    if (std::abs(static_cast<double>(i) * prob.dt - date) > 1e-9 * std::max(1.0, date)) {
      throw DomainError("stopping: exercise date off the simulation grid: " +
                        std::to_string(date));
    }
    idx.push_back(i);
  }
  if (std::abs(prob.exercise_dates.back() - prob.T) > 1e-12 * std::max(1.0, prob.T)) {
    throw DomainError("stopping: last exercise date must equal T");
  }
  return idx;
}

LsmcValue lsmc_core(const PathTable& train, const PathTable& eval_set,
                    const StoppingProblem& prob, int degree, double ridge) {
  const int dates = static_cast<int>(prob.exercise_dates.size());
  const int paths = static_cast<int>(train.z.front().size());
  const int nvars = static_cast<int>(train.vars.front().cols());
  const auto monos = monomials_up_to(nvars, degree);
  const int nfeat = static_cast<int>(monos.size());
  const bool maximize = prob.direction == StopDirection::maximize;

  VecX cash(paths);
  for (int i = 0; i < paths; ++i) {
    cash[i] = prob.payoff(prob.exercise_dates.back(), train.z.back()[i]);
  }
  std::vector<VecX> betas(static_cast<size_t>(dates));
  for (int e = dates - 2; e >= 0; --e) {
    const double t = prob.exercise_dates[static_cast<size_t>(e)];
    VecX immediate(paths);
    for (int i = 0; i < paths; ++i) {
      immediate[i] = prob.payoff(t, train.z[static_cast<size_t>(e)][i]);
    }
    std::vector<int> fit_set;
    if (maximize) {
      for (int i = 0; i < paths; ++i) {
        if (immediate[i] > 0.0) fit_set.push_back(i);
      }
    }
    if (static_cast<int>(fit_set.size()) < std::max(50, 2 * nfeat)) {
      fit_set.resize(static_cast<size_t>(paths));
      for (int i = 0; i < paths; ++i) fit_set[static_cast<size_t>(i)] = i;
    }
    MatX a(static_cast<Index>(fit_set.size()), nfeat);
    VecX y(static_cast<Index>(fit_set.size()));
    for (size_t r = 0; r < fit_set.size(); ++r) {
      a.row(static_cast<Index>(r)) =
          features_row(train.vars[static_cast<size_t>(e)].row(fit_set[r]), monos);
      y[static_cast<Index>(r)] = cash[fit_set[r]];
    }
    const VecX beta = ridge_solve(a, y, ridge);
    betas[static_cast<size_t>(e)] = beta;
    for (size_t r = 0; r < fit_set.size(); ++r) {
      const int i = fit_set[r];
      if (maximize && !(immediate[i] > 0.0)) continue;
      const double cont = a.row(static_cast<Index>(r)).dot(beta);
      if (maximize ? immediate[i] >= cont : immediate[i] <= cont) cash[i] = immediate[i];
    }
  }

  LsmcValue out;
  out.in_sample = cash.mean();

  const int eval_paths = static_cast<int>(eval_set.z.front().size());
  VecX realized(eval_paths);
  for (int i = 0; i < eval_paths; ++i) {
    double value = 0.0;
    bool stopped = false;
    for (int e = 0; e < dates - 1 && !stopped; ++e) {
      const double t = prob.exercise_dates[static_cast<size_t>(e)];
      const double immediate = prob.payoff(t, eval_set.z[static_cast<size_t>(e)][i]);
      if (maximize && !(immediate > 0.0)) continue;
      const Eigen::RowVectorXd feat =
          features_row(eval_set.vars[static_cast<size_t>(e)].row(i), monos);
      const double cont = feat.dot(betas[static_cast<size_t>(e)]);
      if (maximize ? immediate >= cont : immediate <= cont) {
        value = immediate;
        stopped = true;
      }
    }
    if (!stopped) value = prob.payoff(prob.exercise_dates.back(), eval_set.z.back()[i]);
    realized[i] = value;
  }
  out.paths = eval_paths;
  out.value = realized.mean();
  const double var = (realized.array() - out.value).square().sum() / (eval_paths - 1);
  out.std_error = std::sqrt(var / eval_paths);
  return out;
}

PathTable chain_table(const MarkovSystem& sys, const VecX& x0, const StoppingProblem& prob,
                      const std::vector<size_t>& dates, int paths, uint64_t seed,
                      uint64_t stream_offset, const ChainSimOptions& options) {
  const int nvars = 2 + std::min(sys.n, 3);  // S, Z, X^1..X^3
  const auto steps = static_cast<int>(std::llround(prob.T / prob.dt));
  PathTable table;
  table.vars.assign(dates.size(), MatX::Zero(paths, nvars));
  table.z.assign(dates.size(), VecX::Zero(paths));
  parallel_paths(paths, [&](int i) {
    const NoisePath noise =
        make_noise(prob.dt, steps, seed, stream_offset + static_cast<uint64_t>(i));
    const ChainPath path = simulate_chain(sys, x0, ChainControl{}, noise, prob.T, options);
    for (size_t e = 0; e < dates.size(); ++e) {
      const auto row = static_cast<Index>(dates[e]);
      const double z = path.Z[row];
      table.z[e][i] = z;
      table.vars[e](i, 0) = path.states(row, 0);
      table.vars[e](i, 1) = z;
      for (int v = 0; v < std::min(sys.n, 3); ++v) {
        table.vars[e](i, 2 + v) = path.states(row, 1 + v);
      }
    }
  });
  return table;
}

PathTable oracle_table(const SddeProblem& problem, const StoppingProblem& prob,
                       const std::vector<size_t>& dates, int paths, uint64_t seed,
                       uint64_t stream_offset, const SimOptions& options) {
  const auto steps = static_cast<int>(std::llround(prob.T / prob.dt));
  PathTable table;
  table.vars.assign(dates.size(), MatX::Zero(paths, 2));  // (S, Z)
  table.z.assign(dates.size(), VecX::Zero(paths));
  parallel_paths(paths, [&](int i) {
    const NoisePath noise =
        make_noise(prob.dt, steps, seed, stream_offset + static_cast<uint64_t>(i));
    const OraclePath path = simulate_sdde(problem, OracleControl{}, noise, prob.T, options);
    for (size_t e = 0; e < dates.size(); ++e) {
      const auto row = static_cast<Index>(dates[e]);
      table.z[e][i] = path.Z[row];
      table.vars[e](i, 0) = path.S[row];
      table.vars[e](i, 1) = path.Z[row];
    }
  });
  return table;
}

}  // namespace

double output_norm_sq(const OutputFunctional& out, const WeightSpec& spec,
                      const QuadratureRule& rule) {
  double norm = out.gamma0 * out.gamma0;
  if (out.gamma_kernel.has_value()) {
    norm += project_kernel(*out.gamma_kernel, 0, spec, rule).norm_sq_w;
  }
  return norm;
}

LsmcValue lsmc_value(const MarkovSystem& sys, const VecX& x0, const StoppingProblem& prob,
                     int paths, int degree, uint64_t seed, const LsmcOptions& options) {
  if (paths < 1000) throw DomainError("lsmc_value: need at least 1000 paths");
  if (degree < 1) throw DomainError("lsmc_value: degree must be >= 1");
  const auto dates = date_indices(prob);
  const PathTable train =
      chain_table(sys, x0, prob, dates, paths, seed, 0, options.chain_options);
  const PathTable eval_set = chain_table(sys, x0, prob, dates, paths, seed,
                                         static_cast<uint64_t>(paths), options.chain_options);
  return lsmc_core(train, eval_set, prob, degree, options.ridge);
}

LsmcValue lsmc_value_oracle(const SddeProblem& problem, const StoppingProblem& prob, int paths,
                            int degree, uint64_t seed, const LsmcOptions& options) {
  if (paths < 1000) throw DomainError("lsmc_value_oracle: need at least 1000 paths");
  if (degree < 1) throw DomainError("lsmc_value_oracle: degree must be >= 1");
  const auto dates = date_indices(prob);
  const PathTable train =
      oracle_table(problem, prob, dates, paths, seed, 0, options.oracle_options);
  const PathTable eval_set = oracle_table(problem, prob, dates, paths, seed,
                                          static_cast<uint64_t>(paths), options.oracle_options);
  return lsmc_core(train, eval_set, prob, degree, options.ridge);
}

namespace {

double trapezoid_cost(const ControlProblem& prob, const std::vector<double>& times,
                      const VecX& z, const std::function<double(size_t, double)>& control_at) {
  const size_t n = times.size();
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double w = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
    const double u = control_at(i, times[i]);
    acc += w * prob.running_cost(times[i], z[static_cast<Index>(i)], u);
  }
  const double dt = n > 1 ? times[1] - times[0] : 0.0;
  return acc * dt + prob.terminal_cost(z[static_cast<Index>(n - 1)]);
}

ValueEstimate summarize(const VecX& values) {
  ValueEstimate est;
  est.paths = static_cast<int>(values.size());
  est.value = values.mean();
  const double var = (values.array() - est.value).square().sum() / (values.size() - 1);
  est.std_error = std::sqrt(var / static_cast<double>(values.size()));
  return est;
}

}  // namespace

ValueEstimate policy_cost(const MarkovSystem& sys, const VecX& x0, const ControlProblem& prob,
                          const ChainControl& policy, double dt, int paths, uint64_t seed,
                          const ChainSimOptions& options) {
  const auto steps = static_cast<int>(std::llround(prob.T / dt));
  VecX values(paths);
  parallel_paths(paths, [&](int i) {
    const NoisePath noise = make_noise(dt, steps, seed, static_cast<uint64_t>(i));
    const ChainPath path = simulate_chain(sys, x0, policy, noise, prob.T, options);
    values[i] = trapezoid_cost(prob, path.times, path.Z, [&](size_t step, double t) {
      return policy.value(t, std::min(step, static_cast<size_t>(steps > 0 ? steps - 1 : 0)),
                          path.states.row(static_cast<Index>(step)).transpose());
    });
  });
  return summarize(values);
}

ValueEstimate policy_cost(const SddeProblem& problem, const ControlProblem& prob,
                          const OracleControl& policy, double dt, int paths, uint64_t seed,
                          const SimOptions& options) {
  const auto steps = static_cast<int>(std::llround(prob.T / dt));
  VecX values(paths);
  parallel_paths(paths, [&](int i) {
    const NoisePath noise = make_noise(dt, steps, seed, static_cast<uint64_t>(i));
    const OraclePath path = simulate_sdde(problem, policy, noise, prob.T, options);
    values[i] = trapezoid_cost(prob, path.times, path.Z, [&](size_t step, double t) {
      return policy.value(t, std::min(step, static_cast<size_t>(steps > 0 ? steps - 1 : 0)),
                          path.S[static_cast<Index>(step)],
                          path.y_alpha[static_cast<Index>(step)]);
    });
  });
  return summarize(values);
}

namespace {

double fit_bound_coeff(const std::vector<ValueGapRow>& rows) {
  double num = 0.0, den = 0.0;
  for (const auto& r : rows) {
    if (r.tail_total > 0.0) {
      num += r.gap * std::sqrt(r.tail_total);
      den += r.tail_total;
    }
  }
  return den > 0.0 ? num / den : 0.0;
}

double tail_total_at(const std::optional<ProjectedKernel>& pa,
                     const std::optional<ProjectedKernel>& pb,
                     const std::optional<ProjectedKernel>& pg, int n) {
  auto one = [&](const std::optional<ProjectedKernel>& pk) {
    if (!pk.has_value()) return 0.0;
    return std::max(pk->norm_sq_w - pk->coeffs.head(n + 1).squaredNorm(), 0.0);
  };
  return one(pa) + one(pb) + one(pg);
}

}  // namespace

ValueGapReport value_gap_report(const SddeProblem& problem, const QuadratureRule& rule,
                                const std::vector<int>& n_list, const StoppingProblem& prob,
                                int paths, int degree, uint64_t seed,
                                const LsmcOptions& options) {
  if (n_list.empty()) throw DomainError("value_gap_report: empty n list");
  const int max_n = *std::max_element(n_list.begin(), n_list.end());
  const WeightSpec& spec = problem.spec;
  std::optional<ProjectedKernel> pa, pb, pg;
  if (problem.alpha) pa = project_kernel(*problem.alpha, max_n, spec, rule);
  if (problem.beta) pb = project_kernel(*problem.beta, max_n, spec, rule);
  if (problem.gamma) pg = project_kernel(*problem.gamma, max_n, spec, rule);

  const LsmcValue oracle = lsmc_value_oracle(problem, prob, paths, degree, seed, options);

  ValueGapReport report;
  report.oracle_value = oracle.value;
  report.oracle_std_error = oracle.std_error;
  for (int n : n_list) {
    const MarkovSystem sys =
        build_laguerre_system(n, spec, pa, pb, pg, problem.gamma0, problem.dyn);
    const VecX x0 = project_initial_state(problem.init, n, spec, rule);
    const LsmcValue v = lsmc_value(sys, x0, prob, paths, degree, seed, options);
    ValueGapRow row;
    row.n = n;
    row.value = v.value;
    row.std_error = v.std_error;
    row.gap = std::abs(v.value - oracle.value);
    row.gap_std_error = std::sqrt(v.std_error * v.std_error + oracle.std_error * oracle.std_error);
    row.tail_total = tail_total_at(pa, pb, pg, n);
    report.rows.push_back(row);
  }
  report.fitted_bound_coeff = fit_bound_coeff(report.rows);
  return report;
}

ValueGapReport value_gap_report(const SddeProblem& problem, const QuadratureRule& rule,
                                const std::vector<int>& n_list, const ControlProblem& prob,
                                const CoupledControl& policy, double dt, int paths, uint64_t seed,
                                const LsmcOptions& options) {
  if (n_list.empty()) throw DomainError("value_gap_report: empty n list");
  const int max_n = *std::max_element(n_list.begin(), n_list.end());
  const WeightSpec& spec = problem.spec;
  std::optional<ProjectedKernel> pa, pb, pg;
  if (problem.alpha) pa = project_kernel(*problem.alpha, max_n, spec, rule);
  if (problem.beta) pb = project_kernel(*problem.beta, max_n, spec, rule);
  if (problem.gamma) pg = project_kernel(*problem.gamma, max_n, spec, rule);

  const auto steps = static_cast<int>(std::llround(prob.T / dt));
  const int n_count = static_cast<int>(n_list.size());

  std::vector<MarkovSystem> systems;
  std::vector<VecX> x0s;
  for (int n : n_list) {
    systems.push_back(build_laguerre_system(n, spec, pa, pb, pg, problem.gamma0, problem.dyn));
    x0s.push_back(project_initial_state(problem.init, n, spec, rule));
  }

  VecX oracle_values(paths);
  MatX chain_values(paths, n_count);
  parallel_paths(paths, [&](int i) {
    const NoisePath noise = make_noise(dt, steps, seed, static_cast<uint64_t>(i));
    const OraclePath opath = simulate_sdde(problem, policy.oracle, noise, prob.T,
                                           options.oracle_options);
    oracle_values[i] = trapezoid_cost(prob, opath.times, opath.Z, [&](size_t step, double t) {
      return policy.oracle.value(t, std::min(step, static_cast<size_t>(steps - 1)),
                                 opath.S[static_cast<Index>(step)],
                                 opath.y_alpha[static_cast<Index>(step)]);
    });
    for (int j = 0; j < n_count; ++j) {
      const ChainPath cpath =
          simulate_chain(systems[static_cast<size_t>(j)], x0s[static_cast<size_t>(j)],
                         policy.chain, noise, prob.T, options.chain_options);
      chain_values(i, j) =
          trapezoid_cost(prob, cpath.times, cpath.Z, [&](size_t step, double t) {
            return policy.chain.value(t, std::min(step, static_cast<size_t>(steps - 1)),
                                      cpath.states.row(static_cast<Index>(step)).transpose());
          });
    }
  });

  ValueGapReport report;
  const ValueEstimate oracle_est = summarize(oracle_values);
  report.oracle_value = oracle_est.value;
  report.oracle_std_error = oracle_est.std_error;
  for (int j = 0; j < n_count; ++j) {
    const VecX diffs = oracle_values - chain_values.col(j);
    const ValueEstimate diff_est = summarize(diffs);
    const ValueEstimate chain_est = summarize(chain_values.col(j));
    ValueGapRow row;
    row.n = n_list[static_cast<size_t>(j)];
    row.value = chain_est.value;
    row.std_error = chain_est.std_error;
    row.gap = std::abs(diff_est.value);
    row.gap_std_error = diff_est.std_error;
    row.tail_total = tail_total_at(pa, pb, pg, row.n);
    report.rows.push_back(row);
  }
  report.fitted_bound_coeff = fit_bound_coeff(report.rows);
  return report;
}

}  // namespace sdde
