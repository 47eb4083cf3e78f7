#include "sdde/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

namespace sdde {

RateFit fit_rate(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw DomainError("fit_rate: length mismatch");
  if (xs.size() < 3) throw DomainError("fit_rate: need at least 3 points");
  const size_t n = xs.size();
  std::vector<double> lx(n), ly(n);
  for (size_t i = 0; i < n; ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) {
      throw DomainError("fit_rate: inputs must be positive");
    }
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
  }
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("fit_rate: degenerate abscissae");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  const double ss_res = syy - fit.slope * sxy;
  fit.r2 = syy > 0.0 ? std::max(0.0, 1.0 - ss_res / syy) : 1.0;
  return fit;
}

namespace {

// run batch jobs 0..count-1 on a few workers; results must be written to
// slots indexed by the batch id so aggregation order stays deterministic
template <typename Fn>
void run_batched(int count, const Fn& fn) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int workers = static_cast<int>(std::min<unsigned>(hw, static_cast<unsigned>(count)));
  std::exception_ptr first_error = nullptr;
  std::mutex error_mutex;
  std::atomic<int> next{0};
  auto work = [&]() {
    for (;;) {
      const int b = next.fetch_add(1);
      if (b >= count) return;
      try {
        fn(b);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::optional<ProjectedKernel> project_optional(const std::optional<Kernel>& kernel, int n,
                                                const WeightSpec& spec,
                                                const QuadratureRule& rule) {
  if (!kernel.has_value()) return std::nullopt;
  return project_kernel(*kernel, n, spec, rule);
}

double tail_at(const std::optional<ProjectedKernel>& pk, int n) {
  if (!pk.has_value()) return 0.0;
  const double head = pk->coeffs.head(n + 1).squaredNorm();
  return std::max(pk->norm_sq_w - head, 0.0);
}

}  // namespace

ErrorReport error_scan(const ErrorScanConfig& config, const std::vector<int>& n_list) {
  if (config.paths < 100) throw DomainError("error_scan: need at least 100 paths");
  if (n_list.empty()) throw DomainError("error_scan: empty n list");
  for (size_t i = 1; i < n_list.size(); ++i) {
    if (!(n_list[i] > n_list[i - 1])) throw DomainError("error_scan: n list must increase");
  }
  const int batches = std::max(config.batches, 10);
  const int n_count = static_cast<int>(n_list.size());
  const int max_n = n_list.back();
  const WeightSpec& spec = config.problem.spec;

  const auto pa = project_optional(config.problem.alpha, max_n, spec, config.rule);
  const auto pb = project_optional(config.problem.beta, max_n, spec, config.rule);
  const auto pg = project_optional(config.problem.gamma, max_n, spec, config.rule);

  std::vector<MarkovSystem> systems;
  systems.reserve(n_list.size());
  for (int n : n_list) {
    systems.push_back(
        build_laguerre_system(n, spec, pa, pb, pg, config.problem.gamma0, config.problem.dyn));
  }

  const auto steps = static_cast<int>(std::llround(config.T / config.dt));
  std::vector<VecX> x0s;
  x0s.reserve(n_list.size());
  for (int n : n_list) {
    x0s.push_back(project_initial_state(config.problem.init, n, spec, config.rule));
  }

  MatX batch_sums = MatX::Zero(batches, n_count);
  VecX batch_counts = VecX::Zero(batches);
  std::string failure;
  std::mutex failure_mutex;

  run_batched(batches, [&](int b) {
    const int lo = static_cast<int>(static_cast<long long>(config.paths) * b / batches);
    const int hi = static_cast<int>(static_cast<long long>(config.paths) * (b + 1) / batches);
    for (int path_index = lo; path_index < hi; ++path_index) {
      const NoisePath noise =
          make_noise(config.dt, steps, config.seed, static_cast<uint64_t>(path_index));
      OraclePath oracle;
      try {
        oracle = simulate_sdde(config.problem, config.control.oracle, noise, config.T,
                               config.oracle_options);
      } catch (const NumericalBlowup& e) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        failure = std::string("oracle path ") + std::to_string(path_index) + ": " + e.what();
        throw;
      }
      for (int j = 0; j < n_count; ++j) {
        ChainPath chain;
        try {
          chain = simulate_chain(systems[static_cast<size_t>(j)], x0s[static_cast<size_t>(j)],
                                 config.control.chain, noise, config.T, config.chain_options);
        } catch (const NumericalBlowup& e) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          failure = std::string("chain n=") + std::to_string(n_list[static_cast<size_t>(j)]) +
                    ", path " + std::to_string(path_index) + ": " + e.what();
          throw;
        }
        const double sup = (oracle.Z - chain.Z).cwiseAbs().maxCoeff();
        batch_sums(b, j) += sup * sup;
      }
    }
    batch_counts[b] = hi - lo;
  });

  ErrorReport report;
  report.paths = config.paths;
  report.batches = batches;
  report.dt = config.dt;
  report.T = config.T;
  report.seed = config.seed;
  report.batch_means = MatX::Zero(batches, n_count);
  for (int b = 0; b < batches; ++b) {
    report.batch_means.row(b) = batch_sums.row(b) / std::max(batch_counts[b], 1.0);
  }

  std::vector<double> ns_d, tails_d, errs_d;
  for (int j = 0; j < n_count; ++j) {
    ErrorScanRow row;
    row.n = n_list[static_cast<size_t>(j)];
    row.tail_alpha = tail_at(pa, row.n);
    row.tail_beta = tail_at(pb, row.n);
    row.tail_gamma = tail_at(pg, row.n);
    row.tail_total = row.tail_alpha + row.tail_beta + row.tail_gamma;
    double total = 0.0;
    for (int b = 0; b < batches; ++b) total += batch_sums(b, j);
    row.mean_sup_sq = total / config.paths;
    double var = 0.0;
    for (int b = 0; b < batches; ++b) {
      const double d = report.batch_means(b, j) - row.mean_sup_sq;
      var += d * d;
    }
    var /= (batches - 1);
    row.std_error = std::sqrt(var / batches);
    report.rows.push_back(row);
    ns_d.push_back(row.n);
    tails_d.push_back(row.tail_total);
    errs_d.push_back(row.mean_sup_sq);
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto try_fit = [&](const std::vector<double>& ys) {
    for (double y : ys) {
      if (!(y > 0.0)) return RateFit{nan, nan, nan};
    }
    if (ys.size() < 3) return RateFit{nan, nan, nan};
    return fit_rate(ns_d, ys);
  };
  report.tail_fit = try_fit(tails_d);
  report.error_fit = try_fit(errs_d);
  return report;
}

}  // namespace sdde
