#ifndef SDDE_ANALYSIS_HPP
#define SDDE_ANALYSIS_HPP

#include <cstdint>
#include <vector>

#include "sdde/chain.hpp"

namespace sdde {

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Least squares of log y on log x. Inputs must be positive, >= 3 points.
RateFit fit_rate(const std::vector<double>& xs, const std::vector<double>& ys);

struct ErrorScanConfig {
  SddeProblem problem;
  CoupledControl control;
  QuadratureRule rule;
  double dt = 1.0 / 256.0;
  double T = 1.0;
  int paths = 100;
  uint64_t seed = 0;
  int batches = 10;
  SimOptions oracle_options;
  ChainSimOptions chain_options;
};

struct ErrorScanRow {
  int n = 0;
  double tail_alpha = 0.0;
  double tail_beta = 0.0;
  double tail_gamma = 0.0;
  double tail_total = 0.0;
  double mean_sup_sq = 0.0;  // estimate of E sup_t |Z - Z^n|^2
  double std_error = 0.0;    // batch-mean standard error
};

struct ErrorReport {
  std::vector<ErrorScanRow> rows;
  MatX batch_means;  // batches x |n_list|
  RateFit tail_fit;  // log tail_total vs log n (NaN slope when not fittable)
  RateFit error_fit;
  int paths = 0;
  int batches = 0;
  double dt = 0.0;
  double T = 0.0;
  uint64_t seed = 0;
};

/// Coupled Monte Carlo over shared noise: one oracle run per path, one chain
/// run per (path, n), sup taken over the time grid. Path batches run on a
/// small worker pool and are aggregated in batch order.
ErrorReport error_scan(const ErrorScanConfig& config, const std::vector<int>& n_list);

}  // namespace sdde

#endif
