#ifndef SDDE_APPLICATIONS_HPP
#define SDDE_APPLICATIONS_HPP

#include <cstdint>
#include <vector>

#include "sdde/analysis.hpp"

namespace sdde {

/// Z = gamma0 S + integral of the gamma kernel against the history.
struct OutputFunctional {
  double gamma0 = 0.0;
  std::optional<Kernel> gamma_kernel;
};

/// gamma0^2 + ||gamma_kernel||_w^2; throws IntegrabilityError when the
/// kernel norm does not stabilise under quadrature refinement.
double output_norm_sq(const OutputFunctional& out, const WeightSpec& spec,
                      const QuadratureRule& rule);

enum class StopDirection { maximize, minimize };

struct StoppingProblem {
  double T = 1.0;
  double dt = 1.0 / 256.0;             // simulation grid containing the dates
  std::vector<double> exercise_dates;  // sorted, last equals T, on the sim grid
  std::function<double(double, double)> payoff;  // (t, z)
  StopDirection direction = StopDirection::maximize;
};

struct ValueEstimate {
  double value = 0.0;
  double std_error = 0.0;
  int paths = 0;
};

struct LsmcValue {
  double value = 0.0;      // low-biased resimulation estimate
  double std_error = 0.0;
  int paths = 0;
  double in_sample = 0.0;  // backward-induction estimate on the training set
};

struct LsmcOptions {
  double ridge = 1e-10;
  ChainSimOptions chain_options;
  SimOptions oracle_options;
};

/// Longstaff-Schwartz on the chain. Continuation values are regressed on
/// polynomial features of (S, Z, X^1..X^3) up to the given total degree,
/// in-the-money paths only for maximize problems. Training uses noise
/// streams [0, paths), the low-biased resimulation uses [paths, 2 paths).
LsmcValue lsmc_value(const MarkovSystem& sys, const VecX& x0, const StoppingProblem& prob,
                     int paths, int degree, uint64_t seed, const LsmcOptions& options = {});

/// Reference value from the oracle with the augmented state (S, Z): Markov on
/// the grid for window kernels, independent of the basis reduction.
LsmcValue lsmc_value_oracle(const SddeProblem& problem, const StoppingProblem& prob, int paths,
                            int degree, uint64_t seed, const LsmcOptions& options = {});

struct ControlProblem {
  double T = 1.0;
  std::function<double(double, double, double)> running_cost;  // f(t, z, u)
  std::function<double(double)> terminal_cost;                 // phi(z)
};

/// Monte Carlo estimate of J = E[int_0^T f(t, Z_t, u_t) dt + phi(Z_T)]
/// (trapezoid in time) under a fixed policy.
ValueEstimate policy_cost(const MarkovSystem& sys, const VecX& x0, const ControlProblem& prob,
                          const ChainControl& policy, double dt, int paths, uint64_t seed,
                          const ChainSimOptions& options = {});

ValueEstimate policy_cost(const SddeProblem& problem, const ControlProblem& prob,
                          const OracleControl& policy, double dt, int paths, uint64_t seed,
                          const SimOptions& options = {});

struct ValueGapRow {
  int n = 0;
  double value = 0.0;
  double std_error = 0.0;
  double gap = 0.0;
  double gap_std_error = 0.0;
  double tail_total = 0.0;
};

struct ValueGapReport {
  double oracle_value = 0.0;
  double oracle_std_error = 0.0;
  std::vector<ValueGapRow> rows;
  double fitted_bound_coeff = 0.0;  // K in gap ~ K sqrt(tail sums)
};

/// Stopping-problem gaps |V_oracle - V_n| against kernel tails.
ValueGapReport value_gap_report(const SddeProblem& problem, const QuadratureRule& rule,
                                const std::vector<int>& n_list, const StoppingProblem& prob,
                                int paths, int degree, uint64_t seed,
                                const LsmcOptions& options = {});

/// Policy-cost gaps |J_oracle - J_n| under shared noise.
ValueGapReport value_gap_report(const SddeProblem& problem, const QuadratureRule& rule,
                                const std::vector<int>& n_list, const ControlProblem& prob,
                                const CoupledControl& policy, double dt, int paths, uint64_t seed,
                                const LsmcOptions& options = {});

}  // namespace sdde

#endif
