#ifndef SDDE_ORACLE_HPP
#define SDDE_ORACLE_HPP

#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "sdde/dynamics.hpp"
#include "sdde/kernels.hpp"
#include "sdde/noise.hpp"

namespace sdde {

/// Initial state: scalar S_0 = s0 plus the history function s1 on the
/// negative half-line. Values below the configured history cutoff only enter
/// through the neglected convolution tail.
struct InitialDatum {
  double s0 = 0.0;
  std::function<double(double)> s1;

  static InitialDatum constant(double s0, double history_value);
  static InitialDatum zero_history(double s0);
  /// history_value on [-depth, 0], zero below. Unlike a globally constant
  /// history this lies in the weighted space even for p = 0, so the chain's
  /// initial-state coefficients are square-summable.
  static InitialDatum recent_constant(double s0, double history_value, double depth);
  static InitialDatum from_grid(double s0, std::vector<double> xi, std::vector<double> values);
};

/// Control input: a constant, an open-loop path (one value per step), or a
/// feedback rule on (t, S, y_alpha).
struct OracleControl {
  using Feedback = std::function<double(double, double, double)>;
  std::variant<double, std::vector<double>, Feedback> impl = 0.0;

  double value(double t, size_t step, double s, double y_alpha) const;
};

/// The delay problem: weight, dynamics, the three convolution kernels
/// (null = zero) and the scalar weight of the output Z = gamma0 S + y_gamma.
struct SddeProblem {
  WeightSpec spec;
  DynamicsSpec dyn;
  std::optional<Kernel> alpha;
  std::optional<Kernel> beta;
  std::optional<Kernel> gamma;
  double gamma0 = 0.0;
  InitialDatum init;
};

struct SimOptions {
  double history_cutoff = 40.0;  // truncation depth for infinite-support kernels
  double blowup_guard = 1e12;
};

namespace conv {

/// Fixed linear stencil for the delay convolution on the simulation grid:
/// y(t) = sum_m weights[m] * S(t - m dt). Trapezoid subintervals honor
/// kernel jumps through one-sided evaluation, off-grid edge nodes are
/// expanded by linear interpolation of S.
struct Stencil {
  std::vector<double> weights;
};

Stencil build(const Kernel& kernel, const WeightSpec& spec, double dt, double cutoff);

}  // namespace conv

struct OraclePath {
  std::vector<double> times;
  VecX S;
  VecX Z;
  VecX y_alpha;
  VecX y_beta;
  double dt = 0.0;
  double s0 = 0.0;
  std::function<double(double)> s1;  // kept for window reads before t = 0
};

/// Explicit Euler-Maruyama with trapezoid convolutions over a ring-buffer
/// history merged with the initial datum.
OraclePath simulate_sdde(const SddeProblem& problem, const OracleControl& control,
                         const NoisePath& noise, double T, const SimOptions& options = {});

/// Trapezoidal moving average of S over [t - delta, t], reaching into the
/// initial datum for t < delta.
std::vector<double> moving_average_path(const OraclePath& path, double delta);

}  // namespace sdde

#endif
