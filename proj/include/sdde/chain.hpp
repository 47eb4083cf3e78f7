#ifndef SDDE_CHAIN_HPP
#define SDDE_CHAIN_HPP

#include <optional>

#include "sdde/laguerre.hpp"
#include "sdde/markov_system.hpp"
#include "sdde/oracle.hpp"

namespace sdde {

/// Control input for the chain: constant, open-loop path, or feedback on
/// (t, state) with state = (S, X^1..X^n).
struct ChainControl {
  using Feedback = std::function<double(double, const VecX&)>;
  std::variant<double, std::vector<double>, Feedback> impl = 0.0;

  double value(double t, size_t step, const VecX& state) const;
};

/// Truncated system of order n with the Laguerre drift coupling
/// (sqrt(2 p0), -2 p0 strictly below the diagonal, -(p0 - p/2) on it).
/// Null projections stand for zero kernels.
MarkovSystem build_laguerre_system(int n, const WeightSpec& spec,
                                   const std::optional<ProjectedKernel>& alpha,
                                   const std::optional<ProjectedKernel>& beta,
                                   const std::optional<ProjectedKernel>& gamma, double gamma0,
                                   const DynamicsSpec& dyn);

/// (x^0, ..., x^n) with x^0 = s0 and x^k = <L_{k-1}, s1>_w.
VecX project_initial_state(const InitialDatum& init, int n, const WeightSpec& spec,
                           const QuadratureRule& rule);

struct ChainSimOptions {
  bool exact_aux_step = false;  // matrix-exponential update of the auxiliary block
  double blowup_guard = 1e12;
};

struct ChainPath {
  std::vector<double> times;
  MatX states;  // (steps+1) x (n+1), column 0 is S
  VecX Z;
  double dt = 0.0;
};

ChainPath simulate_chain(const MarkovSystem& sys, const VecX& x0, const ChainControl& control,
                         const NoisePath& noise, double T, const ChainSimOptions& options = {});

/// Paired control for runs that drive the oracle and the chain with the same
/// Brownian path.
struct CoupledControl {
  OracleControl oracle;
  ChainControl chain;

  static CoupledControl constant(double u);
};

struct CoupledRun {
  OraclePath oracle;
  ChainPath chain;
};

/// Oracle and chain on identical increments; the chain starts from the
/// projected initial state.
CoupledRun coupled_run(const SddeProblem& problem, const MarkovSystem& sys,
                       const QuadratureRule& rule, const CoupledControl& control,
                       const NoisePath& noise, double T, const SimOptions& oracle_options = {},
                       const ChainSimOptions& chain_options = {});

}  // namespace sdde

#endif
