#include "sdde/chain.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <atomic>
#include <cmath>
#include <iostream>
#include <string>

namespace sdde {

double ChainControl::value(double t, size_t step, const VecX& state) const {
  if (const auto* c = std::get_if<double>(&impl)) return *c;
  if (const auto* path = std::get_if<std::vector<double>>(&impl)) {
    if (step >= path->size()) {
      throw DomainError("ChainControl: open-loop path shorter than the time grid");
    }
    return (*path)[step];
  }
  return std::get<Feedback>(impl)(t, state);
}

CoupledControl CoupledControl::constant(double u) {
  CoupledControl c;
  c.oracle.impl = u;
  c.chain.impl = u;
  return c;
}

MarkovSystem build_laguerre_system(int n, const WeightSpec& spec,
                                   const std::optional<ProjectedKernel>& alpha,
                                   const std::optional<ProjectedKernel>& beta,
                                   const std::optional<ProjectedKernel>& gamma, double gamma0,
                                   const DynamicsSpec& dyn) {
  if (n < 0) throw DomainError("build_laguerre_system: n must be >= 0");
  auto take = [&](const std::optional<ProjectedKernel>& pk, const char* name) {
    VecX out = VecX::Zero(n + 1);
    if (!pk.has_value()) return out;
    if (!(pk->spec == spec)) {
      throw SpecMismatch(std::string("build_laguerre_system: ") + name +
                         " projection was computed with a different weight spec");
    }
    if (pk->n < n) {
      throw SpecMismatch(std::string("build_laguerre_system: ") + name +
                         " projection order is smaller than the system order");
    }
    out = pk->coeffs.head(n + 1);
    return out;
  };

  MarkovSystem sys;
  sys.n = n;
  sys.spec = spec;
  sys.dyn = dyn;
  sys.gamma0 = gamma0;
  sys.drift_kind = MarkovSystem::DriftKind::laguerre;
  sys.alpha_coeffs = take(alpha, "alpha");
  sys.beta_coeffs = take(beta, "beta");
  sys.gamma_coeffs = take(gamma, "gamma");
  sys.gamma_coeffs[0] = gamma0;

  const double p0 = spec.p0;
  sys.q = VecX::Constant(n, std::sqrt(2.0 * p0));
  sys.Q = MatX::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    for (int h = 0; h < k; ++h) sys.Q(k, h) = -2.0 * p0;
    sys.Q(k, k) = -(p0 - 0.5 * spec.p);
  }
  return sys;
}

VecX project_initial_state(const InitialDatum& init, int n, const WeightSpec& spec,
                           const QuadratureRule& rule) {
  VecX x = VecX::Zero(n + 1);
  x[0] = init.s0;
  if (n == 0) return x;
  const size_t count = rule.nodes.size();
  VecX s1_vals(static_cast<Index>(count));
  for (size_t i = 0; i < count; ++i) {
    const double v = init.s1 ? init.s1(rule.nodes[i]) : 0.0;
    if (!std::isfinite(v)) {
      throw DomainError("project_initial_state: history is not finite on the quadrature nodes");
    }
    s1_vals[static_cast<Index>(i)] = v;
  }
  for (int k = 1; k <= n; ++k) {
    double acc = 0.0;
    for (size_t i = 0; i < count; ++i) {
      const double xi = rule.nodes[i];
      acc += rule.weights[i] * basis_eval(k, spec, xi) * s1_vals[static_cast<Index>(i)] *
             spec.weight(xi);
    }
    x[k] = acc;
  }
  return x;
}

namespace {

std::atomic<bool> g_stiffness_warned{false};

void maybe_warn_stiff(const MarkovSystem& sys, double dt) {
  double bound;
  if (sys.drift_kind == MarkovSystem::DriftKind::laguerre) {
    bound = dt * (sys.spec.p0 * (2.0 * sys.n + 1.0) + 0.5 * std::abs(sys.spec.p));
  } else {
    bound = sys.n == 0 ? 0.0 : dt * sys.Q.cwiseAbs().rowwise().sum().maxCoeff();
  }
  if (bound >= 0.5 && !g_stiffness_warned.exchange(true)) {
    std::cerr << "warning: explicit auxiliary step may be unstable (dt * drift bound = " << bound
              << " >= 0.5); reduce dt or enable the exact auxiliary step\n";
  }
}

}  // namespace

ChainPath simulate_chain(const MarkovSystem& sys, const VecX& x0, const ChainControl& control,
                         const NoisePath& noise, double T, const ChainSimOptions& options) {
  const double dt = noise.dt;
  if (!(dt > 0.0)) throw DomainError("simulate_chain: noise has no grid");
  const auto steps = static_cast<size_t>(std::llround(T / dt));
  if (std::abs(static_cast<double>(steps) * dt - T) > 1e-12 * std::max(1.0, T)) {
    throw DomainError("simulate_chain: dt must divide T");
  }
  if (noise.increments.size() < steps) {
    throw SpecMismatch("simulate_chain: noise path shorter than T/dt");
  }
  if (x0.size() != sys.n + 1) {
    throw SpecMismatch("simulate_chain: initial state size does not match system order");
  }
  if (!options.exact_aux_step) maybe_warn_stiff(sys, dt);

  const int n = sys.n;
  MatX exp_aux, exp_in;
  if (options.exact_aux_step && n > 0) {
    MatX aug = MatX::Zero(n + 1, n + 1);
    aug.topLeftCorner(n, n) = sys.Q;
    aug.topRightCorner(n, 1) = sys.q;
    const MatX e = (dt * aug).exp();
    exp_aux = e.topLeftCorner(n, n);
    exp_in = e.topRightCorner(n, 1);
  }

  ChainPath path;
  path.dt = dt;
  path.times.resize(steps + 1);
  path.states.resize(static_cast<Index>(steps) + 1, n + 1);
  path.Z.resize(static_cast<Index>(steps) + 1);

  VecX state = x0;
  for (size_t i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) * dt;
    path.times[i] = t;
    path.states.row(static_cast<Index>(i)) = state.transpose();
    path.Z[static_cast<Index>(i)] = sys.output(state);
    if (i == steps) break;

    const double ya = sys.delay_input_alpha(state);
    const double yb = sys.delay_input_beta(state);
    const double u = control.value(t, i, state);
    const double s_old = state[0];
    const double s_new =
        s_old + sys.dyn.b(s_old, ya, u) * dt + sys.dyn.sigma(s_old, yb, u) * noise.increments[i];
    if (n > 0) {
      if (options.exact_aux_step) {
        state.tail(n) = (exp_aux * state.tail(n) + exp_in * s_old).eval();
      } else {
        state.tail(n) += dt * (sys.q * s_old + sys.Q * state.tail(n)).eval();
      }
    }
    state[0] = s_new;
    if (!(state.cwiseAbs().maxCoeff() < options.blowup_guard)) {
      throw NumericalBlowup("simulate_chain: state exceeded guard " +
                            std::to_string(options.blowup_guard) + " at t=" +
                            std::to_string(t + dt));
    }
  }
  return path;
}

CoupledRun coupled_run(const SddeProblem& problem, const MarkovSystem& sys,
                       const QuadratureRule& rule, const CoupledControl& control,
                       const NoisePath& noise, double T, const SimOptions& oracle_options,
                       const ChainSimOptions& chain_options) {
  if (!(problem.spec == sys.spec)) {
    throw SpecMismatch("coupled_run: problem and system weight specs differ");
  }
  CoupledRun run;
  run.oracle = simulate_sdde(problem, control.oracle, noise, T, oracle_options);
  const VecX x0 = project_initial_state(problem.init, sys.n, sys.spec, rule);
  run.chain = simulate_chain(sys, x0, control.chain, noise, T, chain_options);
  return run;
}

}  // namespace sdde
