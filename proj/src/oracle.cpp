#include "sdde/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sdde {

InitialDatum InitialDatum::constant(double s0, double history_value) {
  InitialDatum d;
  d.s0 = s0;
  d.s1 = [history_value](double) { return history_value; };
  return d;
}

InitialDatum InitialDatum::zero_history(double s0) { return constant(s0, 0.0); }

InitialDatum InitialDatum::recent_constant(double s0, double history_value, double depth) {
  if (!(depth > 0.0)) throw DomainError("InitialDatum::recent_constant: depth must be positive");
  InitialDatum d;
  d.s0 = s0;
  d.s1 = [history_value, depth](double xi) { return xi >= -depth ? history_value : 0.0; };
  return d;
}

InitialDatum InitialDatum::from_grid(double s0, std::vector<double> xi,
                                     std::vector<double> values) {
  if (xi.size() != values.size() || xi.size() < 2) {
    throw DomainError("InitialDatum::from_grid: need matching lists with >= 2 samples");
  }
  for (size_t i = 1; i < xi.size(); ++i) {
    if (!(xi[i] > xi[i - 1])) throw DomainError("InitialDatum::from_grid: grid must increase");
  }
  InitialDatum d;
  d.s0 = s0;
  // zero below the sampled range (same convention as tabulated kernels),
  // most recent sample between the top grid point and the origin
  d.s1 = [xi = std::move(xi), values = std::move(values)](double x) {
    if (x < xi.front()) return 0.0;
    const auto it = std::upper_bound(xi.begin(), xi.end(), x);
    if (it == xi.end()) return values.back();
    if (it == xi.begin()) return values.front();
    const size_t hi = static_cast<size_t>(it - xi.begin());
    const size_t lo = hi - 1;
    const double frac = (x - xi[lo]) / (xi[hi] - xi[lo]);
    return values[lo] + frac * (values[hi] - values[lo]);
  };
  return d;
}

double OracleControl::value(double t, size_t step, double s, double y_alpha) const {
  if (const auto* c = std::get_if<double>(&impl)) return *c;
  if (const auto* path = std::get_if<std::vector<double>>(&impl)) {
    if (step >= path->size()) {
      throw DomainError("OracleControl: open-loop path shorter than the time grid");
    }
    return (*path)[step];
  }
  return std::get<Feedback>(impl)(t, s, y_alpha);
}

namespace conv {

Stencil build(const Kernel& kernel, const WeightSpec& spec, double dt, double cutoff) {
  Stencil st;
  const double depth = std::min(kernel_support_depth(kernel), cutoff);
  if (!(depth > 0.0)) return st;

  std::vector<double> nodes;
  nodes.push_back(0.0);
  for (int m = 1;; ++m) {
    const double xi = -m * dt;
    if (xi <= -depth + 1e-12 * dt) break;
    nodes.push_back(xi);
  }
  nodes.push_back(-depth);
  for (double b : kernel_breakpoints(kernel)) {
    if (b > -depth && b < 0.0) nodes.push_back(b);
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end(),
                          [&](double a, double b) { return std::abs(b - a) < 1e-12 * dt; }),
              nodes.end());

  const size_t max_index = static_cast<size_t>(std::ceil(depth / dt - 1e-12));
  st.weights.assign(max_index + 1, 0.0);
  auto deposit = [&](double xi, double amount) {
    const double pos = -xi / dt;
    const size_t lo = std::min(static_cast<size_t>(pos), max_index);
    const double frac = pos - static_cast<double>(lo);
    if (frac < 1e-12 || lo == max_index) {
      st.weights[lo] += amount;
    } else {
      st.weights[lo] += amount * (1.0 - frac);
      st.weights[lo + 1] += amount * frac;
    }
  };
  for (size_t i = 0; i + 1 < nodes.size(); ++i) {
    const double a = nodes[i], b = nodes[i + 1];
    const double h = 0.5 * (b - a);
    deposit(a, h * kernel_eval_side(kernel, a, true) * spec.weight(a));
    deposit(b, h * kernel_eval_side(kernel, b, false) * spec.weight(b));
  }
  while (!st.weights.empty() && st.weights.back() == 0.0) st.weights.pop_back();
  return st;
}

}  // namespace conv

namespace {

// circular history: ring[(head + m) % size] = S(t - m dt)
struct Ring {
  std::vector<double> buf;
  size_t head = 0;

  void push(double v) {
    head = (head == 0 ? buf.size() : head) - 1;
    buf[head] = v;
  }
  double dot(const std::vector<double>& w) const {
    double acc = 0.0;
    const size_t n = w.size(), size = buf.size();
    const size_t first = std::min(n, size - head);
    for (size_t m = 0; m < first; ++m) acc += w[m] * buf[head + m];
    for (size_t m = first; m < n; ++m) acc += w[m] * buf[head + m - size];
    return acc;
  }
};

}  // namespace

OraclePath simulate_sdde(const SddeProblem& problem, const OracleControl& control,
                         const NoisePath& noise, double T, const SimOptions& options) {
  const double dt = noise.dt;
  if (!(dt > 0.0)) throw DomainError("simulate_sdde: noise has no grid");
  const auto steps = static_cast<size_t>(std::llround(T / dt));
  if (std::abs(static_cast<double>(steps) * dt - T) > 1e-12 * std::max(1.0, T)) {
    throw DomainError("simulate_sdde: dt must divide T");
  }
  if (noise.increments.size() < steps) {
    throw SpecMismatch("simulate_sdde: noise path shorter than T/dt");
  }

  conv::Stencil sa, sb, sg;
  if (problem.alpha) sa = conv::build(*problem.alpha, problem.spec, dt, options.history_cutoff);
  if (problem.beta) sb = conv::build(*problem.beta, problem.spec, dt, options.history_cutoff);
  if (problem.gamma) sg = conv::build(*problem.gamma, problem.spec, dt, options.history_cutoff);

  const size_t ring_size =
      std::max({sa.weights.size(), sb.weights.size(), sg.weights.size(), size_t{1}});
  Ring ring;
  ring.buf.resize(ring_size);
  ring.head = 0;
  ring.buf[0] = problem.init.s0;
  for (size_t m = 1; m < ring_size; ++m) {
    const double v = problem.init.s1 ? problem.init.s1(-static_cast<double>(m) * dt) : 0.0;
    if (!std::isfinite(v)) {
      throw DomainError("simulate_sdde: initial history is not finite on the grid");
    }
    ring.buf[m] = v;
  }

  OraclePath path;
  path.dt = dt;
  path.s0 = problem.init.s0;
  path.s1 = problem.init.s1;
  path.times.resize(steps + 1);
  path.S.resize(static_cast<Index>(steps) + 1);
  path.Z.resize(static_cast<Index>(steps) + 1);
  path.y_alpha.resize(static_cast<Index>(steps) + 1);
  path.y_beta.resize(static_cast<Index>(steps) + 1);

  double s = problem.init.s0;
  for (size_t i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) * dt;
    const double ya = sa.weights.empty() ? 0.0 : ring.dot(sa.weights);
    const double yb = sb.weights.empty() ? 0.0 : ring.dot(sb.weights);
    const double yg = sg.weights.empty() ? 0.0 : ring.dot(sg.weights);
    path.times[i] = t;
    path.S[static_cast<Index>(i)] = s;
    path.y_alpha[static_cast<Index>(i)] = ya;
    path.y_beta[static_cast<Index>(i)] = yb;
    path.Z[static_cast<Index>(i)] = problem.gamma0 * s + yg;
    if (i == steps) break;

    const double u = control.value(t, i, s, ya);
    const double drift = problem.dyn.b(s, ya, u);
    const double diff = problem.dyn.sigma(s, yb, u);
    s = s + drift * dt + diff * noise.increments[i];
    if (!(std::abs(s) < options.blowup_guard)) {
      throw NumericalBlowup("simulate_sdde: |S| exceeded guard " +
                            std::to_string(options.blowup_guard) + " at t=" +
                            std::to_string(t + dt));
    }
    ring.push(s);
  }
  return path;
}

std::vector<double> moving_average_path(const OraclePath& path, double delta) {
  const double dt = path.dt;
  if (!(delta >= dt)) throw DomainError("moving_average_path: delta must be >= dt");
  const Kernel window = make_window_kernel(delta, KernelRole::gamma);
  // plain Lebesgue average, so the stencil uses the unit weight
  const conv::Stencil st = conv::build(window, WeightSpec{}, dt, delta);

  const size_t n = path.times.size();
  std::vector<double> out(n);
  auto sample = [&](size_t i, size_t m) {
    if (m <= i) return path.S[static_cast<Index>(i - m)];
    const double xi = (static_cast<double>(i) - static_cast<double>(m)) * dt;
    return path.s1 ? path.s1(xi) : 0.0;
  };
  for (size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (size_t m = 0; m < st.weights.size(); ++m) acc += st.weights[m] * sample(i, m);
    out[i] = acc;
  }
  return out;
}

}  // namespace sdde
