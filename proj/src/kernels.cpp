#include "sdde/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sdde/laguerre.hpp"

namespace sdde {

Kernel make_window_kernel(double delta, KernelRole role, double height) {
  if (!(delta > 0.0)) throw DomainError("uniform window: delta must be positive");
  UniformWindow w;
  w.delta = delta;
  w.height = height == 0.0 ? 1.0 / delta : height;
  return Kernel{w, role};
}

Kernel make_exppoly_kernel(ExpPolyFunction f, KernelRole role) {
  return Kernel{std::move(f), role};
}

Kernel make_tabulated_kernel(std::vector<double> xi, std::vector<double> value, KernelRole role) {
  if (xi.size() != value.size() || xi.size() < 2) {
    throw DomainError("tabulated kernel: need matching xi/value lists with >= 2 samples");
  }
  for (size_t i = 0; i < xi.size(); ++i) {
    if (xi[i] > 0.0) throw DomainError("tabulated kernel: grid points must be <= 0");
    if (i > 0 && !(xi[i] > xi[i - 1])) {
      throw DomainError("tabulated kernel: grid must be strictly increasing");
    }
  }
  return Kernel{TabulatedKernel{std::move(xi), std::move(value)}, role};
}

namespace {

double tabulated_interp(const TabulatedKernel& t, double xi) {
  const auto it = std::upper_bound(t.xi.begin(), t.xi.end(), xi);
  if (it == t.xi.begin()) return t.value.front();
  if (it == t.xi.end()) return t.value.back();
  const size_t hi = static_cast<size_t>(it - t.xi.begin());
  const size_t lo = hi - 1;
  const double frac = (xi - t.xi[lo]) / (t.xi[hi] - t.xi[lo]);
  return t.value[lo] + frac * (t.value[hi] - t.value[lo]);
}

// zero-extended value used by projections and convolutions
double eval_extended(const Kernel& k, double xi) {
  if (xi > 0.0) return 0.0;
  if (const auto* w = std::get_if<UniformWindow>(&k.variant)) {
    return xi >= -w->delta ? w->height : 0.0;
  }
  if (const auto* f = std::get_if<ExpPolyFunction>(&k.variant)) {
    return f->eval(xi);
  }
  const auto& t = std::get<TabulatedKernel>(k.variant);
  if (xi < t.xi.front() || xi > t.xi.back()) return 0.0;
  return tabulated_interp(t, xi);
}

}  // namespace

double kernel_eval(const Kernel& k, double xi) {
  if (xi > 0.0) throw DomainError("kernel_eval: xi must be <= 0");
  if (const auto* t = std::get_if<TabulatedKernel>(&k.variant)) {
    if (xi < t->xi.front() || xi > t->xi.back()) {
      throw DomainError("kernel_eval: xi outside tabulated range");
    }
    return tabulated_interp(*t, xi);
  }
  return eval_extended(k, xi);
}

double kernel_support_depth(const Kernel& k) {
  if (const auto* w = std::get_if<UniformWindow>(&k.variant)) return w->delta;
  if (const auto* t = std::get_if<TabulatedKernel>(&k.variant)) return -t->xi.front();
  return std::numeric_limits<double>::infinity();
}

double kernel_eval_side(const Kernel& k, double xi, bool from_right) {
  if (const auto* w = std::get_if<UniformWindow>(&k.variant)) {
    if (xi == -w->delta) return from_right ? w->height : 0.0;
    return eval_extended(k, xi);
  }
  return eval_extended(k, xi);
}

std::vector<double> kernel_breakpoints(const Kernel& k) {
  if (const auto* w = std::get_if<UniformWindow>(&k.variant)) return {-w->delta};
  if (const auto* t = std::get_if<TabulatedKernel>(&k.variant)) {
    return {t->xi.front(), t->xi.back()};
  }
  return {};
}

ProjectedKernel project_kernel(const Kernel& k, int n, const WeightSpec& spec,
                               const QuadratureRule& rule) {
  if (n < 0) throw DomainError("project_kernel: n must be >= 0");

  auto norm_with = [&](const QuadratureRule& r) {
    double acc = 0.0;
    for (size_t i = 0; i < r.nodes.size(); ++i) {
      const double v = eval_extended(k, r.nodes[i]);
      acc += r.weights[i] * v * v * spec.weight(r.nodes[i]);
    }
    return acc;
  };

  const double norm_sq = norm_with(rule);
  const QuadratureRule doubled =
      make_quadrature(spec, 2 * rule.node_count, rule.tail_tol, rule.breakpoints);
  const double norm_sq_fine = norm_with(doubled);
  if (!std::isfinite(norm_sq) || !std::isfinite(norm_sq_fine)) {
    throw IntegrabilityError("project_kernel: ||kernel||_w^2 is not finite");
  }
  if (std::abs(norm_sq_fine - norm_sq) > 1e-3 * std::max(1e-300, std::abs(norm_sq_fine))) {
    throw IntegrabilityError(
        "project_kernel: ||kernel||_w^2 unstable under node-doubling (got " +
        std::to_string(norm_sq) + " vs " + std::to_string(norm_sq_fine) + ")");
  }

  ProjectedKernel pk;
  pk.n = n;
  pk.spec = spec;
  pk.norm_sq_w = norm_sq;
  pk.coeffs = VecX::Zero(n + 1);
  double coeff_sq = 0.0;
  for (int kk = 1; kk <= n; ++kk) {
    double c = 0.0;
    for (size_t i = 0; i < rule.nodes.size(); ++i) {
      const double xi = rule.nodes[i];
      c += rule.weights[i] * eval_extended(k, xi) * basis_eval(kk, spec, xi) * spec.weight(xi);
    }
    pk.coeffs[kk] = c;
    coeff_sq += c * c;
  }
  pk.tail_sq = norm_sq - coeff_sq;
  if (pk.tail_sq < -1e-10 * std::max(1.0, norm_sq)) {
    throw IntegrabilityError("project_kernel: Bessel inequality violated beyond quadrature noise");
  }
  return pk;
}

double tail_norm_sq(const ProjectedKernel& pk) { return std::max(pk.tail_sq, 0.0); }

}  // namespace sdde
