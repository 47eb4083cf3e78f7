#include "sdde/exppoly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <tuple>

namespace sdde {

namespace {

using Cplx = std::complex<double>;

bool term_order(const ExpPolyTerm& a, const ExpPolyTerm& b) {
  return std::make_tuple(a.exponent.real(), a.exponent.imag(), a.power) <
         std::make_tuple(b.exponent.real(), b.exponent.imag(), b.power);
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace

ExpPolyFunction ExpPolyFunction::make(std::vector<ExpPolyTerm> terms) {
  for (const auto& t : terms) {
    if (t.power < 0) throw DomainError("ExpPolyFunction: term power must be >= 0");
  }
  std::sort(terms.begin(), terms.end(), term_order);
  std::vector<ExpPolyTerm> merged;
  for (const auto& t : terms) {
    if (!merged.empty() && merged.back().power == t.power &&
        merged.back().exponent == t.exponent) {
      merged.back().coeff += t.coeff;
    } else {
      merged.push_back(t);
    }
  }
  double scale = 0.0;
  for (const auto& t : merged) scale = std::max(scale, std::abs(t.coeff));
  std::vector<ExpPolyTerm> kept;
  for (const auto& t : merged) {
    if (std::abs(t.coeff) > 0.0 && std::abs(t.coeff) > scale * 1e-300) kept.push_back(t);
  }

  // conjugate closure: every complex-exponent term needs a mirrored partner
  const double tol = 1e-12 * (1.0 + scale);
  for (const auto& t : kept) {
    if (t.exponent.imag() == 0.0) {
      if (std::abs(t.coeff.imag()) > tol) {
        throw DomainError("ExpPolyFunction: real-exponent term has complex coefficient");
      }
      continue;
    }
    const Cplx want_exp = std::conj(t.exponent);
    const Cplx want_coeff = std::conj(t.coeff);
    bool found = false;
    for (const auto& s : kept) {
      if (s.power == t.power && s.exponent == want_exp && std::abs(s.coeff - want_coeff) <= tol) {
        found = true;
        break;
      }
    }
    if (!found) {
      throw DomainError("ExpPolyFunction: terms are not closed under conjugation");
    }
  }

  ExpPolyFunction f;
  f.terms_ = std::move(kept);
  return f;
}

ExpPolyFunction ExpPolyFunction::real_term(int power, double exponent, double coeff) {
  return make({ExpPolyTerm{power, Cplx(exponent, 0.0), Cplx(coeff, 0.0)}});
}

double ExpPolyFunction::eval(double xi) const {
  Cplx acc(0.0, 0.0);
  for (const auto& t : terms_) {
    acc += t.coeff * std::pow(xi, t.power) * std::exp(t.exponent * xi);
  }
  return acc.real();
}

ExpPolyFunction ExpPolyFunction::derivative() const {
  std::vector<ExpPolyTerm> out;
  out.reserve(terms_.size() * 2);
  for (const auto& t : terms_) {
    if (t.power > 0) {
      out.push_back(ExpPolyTerm{t.power - 1, t.exponent, t.coeff * static_cast<double>(t.power)});
    }
    out.push_back(ExpPolyTerm{t.power, t.exponent, t.coeff * t.exponent});
  }
  return make(std::move(out));
}

double ExpPolyFunction::min_re_exponent() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& t : terms_) m = std::min(m, t.exponent.real());
  return m;
}

ExpPolyFunction exppoly_mul(const ExpPolyFunction& f, const ExpPolyFunction& g) {
  std::vector<ExpPolyTerm> out;
  out.reserve(f.terms().size() * g.terms().size());
  for (const auto& a : f.terms()) {
    for (const auto& b : g.terms()) {
      out.push_back(ExpPolyTerm{a.power + b.power, a.exponent + b.exponent, a.coeff * b.coeff});
    }
  }
  return ExpPolyFunction::make(std::move(out));
}

ExpPolyFunction exppoly_add(const ExpPolyFunction& f, const ExpPolyFunction& g) {
  std::vector<ExpPolyTerm> out = f.terms();
  out.insert(out.end(), g.terms().begin(), g.terms().end());
  return ExpPolyFunction::make(std::move(out));
}

ExpPolyFunction exppoly_scale(const ExpPolyFunction& f, double a) {
  std::vector<ExpPolyTerm> out = f.terms();
  for (auto& t : out) t.coeff *= a;
  return ExpPolyFunction::make(std::move(out));
}

double exppoly_integral_Rminus(const ExpPolyFunction& f) {
  Cplx acc(0.0, 0.0);
  for (const auto& t : f.terms()) {
    if (!(t.exponent.real() > 0.0)) {
      throw DomainError("exppoly_integral_Rminus: Re(mu) must be positive on every term");
    }
    const double sign = (t.power % 2 == 0) ? 1.0 : -1.0;
    acc += t.coeff * sign * factorial(t.power) / std::pow(t.exponent, t.power + 1);
  }
  if (std::abs(acc.imag()) > 1e-9 * (1.0 + std::abs(acc.real()))) {
    throw DomainError("exppoly_integral_Rminus: non-real result from a real function");
  }
  return acc.real();
}

double exppoly_inner_w(const ExpPolyFunction& f, const ExpPolyFunction& g,
                       const WeightSpec& spec) {
  if (f.is_zero() || g.is_zero()) return 0.0;
  const ExpPolyFunction weight = ExpPolyFunction::real_term(0, spec.p, 1.0);
  return exppoly_integral_Rminus(exppoly_mul(exppoly_mul(f, g), weight));
}

namespace {

// Real monomial of the differentiation closure: xi^power e^{re xi} cos/sin(im xi).
struct Monomial {
  double re = 0.0;
  double im = 0.0;  // >= 0; 0 means plain exponential
  int power = 0;
  bool is_sin = false;  // only when im > 0
};

ExpPolyFunction monomial_function(const Monomial& m) {
  if (m.im == 0.0) return ExpPolyFunction::real_term(m.power, m.re, 1.0);
  const Cplx mu_plus(m.re, m.im), mu_minus(m.re, -m.im);
  if (m.is_sin) {
    return ExpPolyFunction::make({ExpPolyTerm{m.power, mu_plus, Cplx(0.0, -0.5)},
                                  ExpPolyTerm{m.power, mu_minus, Cplx(0.0, 0.5)}});
  }
  return ExpPolyFunction::make({ExpPolyTerm{m.power, mu_plus, Cplx(0.5, 0.0)},
                                ExpPolyTerm{m.power, mu_minus, Cplx(0.5, 0.0)}});
}

int numerical_rank(const MatX& gram) {
  Eigen::SelfAdjointEigenSolver<MatX> es(gram);
  const VecX ev = es.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  if (top <= 0.0) return 0;
  int rank = 0;
  for (Index i = 0; i < ev.size(); ++i) {
    if (ev[i] > 1e-12 * top) ++rank;
  }
  return rank;
}

}  // namespace

StableSubspace build_stable_subspace(const std::vector<ExpPolyFunction>& generators,
                                     const WeightSpec& spec) {
  if (generators.empty()) {
    throw DomainError("build_stable_subspace: generator list is empty");
  }
  // Kernel-space exponent mu maps to the eigenvalue mu + p of the induced
  // v' = M v system; that eigenvalue must lie strictly above lambda_star.
  for (const auto& g : generators) {
    for (const auto& t : g.terms()) {
      if (!(t.exponent.real() + spec.p > spec.lambda_star())) {
        throw DomainError(
            "build_stable_subspace: eigenvalue Re(mu) + p must be strictly greater than "
            "lambda_star = p/2");
      }
    }
    if (g.is_zero()) throw DomainError("build_stable_subspace: zero generator");
  }

  // generator dependence check before any closure
  {
    const int m = static_cast<int>(generators.size());
    MatX gram(m, m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j <= i; ++j) {
        gram(i, j) = gram(j, i) = exppoly_inner_w(generators[static_cast<size_t>(i)],
                                                  generators[static_cast<size_t>(j)], spec);
      }
    }
    if (numerical_rank(gram) < m) {
      throw DegenerateError("build_stable_subspace: generators are linearly dependent");
    }
  }

  // closure: per exponent group (re, |im|) keep every power up to the max seen
  std::map<std::pair<double, double>, int> group_maxpow;
  for (const auto& g : generators) {
    for (const auto& t : g.terms()) {
      const auto key = std::make_pair(t.exponent.real(), std::abs(t.exponent.imag()));
      auto it = group_maxpow.find(key);
      if (it == group_maxpow.end()) {
        group_maxpow[key] = t.power;
      } else {
        it->second = std::max(it->second, t.power);
      }
    }
  }
  std::vector<Monomial> basis;
  for (const auto& [key, maxpow] : group_maxpow) {
    for (int i = 0; i <= maxpow; ++i) {
      basis.push_back(Monomial{key.first, key.second, i, false});
      if (key.second > 0.0) basis.push_back(Monomial{key.first, key.second, i, true});
    }
  }
  const int n = static_cast<int>(basis.size());

  // M on the w-multiplied monomials: exponent shifts by p, trig part unchanged
  MatX M = MatX::Zero(n, n);
  auto index_of = [&](double re, double im, int power, bool is_sin) {
    for (int h = 0; h < n; ++h) {
      const auto& b = basis[static_cast<size_t>(h)];
      if (b.re == re && b.im == im && b.power == power && b.is_sin == is_sin) return h;
    }
    return -1;
  };
  for (int m = 0; m < n; ++m) {
    const auto& mono = basis[static_cast<size_t>(m)];
    const double rho = mono.re + spec.p;
    if (mono.power > 0) {
      M(m, index_of(mono.re, mono.im, mono.power - 1, mono.is_sin)) +=
          static_cast<double>(mono.power);
    }
    M(m, m) += rho;
    if (mono.im > 0.0) {
      const int partner = index_of(mono.re, mono.im, mono.power, !mono.is_sin);
      M(m, partner) += mono.is_sin ? mono.im : -mono.im;
    }
  }

  // modified Gram-Schmidt, two passes, closed-form inner products
  std::vector<ExpPolyFunction> ortho;
  ortho.reserve(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) {
    ExpPolyFunction v = monomial_function(basis[static_cast<size_t>(k)]);
    const double norm0_sq = exppoly_inner_w(v, v, spec);
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j < k; ++j) {
        const double c = exppoly_inner_w(v, ortho[static_cast<size_t>(j)], spec);
        v = exppoly_add(v, exppoly_scale(ortho[static_cast<size_t>(j)], -c));
      }
    }
    const double norm_sq = exppoly_inner_w(v, v, spec);
    if (!(norm_sq > 1e-12 * norm0_sq)) {
      throw DegenerateError("build_stable_subspace: dimension collapse during orthogonalization");
    }
    ortho.push_back(exppoly_scale(v, 1.0 / std::sqrt(norm_sq)));
  }

  StableSubspace sub;
  sub.dimension = n;
  sub.M = std::move(M);
  sub.ortho_basis = std::move(ortho);
  sub.spec = spec;
  sub.q = VecX::Zero(n);
  sub.Q = MatX::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const auto& f = sub.ortho_basis[static_cast<size_t>(k)];
    sub.q[k] = f.eval(0.0);
    const ExpPolyFunction dw =
        exppoly_add(exppoly_scale(f.derivative(), -1.0), exppoly_scale(f, -spec.p));
    double row_sq = 0.0;
    for (int h = 0; h < n; ++h) {
      sub.Q(k, h) = exppoly_inner_w(dw, sub.ortho_basis[static_cast<size_t>(h)], spec);
      row_sq += sub.Q(k, h) * sub.Q(k, h);
    }
    const double dw_sq = exppoly_inner_w(dw, dw, spec);
    if (std::abs(dw_sq - row_sq) > 1e-10 * (1.0 + dw_sq)) {
      throw DegenerateError("build_stable_subspace: adjoint action left the subspace");
    }
  }
  return sub;
}

MarkovSystem exact_system(const std::optional<ExpPolyFunction>& alpha,
                          const std::optional<ExpPolyFunction>& beta,
                          const std::optional<ExpPolyFunction>& gamma, const DynamicsSpec& dyn,
                          const WeightSpec& spec, double gamma0) {
  std::vector<ExpPolyFunction> generators;
  for (const auto* k : {&alpha, &beta, &gamma}) {
    if (k->has_value() && !(*k)->is_zero()) generators.push_back(**k);
  }

  MarkovSystem sys;
  sys.spec = spec;
  sys.dyn = dyn;
  sys.gamma0 = gamma0;
  sys.drift_kind = MarkovSystem::DriftKind::exact;
  if (generators.empty()) {
    sys.n = 0;
    sys.alpha_coeffs = VecX::Zero(1);
    sys.beta_coeffs = VecX::Zero(1);
    sys.gamma_coeffs = VecX::Zero(1);
    sys.gamma_coeffs[0] = gamma0;
    sys.q = VecX::Zero(0);
    sys.Q = MatX::Zero(0, 0);
    return sys;
  }

  StableSubspace sub = build_stable_subspace(generators, spec);
  const int n = sub.dimension;
  sys.n = n;
  sys.q = sub.q;
  sys.Q = sub.Q;
  sys.alpha_coeffs = VecX::Zero(n + 1);
  sys.beta_coeffs = VecX::Zero(n + 1);
  sys.gamma_coeffs = VecX::Zero(n + 1);
  sys.gamma_coeffs[0] = gamma0;

  auto project = [&](const std::optional<ExpPolyFunction>& kernel, VecX& out) {
    if (!kernel.has_value() || kernel->is_zero()) return;
    double coeff_sq = 0.0;
    for (int k = 0; k < n; ++k) {
      out[k + 1] = exppoly_inner_w(*kernel, sub.ortho_basis[static_cast<size_t>(k)], spec);
      coeff_sq += out[k + 1] * out[k + 1];
    }
    const double norm_sq = exppoly_inner_w(*kernel, *kernel, spec);
    if (std::abs(norm_sq - coeff_sq) > 1e-10 * (1.0 + norm_sq)) {
      throw DegenerateError("exact_system: kernel has a component outside the stable subspace");
    }
  };
  project(alpha, sys.alpha_coeffs);
  project(beta, sys.beta_coeffs);
  project(gamma, sys.gamma_coeffs);
  return sys;
}

}  // namespace sdde
