#ifndef SDDE_EXPPOLY_HPP
#define SDDE_EXPPOLY_HPP

#include <complex>
#include <optional>
#include <vector>

#include "sdde/markov_system.hpp"
#include "sdde/weighted_space.hpp"

namespace sdde {

struct ExpPolyTerm {
  int power = 0;                         // j >= 0
  std::complex<double> exponent{0, 0};   // mu
  std::complex<double> coeff{0, 0};      // c
};

/// Real-valued function sum_k c_k xi^{j_k} e^{mu_k xi} on the negative
/// half-line. Terms are kept in canonical form (sorted by exponent then
/// power, like terms merged) and must be closed under conjugation so the
/// function is real.
class ExpPolyFunction {
 public:
  ExpPolyFunction() = default;

  /// Canonicalizes and verifies conjugate closure; throws DomainError when
  /// the term list does not describe a real function.
  static ExpPolyFunction make(std::vector<ExpPolyTerm> terms);

  /// c xi^j e^{mu xi} with real mu and c.
  static ExpPolyFunction real_term(int power, double exponent, double coeff);

  const std::vector<ExpPolyTerm>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  double eval(double xi) const;
  ExpPolyFunction derivative() const;

  /// Smallest real part among term exponents; +inf for the zero function.
  double min_re_exponent() const;

 private:
  std::vector<ExpPolyTerm> terms_;
};

ExpPolyFunction exppoly_mul(const ExpPolyFunction& f, const ExpPolyFunction& g);
ExpPolyFunction exppoly_add(const ExpPolyFunction& f, const ExpPolyFunction& g);
ExpPolyFunction exppoly_scale(const ExpPolyFunction& f, double a);

/// integral over the negative half-line, using
/// int xi^j e^{mu xi} dxi = (-1)^j j! / mu^{j+1}; requires Re(mu) > 0 on
/// every term.
double exppoly_integral_Rminus(const ExpPolyFunction& f);

/// Closed-form <f, g>_w for exponential weight w = e^{p xi}.
double exppoly_inner_w(const ExpPolyFunction& f, const ExpPolyFunction& g,
                       const WeightSpec& spec);

/// A finite-dimensional subspace of the weighted space that the adjoint
/// generator maps into itself. ortho_basis holds the function parts of the
/// orthonormal vectors e^1..e^n; M is the matrix of v' = M v on the
/// w-multiplied monomial basis; (q, Q) give A* e^k = q_k e^0 + sum_h Q_kh e^h.
struct StableSubspace {
  int dimension = 0;
  MatX M;
  std::vector<ExpPolyFunction> ortho_basis;
  VecX q;
  MatX Q;
  WeightSpec spec;
};

StableSubspace build_stable_subspace(const std::vector<ExpPolyFunction>& generators,
                                     const WeightSpec& spec);

/// Markov system that reproduces the delay dynamics exactly when all three
/// kernels are exponential-polynomial. Null optionals stand for zero kernels.
MarkovSystem exact_system(const std::optional<ExpPolyFunction>& alpha,
                          const std::optional<ExpPolyFunction>& beta,
                          const std::optional<ExpPolyFunction>& gamma, const DynamicsSpec& dyn,
                          const WeightSpec& spec, double gamma0 = 0.0);

}  // namespace sdde

#endif
