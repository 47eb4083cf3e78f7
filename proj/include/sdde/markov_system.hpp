#ifndef SDDE_MARKOV_SYSTEM_HPP
#define SDDE_MARKOV_SYSTEM_HPP

#include "sdde/dynamics.hpp"
#include "sdde/weighted_space.hpp"

namespace sdde {

/// The (n+1)-dimensional Markov system replacing the delay equation.
/// State is (S, X^1, ..., X^n); the auxiliary block solves
///   dX^k = (q_k S + sum_h Q_{kh} X^h) dt.
/// For the Laguerre construction q_k = sqrt(2 p0), Q is lower triangular
/// with -2 p0 below the diagonal and -(p0 - p/2) on it; the exact
/// construction carries the (q, Q) pair of its stable subspace.
struct MarkovSystem {
  enum class DriftKind { laguerre, exact };

  int n = 0;
  WeightSpec spec;
  VecX alpha_coeffs;  // length n+1, slot 0 = 0
  VecX beta_coeffs;   // length n+1, slot 0 = 0
  VecX gamma_coeffs;  // length n+1, slot 0 = gamma0
  double gamma0 = 0.0;
  DynamicsSpec dyn;
  VecX q;  // n
  MatX Q;  // n x n
  DriftKind drift_kind = DriftKind::laguerre;

  double output(const VecX& state) const { return gamma_coeffs.dot(state); }
  double delay_input_alpha(const VecX& state) const {
    return n == 0 ? 0.0 : alpha_coeffs.tail(n).dot(state.tail(n));
  }
  double delay_input_beta(const VecX& state) const {
    return n == 0 ? 0.0 : beta_coeffs.tail(n).dot(state.tail(n));
  }
};

}  // namespace sdde

#endif
