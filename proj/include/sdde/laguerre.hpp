#ifndef SDDE_LAGUERRE_HPP
#define SDDE_LAGUERRE_HPP

#include "sdde/weighted_space.hpp"

namespace sdde {

/// Laguerre polynomial P~_k on the positive half-line, evaluated by the
/// three-term recurrence (j+1) P~_{j+1} = (2j+1-x) P~_j - j P~_{j-1}.
double laguerre_poly(int k, double x);

/// k-th weighted basis function of the product space, k >= 1:
///   L_{k-1,p0,p}(xi) = sqrt(2 p0) P~_{k-1}(-2 p0 xi) e^{(p0 - p/2) xi}.
/// Index 0 is the scalar slot e^0 = (1, 0) and has no function part.
double basis_eval(int k, const WeightSpec& spec, double xi);

/// Basis vector e^k of R x L^2_w. The scalar part is 1 for k = 0 and 0
/// otherwise; operator() evaluates the function part (zero for k = 0).
struct BasisVector {
  int k = 0;
  WeightSpec spec;

  double scalar_part() const { return k == 0 ? 1.0 : 0.0; }
  double operator()(double xi) const { return k == 0 ? 0.0 : basis_eval(k, spec, xi); }
};

/// Expansion of the adjoint generator applied to e^k, k >= 1:
///   A* e^k = to_e0 e^0 + to_lower (e^1 + ... + e^{k-1}) + to_self e^k.
struct AStarCoefficients {
  int k = 0;
  double to_e0 = 0.0;    // sqrt(2 p0)
  double to_lower = 0.0; // -2 p0
  double to_self = 0.0;  // -(p0 - p/2)
};

AStarCoefficients astar_on_basis(int k, const WeightSpec& spec);

}  // namespace sdde

#endif
