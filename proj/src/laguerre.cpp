#include "sdde/laguerre.hpp"

#include <cmath>
#include <string>

namespace sdde {

double laguerre_poly(int k, double x) {
  if (k < 0) throw DomainError("laguerre_poly: k must be >= 0");
  if (x < 0.0) throw DomainError("laguerre_poly: x must be >= 0; got " + std::to_string(x));
  if (k == 0) return 1.0;
  double prev = 1.0;
  double cur = 1.0 - x;
  for (int j = 1; j < k; ++j) {
    const double next = ((2.0 * j + 1.0 - x) * cur - j * prev) / (j + 1.0);
    prev = cur;
    cur = next;
  }
  return cur;
}

double basis_eval(int k, const WeightSpec& spec, double xi) {
  if (k < 1) throw DomainError("basis_eval: k must be >= 1 (e^0 has no function part)");
  if (xi > 0.0) throw DomainError("basis_eval: xi must be <= 0");
  return std::sqrt(2.0 * spec.p0) * laguerre_poly(k - 1, -2.0 * spec.p0 * xi) *
         std::exp((spec.p0 - 0.5 * spec.p) * xi);
}

AStarCoefficients astar_on_basis(int k, const WeightSpec& spec) {
  if (k < 1) throw DomainError("astar_on_basis: k must be >= 1 (A* e^0 = 0)");
  AStarCoefficients c;
  c.k = k;
  c.to_e0 = std::sqrt(2.0 * spec.p0);
  c.to_lower = -2.0 * spec.p0;
  c.to_self = -(spec.p0 - 0.5 * spec.p);
  return c;
}

}  // namespace sdde
