#ifndef SDDE_WEIGHTED_SPACE_HPP
#define SDDE_WEIGHTED_SPACE_HPP

#include <cmath>
#include <functional>
#include <vector>

#include "sdde/types.hpp"

namespace sdde {

/// Exponential weight w(xi) = e^{p xi} on the negative half-line together
/// with the basis decay parameter lambda and the derived scale p0 = lambda - p.
/// Valid specs satisfy lambda > max(p, p/2), so p0 > 0 and lambda exceeds the
/// critical exponent lambda_star = p/2.
struct WeightSpec {
  double p = 0.0;
  double lambda = 1.0;
  double p0 = 1.0;  // lambda - p

  double weight(double xi) const { return std::exp(p * xi); }
  double lambda_star() const { return 0.5 * p; }

  bool operator==(const WeightSpec& o) const { return p == o.p && lambda == o.lambda; }
};

WeightSpec make_weight(double p, double lambda);

/// Composite Gauss-Legendre rule on [-cutoff, 0]. Weights are plain Lebesgue
/// weights; the exponential weight is applied by the caller at the nodes.
/// Panel edges can be forced at kernel discontinuities via `breakpoints`.
struct QuadratureRule {
  std::vector<double> nodes;    // strictly increasing, inside (-cutoff, 0)
  std::vector<double> weights;  // positive
  double cutoff = 0.0;          // Xi > 0, domain truncated to [-Xi, 0]
  std::vector<double> breakpoints;
  int node_count = 0;           // requested node budget
  double tail_tol = 0.0;
};

/// The cutoff solves e^{-(2 p0 + p) Xi} = tail_tol, bounding the neglected
/// mass of the slowest-decaying basis-product integrand.
QuadratureRule make_quadrature(const WeightSpec& spec, int node_count, double tail_tol,
                               std::vector<double> breakpoints = {});

/// <f, g>_w = sum_i weights_i f(node_i) g(node_i) w(node_i), summed in
/// ascending node order.
double inner_product_w(const std::function<double(double)>& f,
                       const std::function<double(double)>& g, const WeightSpec& spec,
                       const QuadratureRule& rule);

double inner_product_w(const VecX& f_at_nodes, const VecX& g_at_nodes, const WeightSpec& spec,
                       const QuadratureRule& rule);

/// integral of f against w over [-Xi, 0]
double integrate_w(const std::function<double(double)>& f, const WeightSpec& spec,
                   const QuadratureRule& rule);

}  // namespace sdde

#endif
