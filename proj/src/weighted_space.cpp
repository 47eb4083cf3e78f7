#include "sdde/weighted_space.hpp"

#include <algorithm>
#include <array>

namespace sdde {

WeightSpec make_weight(double p, double lambda) {
  if (!(lambda > std::max(p, 0.5 * p))) {
    throw DomainError("make_weight: lambda must exceed max(p, p/2); got lambda=" +
                      std::to_string(lambda) + ", p=" + std::to_string(p));
  }
  WeightSpec spec;
  spec.p = p;
  spec.lambda = lambda;
  spec.p0 = lambda - p;
  return spec;
}

namespace {

// 16-point Gauss-Legendre nodes/weights on [-1, 1] (symmetric halves).
constexpr int kPanelOrder = 16;
constexpr std::array<double, 8> kGlNodes = {
    0.09501250983763744, 0.28160355077925891, 0.45801677765722739, 0.61787624440264375,
    0.75540440835500303, 0.86563120238783174, 0.94457502307323258, 0.98940093499164993};
constexpr std::array<double, 8> kGlWeights = {
    0.18945061045506850, 0.18260341504492359, 0.16915651939500254, 0.14959598881657673,
    0.12462897125553387, 0.09515851168249278, 0.06225352393864789, 0.02715245941175409};

}  // namespace

QuadratureRule make_quadrature(const WeightSpec& spec, int node_count, double tail_tol,
                               std::vector<double> breakpoints) {
  if (node_count < 16) throw DomainError("make_quadrature: node_count must be >= 16");
  if (!(tail_tol > 0.0)) throw DomainError("make_quadrature: tail_tol must be positive");

  const double mu = 2.0 * spec.p0 + spec.p;  // = 2*lambda - p > 0 for valid specs
  if (!(mu > 0.0)) throw DomainError("make_quadrature: no finite cutoff achieves tail_tol");
  const double cutoff = -std::log(tail_tol) / mu;
  if (!std::isfinite(cutoff) || cutoff <= 0.0) {
    throw DomainError("make_quadrature: no finite cutoff achieves tail_tol");
  }

  const int panels = std::max(1, node_count / kPanelOrder);
  std::vector<double> edges;
  edges.reserve(static_cast<size_t>(panels) + breakpoints.size() + 1);
  for (int i = 0; i <= panels; ++i) {
    edges.push_back(-cutoff + cutoff * static_cast<double>(i) / panels);
  }
  for (double b : breakpoints) {
    if (b > -cutoff && b < 0.0) edges.push_back(b);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [&](double a, double b) { return std::abs(b - a) < 1e-14 * cutoff; }),
              edges.end());
  edges.front() = -cutoff;
  edges.back() = 0.0;

  QuadratureRule rule;
  rule.cutoff = cutoff;
  rule.breakpoints = std::move(breakpoints);
  rule.node_count = node_count;
  rule.tail_tol = tail_tol;
  rule.nodes.reserve(static_cast<size_t>(edges.size() - 1) * kPanelOrder);
  rule.weights.reserve(rule.nodes.capacity());
  for (size_t e = 0; e + 1 < edges.size(); ++e) {
    const double a = edges[e], b = edges[e + 1];
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    // emit nodes in ascending order within the panel
    for (int i = 7; i >= 0; --i) {
      rule.nodes.push_back(mid - half * kGlNodes[static_cast<size_t>(i)]);
      rule.weights.push_back(half * kGlWeights[static_cast<size_t>(i)]);
    }
    for (int i = 0; i < 8; ++i) {
      rule.nodes.push_back(mid + half * kGlNodes[static_cast<size_t>(i)]);
      rule.weights.push_back(half * kGlWeights[static_cast<size_t>(i)]);
    }
  }
  return rule;
}

double inner_product_w(const VecX& f_at_nodes, const VecX& g_at_nodes, const WeightSpec& spec,
                       const QuadratureRule& rule) {
  const Index n = static_cast<Index>(rule.nodes.size());
  if (f_at_nodes.size() != n || g_at_nodes.size() != n) {
    throw DomainError("inner_product_w: sample length does not match rule node count");
  }
  double acc = 0.0;
  for (Index i = 0; i < n; ++i) {
    acc += rule.weights[static_cast<size_t>(i)] * f_at_nodes[i] * g_at_nodes[i] *
           spec.weight(rule.nodes[static_cast<size_t>(i)]);
  }
  return acc;
}

double inner_product_w(const std::function<double(double)>& f,
                       const std::function<double(double)>& g, const WeightSpec& spec,
                       const QuadratureRule& rule) {
  double acc = 0.0;
  for (size_t i = 0; i < rule.nodes.size(); ++i) {
    const double xi = rule.nodes[i];
    acc += rule.weights[i] * f(xi) * g(xi) * spec.weight(xi);
  }
  return acc;
}

double integrate_w(const std::function<double(double)>& f, const WeightSpec& spec,
                   const QuadratureRule& rule) {
  double acc = 0.0;
  for (size_t i = 0; i < rule.nodes.size(); ++i) {
    const double xi = rule.nodes[i];
    acc += rule.weights[i] * f(xi) * spec.weight(xi);
  }
  return acc;
}

}  // namespace sdde
