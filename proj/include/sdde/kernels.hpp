#ifndef SDDE_KERNELS_HPP
#define SDDE_KERNELS_HPP

#include <variant>
#include <vector>

#include "sdde/exppoly.hpp"
#include "sdde/weighted_space.hpp"

namespace sdde {

enum class KernelRole { alpha, beta, gamma };

/// height * 1_{[-delta, 0]}; height defaults to 1/delta so the window
/// integrates to one against plain Lebesgue measure.
struct UniformWindow {
  double delta = 1.0;
  double height = 1.0;

  static UniformWindow averaging(double delta) { return UniformWindow{delta, 1.0 / delta}; }
};

/// Piecewise-linear kernel through the given (xi, value) samples,
/// zero outside the sampled range.
struct TabulatedKernel {
  std::vector<double> xi;  // strictly increasing, all <= 0
  std::vector<double> value;
};

struct Kernel {
  std::variant<UniformWindow, ExpPolyFunction, TabulatedKernel> variant;
  KernelRole role = KernelRole::gamma;
};

Kernel make_window_kernel(double delta, KernelRole role, double height = 0.0);
Kernel make_exppoly_kernel(ExpPolyFunction f, KernelRole role);
Kernel make_tabulated_kernel(std::vector<double> xi, std::vector<double> value, KernelRole role);

/// Pointwise value. Strict about the domain: xi > 0 is an error, and so is
/// evaluation outside a tabulated kernel's grid. The uniform window owns its
/// left edge: kernel_eval(-delta) = height.
double kernel_eval(const Kernel& k, double xi);

/// Depth of support below zero (+inf for exponential-polynomial kernels).
double kernel_support_depth(const Kernel& k);

/// One-sided value for trapezoid assembly across jumps: the limit of the
/// kernel as xi is approached from inside the subinterval.
double kernel_eval_side(const Kernel& k, double xi, bool from_right);

/// Jump locations that quadrature panels and convolution grids must honor.
std::vector<double> kernel_breakpoints(const Kernel& k);

/// Fourier coefficients of the kernel in the weighted basis, c^0 = 0 and
/// c^k = <kernel, L_{k-1}>_w for k >= 1, together with the squared norm and
/// the truncation tail norm_sq_w - sum_k (c^k)^2.
struct ProjectedKernel {
  VecX coeffs;  // length n+1
  int n = 0;
  double norm_sq_w = 0.0;
  double tail_sq = 0.0;
  WeightSpec spec;
};

ProjectedKernel project_kernel(const Kernel& k, int n, const WeightSpec& spec,
                               const QuadratureRule& rule);

double tail_norm_sq(const ProjectedKernel& pk);

}  // namespace sdde

#endif
