#ifndef SDDE_DYNAMICS_HPP
#define SDDE_DYNAMICS_HPP

#include <functional>

#include "sdde/types.hpp"

namespace sdde {

/// Drift and diffusion of the state equation, as functions of
/// (x, y, u) = (current state, delay convolution, control). Lipschitz and
/// linear growth in (x, y) are declared by the caller, not verified.
struct DynamicsSpec {
  std::function<double(double, double, double)> b;
  std::function<double(double, double, double)> sigma;
};

/// b = drift * x, sigma = vol * x (no delay or control dependence).
DynamicsSpec make_gbm_dynamics(double drift, double vol);

/// b = rate * (y - x) + u, sigma = vol. Mean reversion of the state towards
/// its own delayed average, additive noise.
DynamicsSpec make_mean_revert_delay_dynamics(double rate, double vol);

/// Linear coefficient table: b = b0 + bx x + by y + bu u,
/// sigma = s0 + sx x + sy y + su u.
DynamicsSpec make_linear_dynamics(double b0, double bx, double by, double bu, double s0, double sx,
                                  double sy, double su);

}  // namespace sdde

#endif
