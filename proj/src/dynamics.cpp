#include "sdde/dynamics.hpp"

namespace sdde {

DynamicsSpec make_gbm_dynamics(double drift, double vol) {
  DynamicsSpec dyn;
  dyn.b = [drift](double x, double, double) { return drift * x; };
  dyn.sigma = [vol](double x, double, double) { return vol * x; };
  return dyn;
}

DynamicsSpec make_mean_revert_delay_dynamics(double rate, double vol) {
  DynamicsSpec dyn;
  dyn.b = [rate](double x, double y, double u) { return rate * (y - x) + u; };
  dyn.sigma = [vol](double, double, double) { return vol; };
  return dyn;
}

DynamicsSpec make_linear_dynamics(double b0, double bx, double by, double bu, double s0, double sx,
                                  double sy, double su) {
  DynamicsSpec dyn;
  dyn.b = [=](double x, double y, double u) { return b0 + bx * x + by * y + bu * u; };
  dyn.sigma = [=](double x, double y, double u) { return s0 + sx * x + sy * y + su * u; };
  return dyn;
}

}  // namespace sdde
