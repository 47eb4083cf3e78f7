#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sdde/oracle.hpp"

using namespace sdde;

namespace {

DynamicsSpec zero_dynamics() {
  DynamicsSpec dyn;
  dyn.b = [](double, double, double) { return 0.0; };
  dyn.sigma = [](double, double, double) { return 0.0; };
  return dyn;
}

SddeProblem gbm_with_delay() {
  // drift reacts to the recent average of the path
  SddeProblem prob;
  prob.spec = make_weight(0.0, 1.0);
  prob.dyn.b = [](double x, double y, double) { return 0.05 * x + 0.2 * y; };
  prob.dyn.sigma = [](double x, double, double) { return 0.2 * x; };
  prob.alpha = make_window_kernel(0.5, KernelRole::alpha);
  prob.gamma0 = 1.0;
  prob.init = InitialDatum::constant(1.0, 1.0);
  return prob;
}

}  // namespace

TEST_CASE("constant history gives a constant output") {
  SddeProblem prob;
  prob.spec = make_weight(0.0, 1.0);
  prob.dyn = zero_dynamics();
  prob.gamma = make_window_kernel(1.0, KernelRole::gamma, 1.0);
  prob.gamma0 = 0.5;
  const double c = 2.0;
  prob.init = InitialDatum::constant(c, c);
  const NoisePath noise = make_noise(1.0 / 64, 64, 1, 0);
  const OraclePath path = simulate_sdde(prob, OracleControl{}, noise, 1.0);
  for (size_t i = 0; i < path.times.size(); ++i) {
    CHECK(path.S[static_cast<Index>(i)] == c);
    // Z = gamma0 c + c * integral of the window = 0.5 c + c
    CHECK(path.Z[static_cast<Index>(i)] == doctest::Approx(1.5 * c).epsilon(1e-12));
  }
}

TEST_CASE("zero history ramps the output as the window fills") {
  SddeProblem prob;
  prob.spec = make_weight(0.0, 1.0);
  prob.dyn = zero_dynamics();
  prob.gamma = make_window_kernel(1.0, KernelRole::gamma, 1.0);
  prob.gamma0 = 0.5;
  const double c = 2.0;
  prob.init = InitialDatum::zero_history(c);
  const double dt = 1.0 / 128;
  const NoisePath noise = make_noise(dt, 256, 1, 0);
  const OraclePath path = simulate_sdde(prob, OracleControl{}, noise, 2.0);
  for (size_t i = 0; i < path.times.size(); ++i) {
    const double t = path.times[i];
    const double expected = 0.5 * c + c * std::min(t, 1.0);
    CHECK(std::abs(path.Z[static_cast<Index>(i)] - expected) <= c * dt);
  }
}

TEST_CASE("driftless unit diffusion reproduces the Brownian path bit-exactly") {
  SddeProblem prob;
  prob.spec = make_weight(0.0, 1.0);
  prob.dyn.b = [](double, double, double) { return 0.0; };
  prob.dyn.sigma = [](double, double, double) { return 1.0; };
  prob.gamma0 = 1.0;
  prob.init = InitialDatum::zero_history(0.7);
  const NoisePath noise = make_noise(1.0 / 256, 256, 9, 3);
  const OraclePath path = simulate_sdde(prob, OracleControl{}, noise, 1.0);
  double w = 0.7;
  CHECK(path.S[0] == w);
  CHECK(path.Z[0] == w);
  for (size_t i = 0; i < 256; ++i) {
    w = w + noise.increments[i];
    CHECK(path.S[static_cast<Index>(i + 1)] == w);
    CHECK(path.Z[static_cast<Index>(i + 1)] == w);
  }
}

TEST_CASE("moving average of a constant path is the constant") {
  SddeProblem prob;
  prob.spec = make_weight(0.0, 1.0);
  prob.dyn = zero_dynamics();
  prob.init = InitialDatum::constant(3.0, 3.0);
  const NoisePath noise = make_noise(1.0 / 64, 64, 1, 0);
  const OraclePath path = simulate_sdde(prob, OracleControl{}, noise, 1.0);
  for (double v : moving_average_path(path, 0.25)) {
    CHECK(v == doctest::Approx(3.0).epsilon(1e-13));
  }
}

TEST_CASE("moving average of a linear ramp") {
  OraclePath path;
  path.dt = 1.0 / 128;
  const int steps = 128;
  path.S.resize(steps + 1);
  path.times.resize(static_cast<size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) {
    path.times[static_cast<size_t>(i)] = i * path.dt;
    path.S[i] = i * path.dt;  // S_r = r
  }
  path.s0 = 0.0;
  path.s1 = [](double) { return 0.0; };
  const double delta = 0.25;
  const auto avg = moving_average_path(path, delta);
  for (int i = 0; i <= steps; ++i) {
    const double t = i * path.dt;
    if (t >= delta) {
      CHECK(avg[static_cast<size_t>(i)] == doctest::Approx(t - delta / 2).epsilon(1e-12));
    }
  }
}

TEST_CASE("two routes to the moving average coincide") {
  SddeProblem prob;
  prob.spec = make_weight(0.0, 1.0);
  prob.dyn.b = [](double, double, double) { return 0.0; };
  prob.dyn.sigma = [](double x, double, double) { return 0.2 * x; };
  prob.gamma = make_window_kernel(0.25, KernelRole::gamma);  // height 1/delta
  prob.gamma0 = 0.0;
  prob.init = InitialDatum::constant(1.0, 1.0);
  const NoisePath noise = make_noise(1.0 / 256, 256, 11, 5);
  const OraclePath path = simulate_sdde(prob, OracleControl{}, noise, 1.0);
  const auto avg = moving_average_path(path, 0.25);
  for (size_t i = 0; i < path.times.size(); ++i) {
    CHECK(std::abs(path.Z[static_cast<Index>(i)] - avg[i]) < 1e-12);
  }
}

TEST_CASE("identical seeds give identical paths") {
  const SddeProblem prob = gbm_with_delay();
  const NoisePath noise = make_noise(1.0 / 128, 128, 2024, 1);
  const OraclePath a = simulate_sdde(prob, OracleControl{}, noise, 1.0);
  const OraclePath b = simulate_sdde(prob, OracleControl{}, noise, 1.0);
  for (Index i = 0; i < a.S.size(); ++i) {
    CHECK(a.S[i] == b.S[i]);
    CHECK(a.Z[i] == b.Z[i]);
    CHECK(a.y_alpha[i] == b.y_alpha[i]);
  }
}

TEST_CASE("strong self-convergence under grid refinement") {
  const SddeProblem prob = gbm_with_delay();
  const int paths = 128;
  const double T = 1.0;
  std::vector<double> err_by_level;
  for (int level = 0; level < 3; ++level) {
    // coarse dt = 2^-5 / 2^level vs its halving, shared Brownian path
    const int fine_steps = static_cast<int>(T * 512);
    double acc = 0.0;
    for (int p = 0; p < paths; ++p) {
      const NoisePath finest = make_noise(T / fine_steps, fine_steps, 77, static_cast<uint64_t>(p));
      const NoisePath coarse = coarsen_noise(finest, 16 >> level);
      const NoisePath half = coarsen_noise(finest, 8 >> level);
      const OraclePath pc = simulate_sdde(prob, OracleControl{}, coarse, T);
      const OraclePath ph = simulate_sdde(prob, OracleControl{}, half, T);
      double sup = 0.0;
      for (size_t i = 0; i < pc.times.size(); ++i) {
        sup = std::max(sup, std::abs(pc.S[static_cast<Index>(i)] -
                                     ph.S[static_cast<Index>(2 * i)]));
      }
      acc += sup;
    }
    err_by_level.push_back(acc / paths);
  }
  CHECK(err_by_level[0] / err_by_level[1] >= 1.3);
  CHECK(err_by_level[1] / err_by_level[2] >= 1.3);
}

TEST_CASE("second moments of the full state stay bounded under refinement") {
  // E sup_t (S_t^2 + ||history_t||_w^2), the history integral truncated at
  // the convolution depth and discretized on the simulation grid
  const SddeProblem prob = gbm_with_delay();
  const double T = 1.0;
  const double depth = 4.0;
  auto moment = [&](int steps) {
    const double dt = T / steps;
    double acc = 0.0;
    const int paths = 64;
    for (int p = 0; p < paths; ++p) {
      const NoisePath noise = make_noise(dt, steps, 5150, static_cast<uint64_t>(p));
      const OraclePath path = simulate_sdde(prob, OracleControl{}, noise, T);
      auto sample = [&](int i, int m) {
        return m <= i ? path.S[static_cast<Index>(i - m)] : prob.init.s1((i - m) * dt);
      };
      double sup = 0.0;
      for (int i = 0; i <= steps; ++i) {
        double norm_sq = path.S[static_cast<Index>(i)] * path.S[static_cast<Index>(i)];
        for (int m = 0; m <= static_cast<int>(depth / dt); ++m) {
          const double v = sample(i, m);
          norm_sq += dt * v * v * prob.spec.weight(-m * dt);
        }
        sup = std::max(sup, norm_sq);
      }
      acc += sup;
    }
    return acc / paths;
  };
  const double coarse = moment(128);
  const double fine = moment(256);
  CHECK(std::isfinite(coarse));
  CHECK(fine == doctest::Approx(coarse).epsilon(0.2));
}

TEST_CASE("guard rejects exploding paths") {
  SddeProblem prob;
  prob.spec = make_weight(0.0, 1.0);
  prob.dyn.b = [](double x, double, double) { return 100.0 * x; };
  prob.dyn.sigma = [](double, double, double) { return 0.0; };
  prob.init = InitialDatum::zero_history(1.0);
  const NoisePath noise = make_noise(1.0 / 16, 160, 1, 0);
  SimOptions options;
  options.blowup_guard = 1e6;
  CHECK_THROWS_AS(simulate_sdde(prob, OracleControl{}, noise, 10.0, options), NumericalBlowup);
}

TEST_CASE("grid validation") {
  SddeProblem prob;
  prob.spec = make_weight(0.0, 1.0);
  prob.dyn = zero_dynamics();
  prob.init = InitialDatum::zero_history(0.0);
  const NoisePath noise = make_noise(0.3, 10, 1, 0);
  CHECK_THROWS_AS(simulate_sdde(prob, OracleControl{}, noise, 1.0), DomainError);
  const NoisePath short_noise = make_noise(0.25, 2, 1, 0);
  CHECK_THROWS_AS(simulate_sdde(prob, OracleControl{}, short_noise, 1.0), SpecMismatch);
}

TEST_CASE("open-loop and feedback controls feed the drift") {
  SddeProblem prob;
  prob.spec = make_weight(0.0, 1.0);
  prob.dyn.b = [](double, double, double u) { return u; };
  prob.dyn.sigma = [](double, double, double) { return 0.0; };
  prob.init = InitialDatum::zero_history(0.0);
  const NoisePath noise = make_noise(0.25, 4, 1, 0);

  OracleControl open_loop;
  open_loop.impl = std::vector<double>{1.0, 1.0, -1.0, -1.0};
  const OraclePath a = simulate_sdde(prob, open_loop, noise, 1.0);
  CHECK(a.S[4] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(a.S[2] == doctest::Approx(0.5).epsilon(1e-15));

  OracleControl feedback;
  feedback.impl = OracleControl::Feedback([](double, double s, double) { return 1.0 - s; });
  const OraclePath b = simulate_sdde(prob, feedback, noise, 1.0);
  CHECK(b.S[1] == doctest::Approx(0.25));
}
