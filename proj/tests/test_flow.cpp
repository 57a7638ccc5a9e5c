#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rkpr/flow.hpp"
#include "rkpr/svg.hpp"

using namespace rkpr;

TEST_CASE("closed-form radius marginal") {
  CHECK(closed_form_r2(0.0, 3.7) == 3.7);
  CHECK(closed_form_r2(5.0, 1.0) == 1.0);
  CHECK(closed_form_r2(std::log(2.0), 3.0) == Catch::Approx(2.0).margin(1e-15));
}

TEST_CASE("flow is constant at the minimum") {
  const FlowPath path = integrate_drift({1.0, 1.0}, 0.01, 1.0);
  for (const StateY& y : path.states) {
    CHECK(y.r2 == 1.0);
    CHECK(y.s == 1.0);
  }
  CHECK(path.tau1_bar == 0.0);
  CHECK(path.tau2_bar == 0.0);
}

TEST_CASE("radius marginal tracks the closed form at fourth order") {
  const double dt = 1e-3;
  const FlowPath path = integrate_drift({4.0, 0.05}, dt, 30.0);
  double max_err = 0.0;
  for (size_t i = 0; i < path.times.size(); ++i) {
    max_err = std::max(max_err, std::fabs(path.states[i].r2 - closed_form_r2(path.times[i], 4.0)));
  }
  CHECK(max_err <= 10.0 * dt * dt * dt * dt);
  // Times strictly increase and the path never leaves the state space.
  for (size_t i = 0; i + 1 < path.times.size(); ++i) CHECK(path.times[i] < path.times[i + 1]);
  for (const StateY& y : path.states) CHECK(in_state_space(y, 1e-9));
}

TEST_CASE("halving the step shrinks the radius error at least 8x") {
  // Run where truncation dominates rounding.
  const auto max_err = [](double dt) {
    const FlowPath path = integrate_drift({4.0, 0.05}, dt, 10.0);
    double err = 0.0;
    for (size_t i = 0; i < path.times.size(); ++i) {
      err = std::max(err, std::fabs(path.states[i].r2 - closed_form_r2(path.times[i], 4.0)));
    }
    return err;
  };
  const double coarse = max_err(0.01);
  const double fine = max_err(0.005);
  INFO("coarse " << coarse << " fine " << fine);
  CHECK(coarse >= 8.0 * fine);
}

TEST_CASE("psi decays monotonically after tau2 and reaches 0.01 by t = 30") {
  for (double s0 : {0.05, -0.05}) {
    const FlowPath path = integrate_drift({4.0, s0}, 1e-3, 30.0);
    REQUIRE(path.tau2_bar.has_value());
    double prev = std::numeric_limits<double>::infinity();
    double min_psi = prev;
    for (size_t i = 0; i < path.times.size(); ++i) {
      if (path.times[i] < *path.tau2_bar) continue;
      const double psi = lyapunov(path.states[i]);
      CHECK(psi <= prev + 1e-14);
      prev = psi;
      min_psi = std::min(min_psi, psi);
    }
    CHECK(min_psi <= 0.01);
    const auto rate = phase3_contraction_estimate(path);
    REQUIRE(rate.has_value());
    INFO("empirical phase-3 contraction constant " << *rate);
    CHECK(*rate > 0.0);
  }
}

TEST_CASE("phase-1 duration matches the closed form") {
  const double dt = 1e-3;
  for (double r0_sq : {1.2, 2.0, 4.0, 9.0}) {
    const FlowPath path = integrate_drift({r0_sq, 0.3}, dt, 10.0);
    REQUIRE(path.tau1_bar.has_value());
    CHECK(*path.tau1_bar <= std::log((r0_sq - 1.0) / 0.1) + dt);
  }
}

TEST_CASE("basins of attraction split by the sign of s") {
  int pairs = 0;
  for (double mag : {0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5}) {
    for (double r0_sq : {0.5, 4.0}) {
      REQUIRE(mag * mag <= r0_sq);
      const FlowPath up = integrate_drift({r0_sq, mag}, 5e-3, 40.0);
      const FlowPath down = integrate_drift({r0_sq, -mag}, 5e-3, 40.0);
      const StateY yu = up.states.back();
      const StateY yd = down.states.back();
      CHECK(lyapunov(yu) <= 0.01);
      CHECK(lyapunov(yd) <= 0.01);
      CHECK(yu.s > 0.0);
      CHECK(yd.s < 0.0);
      // The drift is exactly odd, so the mirrored flow matches bitwise.
      REQUIRE(up.states.size() == down.states.size());
      bool mirror = true;
      for (size_t i = 0; i < up.states.size(); ++i) {
        mirror = mirror && up.states[i].r2 == down.states[i].r2 && up.states[i].s == -down.states[i].s;
      }
      CHECK(mirror);
      ++pairs;
    }
  }
  CHECK(pairs == 20);
}

TEST_CASE("integrator input validation") {
  CHECK_THROWS_AS(integrate_drift({1.0, 0.0}, 0.02, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(integrate_drift({1.0, 0.0}, 0.01, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(integrate_drift({1.0, 2.0}, 0.01, 1.0), std::invalid_argument);
}

TEST_CASE("vector field grid") {
  // Lattice chosen so that (1, 1) is a grid point.
  const auto grid = vector_field_grid(0.0, 2.0, -1.0, 1.0, 21);
  bool saw_minimum = false;
  for (const FieldPoint& p : grid) {
    CHECK(p.y.s * p.y.s <= p.y.r2);
    if (p.y.r2 > 1.0) CHECK(p.v.dr2 < 0.0);
    if (p.y.r2 < 1.0) CHECK(p.v.dr2 > 0.0);
    if (p.y.r2 == 1.0 && p.y.s > 0.0 && p.y.s < 1.0) CHECK(p.v.ds > 0.0);
    if (p.y.r2 == 1.0 && p.y.s == 1.0) {
      saw_minimum = true;
      CHECK(p.v.dr2 == 0.0);
      CHECK(p.v.ds == 0.0);
    }
  }
  CHECK(saw_minimum);
  CHECK_THROWS_AS(vector_field_grid(0.0, 0.04, 0.9, 1.5, 5), std::invalid_argument);

  const std::string csv = field_csv(grid);
  CHECK(csv.rfind("r2,s,alpha_bar,beta_bar\n", 0) == 0);
}

TEST_CASE("svg output is deterministic") {
  const auto grid = vector_field_grid(0.0, 4.0, -1.5, 1.5, 12);
  const FlowPath curve = integrate_drift({4.0, 0.05}, 1e-2, 20.0);
  const std::string a = vector_field_svg(grid, &curve);
  const std::string b = vector_field_svg(grid, &curve);
  CHECK(a == b);
  CHECK(a.find("<svg") != std::string::npos);
  CHECK(a.find("<polyline") != std::string::npos);
  CHECK(a.find("</svg>") != std::string::npos);
  const std::string no_curve = vector_field_svg(grid);
  CHECK(no_curve.find("<polyline") == std::string::npos);
}
