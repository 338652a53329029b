#include <cmath>
#include <stdexcept>

#include <doctest.h>

#include "evaporank/errors.hpp"
#include "evaporank/mixture.hpp"
#include "evaporank/solution.hpp"
#include "oracles.hpp"

using namespace evaporank;

namespace {

SolutionField pure_field(double f) {
  RateMixture m({{f, 1.0}});
  InitialProfile p = InitialProfile::uniform(m);
  return SolutionField(std::move(m), std::move(p));
}

// Two components, f = (1, 0), rho = (1/2, 1/2), uniform initial data.
SolutionField salty_field() {
  RateMixture m({{1.0, 0.5}, {0.0, 0.5}});
  InitialProfile p = InitialProfile::uniform(m);
  return SolutionField(std::move(m), std::move(p));
}

SolutionField smooth3_field() {
  std::vector<std::vector<InitialProfile::Coeffs>> cells(1);
  cells[0].push_back({0.2, 0.1, 0.05, 0.0});
  cells[0].push_back({0.3, -0.05, 0.0, 0.1});
  cells[0].push_back({0.5, -0.05, -0.05, -0.1});
  InitialProfile p({0.0, 1.0}, cells);
  RateMixture m = mixture_from_profile(p, {0.7, 1.6, 2.9});
  return SolutionField(std::move(m), std::move(p));
}

}  // namespace

TEST_SUITE("solution") {

TEST_CASE("pure fluid has unit density everywhere") {
  const SolutionField f = pure_field(1.3);
  for (double t : {0.0, 0.4, 2.0}) {
    const double yc = front_position(f.mixture(), t);
    for (double y : {0.05, 0.3, 0.8, 0.97}) {
      if (std::abs(y - yc) < 1e-9) continue;
      const auto u = density(f, y, t);
      REQUIRE(u.size() == 1);
      CHECK(u[0] == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("two-component closed forms on both branches") {
  const SolutionField f = salty_field();
  for (double t : {0.3, 1.0, 2.7}) {
    const double yc = front_position(f.mixture(), t);
    // stationary: pure river water
    for (double y : {0.2 * yc, 0.8 * yc}) {
      const auto u = density(f, y, t);
      CHECK(u[0] == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(u[1] == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
      CHECK(velocity(f, y, t) == doctest::Approx(1.0 * (0.5 - y)).epsilon(1e-11));
    }
    // wave: damped uniform data
    const double mix = 0.5 * std::exp(-t) + 0.5;
    for (double y : {yc + 0.05, 0.7, 0.95}) {
      const auto u = density(f, y, t);
      CHECK(u[0] == doctest::Approx(0.5 * std::exp(-t) / mix).epsilon(1e-11));
      CHECK(u[1] == doctest::Approx(0.5 / mix).epsilon(1e-11));
      CHECK(velocity(f, y, t) ==
            doctest::Approx((1.0 - y) * 0.5 * std::exp(-t) / mix).epsilon(1e-10));
    }
  }
  // at t = 1, y > y_C: u_1 = 0.5 e^{-1} / (0.5 e^{-1} + 0.5)
  const auto u = density(f, 0.9, 1.0);
  CHECK(u[0] == doctest::Approx(0.26894142136999512).epsilon(1e-10));
  CHECK(u[1] == doctest::Approx(0.73105857863000487).epsilon(1e-10));
}

TEST_CASE("velocity vanishes at the right wall") {
  const SolutionField f = pure_field(2.0);
  CHECK(velocity(f, 1.0 - 1e-12, 0.7) == doctest::Approx(0.0).scale(1.0).epsilon(1e-11));
  const SolutionField g = smooth3_field();
  CHECK(velocity(g, 1.0 - 1e-12, 0.5) == doctest::Approx(0.0).scale(1.0).epsilon(1e-11));
}

TEST_CASE("density rejects the front and bad arguments") {
  const SolutionField f = salty_field();
  const double yc = front_position(f.mixture(), 1.0);
  CHECK_THROWS_AS(density(f, yc, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(density(f, yc + 5e-13, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(density(f, -0.1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(density(f, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(density(f, 0.5, -1.0), std::invalid_argument);
}

TEST_CASE("sample_state classifies branches") {
  const SolutionField f = pure_field(1.0);
  // Example 1 at y = 0.3, t = 1: stationary, v = 1 - y
  const StateSample s = sample_state(f, 0.3, 1.0);
  CHECK(s.branch == Branch::stationary);
  CHECK(s.u[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.v == doctest::Approx(0.7).epsilon(1e-11));

  const SolutionField g = salty_field();
  CHECK(sample_state(g, 0.9, 0.1).branch == Branch::wave);
  const double yc = front_position(g.mixture(), 0.1);
  CHECK(yc == doctest::Approx(0.5 * (1.0 - std::exp(-0.1))).epsilon(1e-13));
  const StateSample front = sample_state(g, yc, 0.1);
  CHECK(front.branch == Branch::front);
  // front value is the stationary limit
  CHECK(front.u[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(front.v == doctest::Approx(front_speed(g.mixture(), 0.1)).epsilon(1e-12));
}

TEST_CASE("stationary region is literally stationary") {
  const SolutionField f = smooth3_field();
  const double y = 0.08;
  const double t1 = front_inverse(f.mixture(), y) + 0.2;
  const double t2 = t1 + 3.0;
  const auto u1 = density(f, y, t1);
  const auto u2 = density(f, y, t2);
  for (std::size_t i = 0; i < u1.size(); ++i) {
    CHECK(u1[i] == u2[i]);  // identical code path, bitwise equal
  }
}

TEST_CASE("densities normalize and stay non-negative") {
  const SolutionField f = smooth3_field();
  oracle::Rng rng(11);
  for (int k = 0; k < 200; ++k) {
    const double y = rng.uniform(1e-3, 0.995);
    const double t = rng.uniform(0.0, 4.0);
    if (std::abs(y - front_position(f.mixture(), t)) < 1e-9) continue;
    const auto u = density(f, y, t);
    double sum = 0.0;
    for (double ui : u) {
      CHECK(ui >= 0.0);
      sum += ui;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("boundary value at y -> 0 matches f_i rho_i / sum") {
  const SolutionField f = smooth3_field();
  const RateMixture& m = f.mixture();
  const auto u = density(f, 1e-10, 2.0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    CHECK(u[i] == doctest::Approx(m.rate(i) * m.fraction(i) / m.rate_mass()).epsilon(1e-8));
  }
}

TEST_CASE("wave branch at t = 0 reproduces the initial profile") {
  const SolutionField f = smooth3_field();
  for (double y : {0.05, 0.4, 0.77, 0.99}) {
    const auto u = density(f, y, 0.0);
    for (std::size_t i = 0; i < u.size(); ++i) {
      CHECK(u[i] == doctest::Approx(f.profile().value(i, y)).epsilon(1e-11));
    }
  }
}

TEST_CASE("pde residual is tiny for the pure fluid") {
  const SolutionField f = pure_field(1.0);
  VerifyGrid grid;
  grid.t = {0.5};
  grid.y = {0.1, 0.2, 0.3, 0.5, 0.7, 0.9};
  const double res = pde_residual_max(f, grid, 1e-4);
  CHECK(res < 1e-9);
}

TEST_CASE("pde residual on the two-component example") {
  const SolutionField f = salty_field();
  VerifyGrid stationary;
  stationary.t = {1.0};
  stationary.y = residual_grid(f, 1.0, Branch::stationary, 10, 0.02);
  REQUIRE(!stationary.y.empty());
  CHECK(pde_residual_max(f, stationary, 1e-4) < 1e-8);
  VerifyGrid wave;
  wave.t = {1.0};
  wave.y = residual_grid(f, 1.0, Branch::wave, 10, 0.02);
  REQUIRE(!wave.y.empty());
  CHECK(pde_residual_max(f, wave, 1e-4) < 1e-8);
}

TEST_CASE("pde residual converges at second order") {
  const SolutionField f = smooth3_field();
  for (Branch branch : {Branch::stationary, Branch::wave}) {
    VerifyGrid grid;
    grid.t = {0.6};
    grid.y = residual_grid(f, 0.6, branch, 25, 0.05);
    REQUIRE(grid.y.size() >= 10);
    double prev = pde_residual_max(f, grid, 1e-3);
    for (double h : {5e-4, 2.5e-4}) {
      const double cur = pde_residual_max(f, grid, h);
      CHECK(cur <= 0.3 * prev);
      prev = cur;
    }
  }
}

TEST_CASE("pde residual rejects stencils near the front") {
  const SolutionField f = salty_field();
  const double yc = front_position(f.mixture(), 1.0);
  VerifyGrid grid;
  grid.t = {1.0};
  grid.y = {yc + 5e-4};
  CHECK_THROWS_AS(pde_residual_max(f, grid, 1e-4), std::invalid_argument);
  grid.y = {0.5};
  CHECK_THROWS_AS(pde_residual_max(f, grid, -1e-4), std::invalid_argument);
  grid.t = {1e-6};
  CHECK_THROWS_AS(pde_residual_max(f, grid, 1e-4), std::invalid_argument);
}

TEST_CASE("velocity derivative identity dv/dy = -sum f_j u_j") {
  const SolutionField f = smooth3_field();
  const double h = 1e-5;
  for (double t : {0.4, 1.1}) {
    for (Branch branch : {Branch::stationary, Branch::wave}) {
      for (double y : residual_grid(f, t, branch, 5, 0.03)) {
        const double dv = (velocity(f, y + h, t) - velocity(f, y - h, t)) / (2.0 * h);
        const auto u = density(f, y, t);
        double expect = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
          expect -= f.mixture().rate(i) * u[i];
        }
        CHECK(dv == doctest::Approx(expect).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("conservation for the pure fluid is exact to quadrature") {
  const SolutionField f = pure_field(1.0);
  for (double t : {0.2, 1.0}) {
    const auto dev = conservation_deviation(f, t, 1e-9);
    REQUIRE(dev.size() == 1);
    CHECK(dev[0] < 1e-8);
  }
}

TEST_CASE("conservation for the three-component field") {
  const SolutionField f = smooth3_field();
  for (double t : {0.1, 1.0, 10.0}) {
    const auto dev = conservation_deviation(f, t, 1e-9);
    for (double d : dev) CHECK(d <= 1e-8);
  }
}

TEST_CASE("conservation honors the tolerance contract") {
  const SolutionField f = salty_field();
  const auto dev = conservation_deviation(f, 1.0, 1e-10);
  for (double d : dev) CHECK(d <= 1e-9);
}

TEST_CASE("generator fixes the mass-fraction vector") {
  oracle::Rng rng(321);
  for (int k = 0; k < 20; ++k) {
    const int n = 1 + static_cast<int>(rng.uniform(1.0, 6.0));
    std::vector<RateComponent> comps;
    double rest = 1.0;
    for (int i = 0; i < n; ++i) {
      const double rho = i + 1 == n ? rest : rest * rng.uniform(0.1, 0.7);
      comps.push_back({rng.uniform(0.01, 5.0), rho});
      rest -= rho;
    }
    const RateMixture m(comps);
    std::vector<double> rho(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) rho[i] = m.fraction(i);
    const auto out = generator_apply(m, rho);
    for (std::size_t i = 0; i < out.size(); ++i) {
      CHECK(std::abs(out[i]) <= 1e-14 * std::max(1.0, m.rate(i)));
    }
  }
}

TEST_CASE("generator ODE stays on the fixed point") {
  // single component: A U vanishes identically
  const RateMixture one({{1.7, 1.0}});
  CHECK(generator_ode_deviation(one, 5.0, 1e-10) <= 1e-12);

  const RateMixture two({{1.0, 0.5}, {2.0, 0.5}});
  CHECK(generator_ode_deviation(two, 10.0, 1e-10) <= 1e-9);

  CHECK_THROWS_AS(generator_ode_deviation(two, -1.0, 1e-10), std::invalid_argument);
}

}  // TEST_SUITE
