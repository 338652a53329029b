#include <cmath>
#include <stdexcept>

#include <doctest.h>

#include "evaporank/mixture.hpp"
#include "oracles.hpp"

using namespace evaporank;

namespace {

RateMixture single(double f) { return RateMixture({{f, 1.0}}); }

// Example mixture with a non-evaporating component: f = (1, 0), rho = (1/2, 1/2).
RateMixture salty() { return RateMixture({{1.0, 0.5}, {0.0, 0.5}}); }

InitialProfile three_component_profile() {
  // Smooth single-cell cubics, summing to 1 identically.
  std::vector<std::vector<InitialProfile::Coeffs>> cells(1);
  cells[0].push_back({0.2, 0.1, 0.05, 0.0});
  cells[0].push_back({0.3, -0.05, 0.0, 0.1});
  cells[0].push_back({0.5, -0.05, -0.05, -0.1});
  return InitialProfile({0.0, 1.0}, cells);
}

}  // namespace

TEST_SUITE("mixture") {

TEST_CASE("front position closed form") {
  CHECK(front_position(single(1.0), 0.0) == 0.0);
  CHECK(front_position(single(1.0), std::log(2.0)) == doctest::Approx(0.5).epsilon(1e-14));
  const RateMixture m = salty();
  for (double t : {0.1, 1.0, 3.0}) {
    CHECK(front_position(m, t) ==
          doctest::Approx(0.5 * (1.0 - std::exp(-t))).epsilon(1e-14));
  }
  CHECK(front_position(m, 1.0) == doctest::Approx(0.31606).epsilon(1e-4));
}

TEST_CASE("front position rejects bad time") {
  CHECK_THROWS_AS(front_position(single(1.0), -0.1), std::invalid_argument);
  CHECK_THROWS_AS(front_position(single(1.0), std::nan("")), std::invalid_argument);
  CHECK_THROWS_AS(front_position(single(1.0), INFINITY), std::invalid_argument);
}

TEST_CASE("mixture construction invariants") {
  CHECK_THROWS_AS(RateMixture({}), std::invalid_argument);
  CHECK_THROWS_AS(RateMixture({{1.0, 0.4}, {2.0, 0.4}}), std::invalid_argument);
  CHECK_THROWS_AS(RateMixture({{-1.0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(RateMixture({{1.0, -0.5}, {1.0, 1.5}}), std::invalid_argument);
  // all-zero rates: the velocity field vanishes and t0 is undefined
  CHECK_THROWS_AS(RateMixture({{0.0, 0.5}, {0.0, 0.5}}), std::invalid_argument);
  // tiny normalization residue is absorbed
  const RateMixture m({{1.0, 0.5 + 4e-13}, {2.0, 0.5}});
  CHECK(m.fraction(0) + m.fraction(1) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("front inverse examples") {
  CHECK(front_inverse(salty(), 0.0) == 0.0);
  CHECK(front_inverse(single(1.0), 0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  // with f2 = 0 the inverse matches -(1/f1) log(1 - y/rho1)
  CHECK(front_inverse(salty(), 0.25) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(front_inverse(salty(), -0.1), std::invalid_argument);
  CHECK_THROWS_AS(front_inverse(salty(), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(front_inverse(salty(), 1.0 - 1e-13), std::invalid_argument);
  // unreachable region behind the immobile mass
  CHECK_THROWS_AS(front_inverse(salty(), 0.5), std::invalid_argument);
  CHECK_THROWS_AS(front_inverse(salty(), 0.7), std::invalid_argument);
}

TEST_CASE("front inverse round trips") {
  oracle::Rng rng(20240517);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<RateComponent> comps;
    const int n = 1 + rep % 4;
    double rest = 1.0;
    for (int i = 0; i < n; ++i) {
      const double rho = i + 1 == n ? rest : rest * rng.uniform(0.2, 0.6);
      comps.push_back({rng.uniform(0.05, 3.0), rho});
      rest -= rho;
    }
    const RateMixture m(comps);
    // y-space identity up to the 1 - 1e-9 edge
    for (double y : {0.0, 0.1, 0.37, 0.9, 0.999, 1.0 - 1e-9}) {
      const double t0 = front_inverse(m, y);
      CHECK(front_position(m, t0) == doctest::Approx(y).epsilon(1e-10));
    }
    // t-space identity where the front is not yet flat
    const double t_cap = front_inverse(m, 1.0 - 1e-5);
    for (double frac : {0.0, 0.1, 0.5, 0.9, 1.0}) {
      const double t = frac * t_cap;
      CHECK(front_inverse(m, front_position(m, t)) == doctest::Approx(t).epsilon(1e-10));
    }
  }
}

TEST_CASE("front position monotone, limit equals mobile mass") {
  const RateMixture m = salty();
  double prev = -1.0;
  for (double t : oracle::linspace(0.0, 20.0, 200)) {
    const double y = front_position(m, t);
    CHECK(y > prev);
    prev = y;
  }
  CHECK(front_position(m, 500.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(front_position(single(2.0), 400.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("profile construction checks") {
  // negative density
  CHECK_THROWS_AS(InitialProfile({0.0, 1.0}, {{{-0.1, 0.0, 0.0, 0.0}, {1.1, 0.0, 0.0, 0.0}}}),
                  std::invalid_argument);
  // densities not summing to 1
  CHECK_THROWS_AS(InitialProfile({0.0, 1.0}, {{{0.4, 0.0, 0.0, 0.0}, {0.4, 0.0, 0.0, 0.0}}}),
                  std::invalid_argument);
  // bad breakpoints
  CHECK_THROWS_AS(InitialProfile({0.0, 0.5}, {{{1.0, 0.0, 0.0, 0.0}}}), std::invalid_argument);
  CHECK_THROWS_AS(InitialProfile({0.0, 0.7, 0.5, 1.0},
                                 {{{1.0, 0, 0, 0}}, {{1.0, 0, 0, 0}}, {{1.0, 0, 0, 0}}}),
                  std::invalid_argument);
  // interior-dip negativity caught via the critical point, not the endpoints
  CHECK_THROWS_AS(InitialProfile({0.0, 1.0}, {{{0.1, -0.45, 0.45, 0.0},
                                               {0.9, 0.45, -0.45, 0.0}}}),
                  std::invalid_argument);
}

TEST_CASE("profile tail integrals match quadrature") {
  const InitialProfile p = three_component_profile();
  for (std::size_t i = 0; i < 3; ++i) {
    for (double y : {0.0, 0.123, 0.5, 0.87}) {
      const double exact = p.tail_integral(i, y);
      const double quad = oracle::simpson([&](double z) { return p.value(i, z); }, y,
                                          1.0 - 1e-14, 1e-14);
      CHECK(exact == doctest::Approx(quad).epsilon(1e-12));
    }
  }
}

TEST_CASE("piecewise profile with discontinuity at a breakpoint") {
  // Two cells, step change at 0.5; still sums to 1 per cell.
  std::vector<std::vector<InitialProfile::Coeffs>> cells(2);
  cells[0].push_back({0.8, 0.0, 0.0, 0.0});
  cells[0].push_back({0.2, 0.0, 0.0, 0.0});
  cells[1].push_back({0.3, 0.0, 0.0, 0.0});
  cells[1].push_back({0.7, 0.0, 0.0, 0.0});
  const InitialProfile p({0.0, 0.5, 1.0}, cells);
  CHECK(p.total_integral(0) == doctest::Approx(0.55).epsilon(1e-14));
  CHECK(p.value(0, 0.499) == doctest::Approx(0.8));
  CHECK(p.value(0, 0.5) == doctest::Approx(0.3));
  CHECK(p.tail_integral(1, 0.25) == doctest::Approx(0.2 * 0.25 + 0.35).epsilon(1e-14));
}

TEST_CASE("lagrangian map examples") {
  const RateMixture m = salty();
  const InitialProfile p = InitialProfile::uniform(m);
  // identity at t = 0
  for (double y : {0.0, 0.3, 0.9}) {
    CHECK(lagrangian_map(p, m, y, 0.0) == doctest::Approx(y).epsilon(1e-12));
  }
  // uniform two-component closed form
  for (double y : {0.1, 0.5, 0.9}) {
    for (double t : {0.2, 1.0, 4.0}) {
      const double expected = 1.0 - (1.0 - y) * (0.5 * std::exp(-t) + 0.5);
      CHECK(lagrangian_map(p, m, y, t) == doctest::Approx(expected).epsilon(1e-13));
    }
  }
  // single component, hand value: 1 - 0.5 * 0.5
  const RateMixture one = single(1.0);
  CHECK(lagrangian_map(InitialProfile::uniform(one), one, 0.5, std::log(2.0)) ==
        doctest::Approx(0.75).epsilon(1e-13));
  // starting at 0 reproduces the front exactly (same sums)
  for (double t : {0.0, 0.5, 2.0}) {
    CHECK(lagrangian_map(p, m, 0.0, t) == front_position(m, t));
  }
}

TEST_CASE("lagrangian map rejects inconsistent pair") {
  const RateMixture m = salty();
  const RateMixture other({{1.0, 0.25}, {0.0, 0.75}});
  const InitialProfile p = InitialProfile::uniform(m);
  CHECK_THROWS_AS(lagrangian_map(p, other, 0.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(lagrangian_map(p, single(1.0), 0.5, 1.0), std::invalid_argument);
}

TEST_CASE("lagrangian map strictly increasing in y") {
  const InitialProfile p = three_component_profile();
  const RateMixture m = mixture_from_profile(p, {0.5, 1.4, 2.6});
  oracle::Rng rng(7);
  for (double t : {0.0, 0.3, 1.7}) {
    double y = 0.0;
    double prev = lagrangian_map(p, m, y, t);
    for (int k = 0; k < 50; ++k) {
      y += rng.uniform(1e-4, 0.02);
      if (y >= 1.0) break;
      const double cur = lagrangian_map(p, m, y, t);
      CHECK(cur > prev);
      prev = cur;
    }
  }
}

TEST_CASE("lagrangian inverse") {
  const RateMixture m = salty();
  const InitialProfile p = InitialProfile::uniform(m);
  // the front maps back to 0
  for (double t : {0.1, 1.0}) {
    CHECK(lagrangian_inverse(p, m, front_position(m, t), t) == 0.0);
  }
  // uniform two-component closed form
  for (double t : {0.3, 1.0, 2.5}) {
    const double yc = front_position(m, t);
    for (double y : {yc + 0.01, 0.6, 0.95}) {
      const double expected = 1.0 - (1.0 - y) / (0.5 * std::exp(-t) + 0.5);
      CHECK(lagrangian_inverse(p, m, y, t) == doctest::Approx(expected).epsilon(1e-11));
    }
  }
  // behind the front and beyond 1 are rejected
  CHECK_THROWS_AS(lagrangian_inverse(p, m, front_position(m, 1.0) - 1e-4, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(lagrangian_inverse(p, m, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(lagrangian_inverse(p, m, 1.0 - 1e-13, 1.0), std::invalid_argument);
}

TEST_CASE("lagrangian round trip on random points") {
  const InitialProfile p = three_component_profile();
  const RateMixture m = mixture_from_profile(p, {0.5, 1.4, 2.0});
  oracle::Rng rng(99);
  for (int k = 0; k < 100; ++k) {
    const double t = rng.uniform(0.0, 3.0);
    const double y0 = rng.uniform(0.0, 0.999);
    const double y = lagrangian_map(p, m, y0, t);
    if (y > 1.0 - 1e-12) continue;
    CHECK(lagrangian_inverse(p, m, y, t) == doctest::Approx(y0).epsilon(1e-10));
  }
}

}  // TEST_SUITE
