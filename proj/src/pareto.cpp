#include "evaporank/pareto.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "evaporank/gamma.hpp"

namespace evaporank {

namespace {

constexpr double kBandWidth = 1e-9;  // exclusion around b = 1 and b = 2
constexpr double kSaturation = 700.0;  // e^{-at} underflow threshold

const double kBelowOne = std::nextafter(1.0, 0.0);

void require_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw std::invalid_argument("pareto front: t must be finite and >= 0");
  }
}

void require_branch(double b) {
  if (b > 2.0 - kBandWidth) {
    throw std::invalid_argument(
        "pareto front: b >= 2 is not supported by the continuum formulas");
  }
}

double clamp_unit(double y) { return std::min(std::max(y, 0.0), kBelowOne); }

// d Gamma(s, p) / d s by central differences; the step shrinks near s = 0
// so the stencil stays inside the supported order range.
double gamma_order_derivative(double s, double p) {
  const double step = std::min(1e-6, 0.5 * s);
  return (upper_incomplete_gamma(s + step, p) - upper_incomplete_gamma(s - step, p)) /
         (2.0 * step);
}

}  // namespace

ParetoParams::ParetoParams(double population, double min_rate, double exponent)
    : population_(population), min_rate_(min_rate), exponent_(exponent) {
  if (!(population >= 2.0) || !std::isfinite(population)) {
    throw std::invalid_argument("ParetoParams: population must be >= 2");
  }
  if (!(min_rate > 0.0) || !std::isfinite(min_rate)) {
    throw std::invalid_argument("ParetoParams: min rate must be positive");
  }
  if (!(exponent > 0.0) || !std::isfinite(exponent)) {
    throw std::invalid_argument("ParetoParams: exponent must be positive");
  }
  if (std::abs(exponent - 1.0) < kBandWidth || std::abs(exponent - 2.0) < kBandWidth) {
    throw std::invalid_argument(
        "ParetoParams: exponent within 1e-9 of a formula singularity (b = 1 or 2)");
  }
}

double relative_front_pareto(const ParetoParams& params, double t) {
  require_time(t);
  const double b = params.exponent();
  require_branch(b);
  if (t == 0.0) return 0.0;
  const double p = params.min_rate() * t;
  if (p > kSaturation) return kBelowOne;  // remaining terms are below 1e-304
  double y;
  if (b < 1.0) {
    y = -std::expm1(-p) + std::pow(p, b) * upper_incomplete_gamma(1.0 - b, p);
  } else {
    y = -std::expm1(-p) + std::exp(-p) * p / (b - 1.0) -
        std::pow(p, b) / (b - 1.0) * upper_incomplete_gamma(2.0 - b, p);
  }
  return clamp_unit(y);
}

double rank_trajectory(const ParetoParams& params, double t) {
  return 1.0 + params.population() * relative_front_pareto(params, t);
}

double short_time_coefficient(const ParetoParams& params) {
  const double b = params.exponent();
  if (!(b < 1.0)) {
    throw std::invalid_argument("short_time_coefficient: requires 0 < b < 1");
  }
  return params.population() * std::pow(params.min_rate(), b) * std::tgamma(1.0 - b);
}

RateMixture pareto_rates(const ParetoParams& params) {
  const double n = params.population();
  if (std::floor(n) != n || !(n >= 2.0)) {
    throw std::invalid_argument("pareto_rates: population must be an integer >= 2");
  }
  if (n > 1e8) {
    throw std::invalid_argument("pareto_rates: population too large to materialize");
  }
  const auto count = static_cast<std::size_t>(n);
  const double inv_b = 1.0 / params.exponent();
  const double rho = 1.0 / n;
  std::vector<RateComponent> comps(count);
  for (std::size_t i = 0; i < count; ++i) {
    comps[i] = RateComponent{params.min_rate() * std::pow(n / static_cast<double>(i + 1), inv_b),
                             rho};
  }
  return RateMixture(std::move(comps));
}

ParetoFrontDerivs relative_front_pareto_derivs(const ParetoParams& params, double t) {
  require_time(t);
  const double a = params.min_rate();
  const double b = params.exponent();
  require_branch(b);
  // At t == 0 the value is exactly 0 and a- and b-sensitivities vanish. The
  // one-sided t-derivative diverges for b < 1; callers keep t > 0 strictly
  // when that derivative matters, so 0 is reported here.
  if (t == 0.0) return {0.0, 0.0, 0.0, 0.0};
  const double p = a * t;
  if (p > kSaturation) return {kBelowOne, 0.0, 0.0, 0.0};

  double y, dy_dp, dy_db;
  if (b < 1.0) {
    const double s = 1.0 - b;
    const double g = upper_incomplete_gamma(s, p);
    const double pb = std::pow(p, b);
    y = -std::expm1(-p) + pb * g;
    dy_dp = b * std::pow(p, b - 1.0) * g;
    dy_db = pb * (std::log(p) * g - gamma_order_derivative(s, p));
  } else {
    const double s = 2.0 - b;
    const double g = upper_incomplete_gamma(s, p);
    const double pb = std::pow(p, b);
    const double bm = b - 1.0;
    const double ep = std::exp(-p);
    y = -std::expm1(-p) + ep * p / bm - pb / bm * g;
    dy_dp = b / bm * (ep - std::pow(p, b - 1.0) * g);
    dy_db = -p * ep / (bm * bm) - pb * std::log(p) * g / bm + pb * g / (bm * bm) +
            pb / bm * gamma_order_derivative(s, p);
  }
  return {clamp_unit(y), t * dy_dp, dy_db, a * dy_dp};
}

}  // namespace evaporank
