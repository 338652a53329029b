#pragma once

#include "evaporank/mixture.hpp"

namespace evaporank {

// Pareto rate law f_i = a (N/i)^{1/b} with equal weights 1/N. The exponent
// must stay 1e-9 away from the branch singularities at b = 1 and b = 2;
// b > 2 parameters are constructible (the discrete rates are fine) but the
// continuum front formulas reject them.
class ParetoParams {
 public:
  ParetoParams(double population, double min_rate, double exponent);

  double population() const { return population_; }  // N, real >= 2 (fits may relax integrality)
  double min_rate() const { return min_rate_; }      // a > 0
  double exponent() const { return exponent_; }      // b

 private:
  double population_;
  double min_rate_;
  double exponent_;
};

// Continuum front y_C(t) for Pareto rates:
//   0 < b < 1:  1 - e^{-at} + (at)^b Gamma(1-b, at)
//   1 < b < 2:  1 - e^{-at}(1 - at/(b-1)) - (at)^b/(b-1) Gamma(2-b, at)
// For at > 700 the value saturates just below 1. b >= 2 is rejected.
double relative_front_pareto(const ParetoParams& params, double t);

// Absolute rank trajectory x_C(t) = 1 + N y_C(t).
double rank_trajectory(const ParetoParams& params, double t);

// Short-time coefficient c = N a^b Gamma(1-b) of x_C(t) = 1 + c t^b + O(t),
// valid for 0 < b < 1.
double short_time_coefficient(const ParetoParams& params);

// The discrete mixture {f_i = a (N/i)^{1/b}, rho_i = 1/N}; requires
// integral N >= 2.
RateMixture pareto_rates(const ParetoParams& params);

// y_C(t) with derivatives, for least-squares fitting:
// value plus d/da, d/db and d/dt. The b-derivative differentiates the
// incomplete gamma in its order numerically.
struct ParetoFrontDerivs {
  double y;
  double dy_da;
  double dy_db;
  double dy_dt;
};
ParetoFrontDerivs relative_front_pareto_derivs(const ParetoParams& params, double t);

}  // namespace evaporank
