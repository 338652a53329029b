#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace evaporank {

struct RateComponent {
  double f;    // evaporation / jump rate, per unit time, >= 0
  double rho;  // mass fraction, > 0
};

// Finite spectrum of (rate, mass fraction) pairs. Fractions must sum to 1
// within 1e-12 at construction and are renormalized to remove the residual.
// Zero-rate components are allowed, but at least one rate must be positive.
class RateMixture {
 public:
  explicit RateMixture(std::vector<RateComponent> components);

  const std::vector<RateComponent>& components() const { return components_; }
  std::size_t size() const { return components_.size(); }
  double rate(std::size_t i) const { return components_[i].f; }
  double fraction(std::size_t i) const { return components_[i].rho; }

  // Sum of f_j * rho_j (the initial front speed).
  double rate_mass() const { return rate_mass_; }
  // Mass held by zero-rate components; the front approaches 1 minus this.
  double immobile_mass() const { return immobile_mass_; }
  double min_positive_rate() const { return min_positive_rate_; }

 private:
  std::vector<RateComponent> components_;
  double rate_mass_ = 0.0;
  double immobile_mass_ = 0.0;
  double min_positive_rate_ = 0.0;
};

// Front position y_C(t) = 1 - sum_j rho_j exp(-f_j t).
double front_position(const RateMixture& m, double t);

// d y_C / d t = sum_j f_j rho_j exp(-f_j t).
double front_speed(const RateMixture& m, double t);

// Inverse of front_position: the time t0 with front_position(t0) == y.
// Rejects y outside [0, 1 - 1e-12] and y the front never reaches.
double front_inverse(const RateMixture& m, double y);

// Piecewise-cubic initial densities u_i(y, 0) on [0, 1). Cell c covers
// [breakpoints[c], breakpoints[c+1]); coefficients are in the global
// coordinate: u_i(y) = c0 + c1 y + c2 y^2 + c3 y^3 on that cell.
// Enforced at construction: u_i >= 0 everywhere and sum_i u_i == 1
// (within 1e-10) on every cell.
class InitialProfile {
 public:
  using Coeffs = std::array<double, 4>;

  InitialProfile(std::vector<double> breakpoints,
                 std::vector<std::vector<Coeffs>> cells);

  // Constant profile u_i(y, 0) = rho_i.
  static InitialProfile uniform(const RateMixture& m);

  std::size_t component_count() const { return component_count_; }
  std::size_t cell_count() const { return cells_.size(); }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<std::vector<Coeffs>>& cells() const { return cells_; }

  double value(std::size_t i, double y) const;
  std::vector<double> values(double y) const;

  // Exact tail integral U_i(y) = int_y^1 u_i(z, 0) dz.
  double tail_integral(std::size_t i, double y) const;
  // Exact total integral over [0, 1); the implied mass fraction rho_i.
  double total_integral(std::size_t i) const { return totals_[i]; }

 private:
  std::size_t locate_cell(double y) const;

  std::vector<double> breakpoints_;
  std::vector<std::vector<Coeffs>> cells_;  // cells_[cell][component]
  std::size_t component_count_ = 0;
  std::vector<double> totals_;              // per component
  std::vector<std::vector<double>> suffix_; // suffix_[i][c] = int over cells >= c
};

// Builds the RateMixture whose fractions are exactly the profile's
// per-component integrals. Convenient for constructing consistent pairs.
RateMixture mixture_from_profile(const InitialProfile& p, const std::vector<double>& rates);

// True when component counts match and each profile integral reproduces the
// mixture fraction within 1e-10.
bool consistent(const InitialProfile& p, const RateMixture& m);
void require_consistent(const InitialProfile& p, const RateMixture& m);

// Position at time t of the fluid particle initially at y (given it has not
// evaporated): 1 - sum_j exp(-f_j t) U_j(y).
double lagrangian_map(const InitialProfile& p, const RateMixture& m, double y, double t);

// Inverse of lagrangian_map in y: the initial position of the particle found
// at y at time t. Defined for front_position(m, t) <= y <= 1 - 1e-12.
double lagrangian_inverse(const InitialProfile& p, const RateMixture& m, double y, double t);

}  // namespace evaporank
