#pragma once

#include <cstddef>
#include <vector>

#include "evaporank/mixture.hpp"

namespace evaporank {

enum class Branch { stationary, wave, front };

const char* to_string(Branch b);

// A consistent (mixture, initial profile) pair; everything else is derived
// from it in closed form.
class SolutionField {
 public:
  SolutionField(RateMixture mixture, InitialProfile profile);

  const RateMixture& mixture() const { return mixture_; }
  const InitialProfile& profile() const { return profile_; }
  std::size_t component_count() const { return mixture_.size(); }

 private:
  RateMixture mixture_;
  InitialProfile profile_;
};

struct StateSample {
  double y = 0.0;
  double t = 0.0;
  std::vector<double> u;  // per-component densities, sums to 1
  double v = 0.0;         // velocity
  Branch branch = Branch::stationary;
};

// Densities u_i(y, t). Behind the front the value is the stationary
// t0(y)-profile; ahead of it the propagated initial data. Points within
// 1e-12 of the front are rejected (branch ambiguity); use sample_state.
std::vector<double> density(const SolutionField& s, double y, double t);

// Velocity v(y, t) = sum_j f_j int_y^1 u_j(z, t) dz, in closed form.
double velocity(const SolutionField& s, double y, double t);

// Densities, velocity and branch tag in one call. On the front itself the
// densities are the stationary-branch limit and branch == front.
StateSample sample_state(const SolutionField& s, double y, double t);

struct VerifyGrid {
  std::vector<double> y;
  std::vector<double> t;
};

// Max over the grid and components of the centered-difference residual of
// the continuity equation du_i/dt + d(v u_i)/dy + f_i u_i. Every grid point
// must keep distance > 10h from the front curve and (on the wave side) from
// the images of interior profile breakpoints; violations are rejected.
// For the exact solution the result is O(h^2).
double pde_residual_max(const SolutionField& s, const VerifyGrid& grid, double h);

// y points usable with pde_residual_max at time t on the requested branch,
// clear of the front and of breakpoint images by > margin.
std::vector<double> residual_grid(const SolutionField& s, double t, Branch branch,
                                  std::size_t count, double margin);

// Per-component |int_0^1 u_i(z, t) dz - rho_i| by adaptive quadrature split
// at the front and at breakpoint images. Throws quadrature_error if the
// subdivision budget is exhausted.
std::vector<double> conservation_deviation(const SolutionField& s, double t, double quad_tol);

// (A U)_i = f_i rho_i / (sum_j f_j rho_j) * sum_j f_j U_j - f_i U_i.
std::vector<double> generator_apply(const RateMixture& m, const std::vector<double>& u);

// Integrates dU/dt = A U from U(0) = rho with an adaptive embedded
// Runge-Kutta pair and returns the max deviation max_t max_i |U_i - rho_i|
// over the accepted steps. The constant solution U == rho is exact, so the
// result bounds the integrator error.
double generator_ode_deviation(const RateMixture& m, double horizon, double tol);

}  // namespace evaporank
