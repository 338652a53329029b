#pragma once

#include <cstddef>
#include <vector>

#include "evaporank/trajectory.hpp"

namespace evaporank {

// Re-zeroes trajectories with a known jump time (times become hours since
// the jump) and leaves offset-unknown ones for the fitter, which assigns
// each a bounded offset parameter. A trajectory with neither a jump time
// nor the offset-unknown flag is rejected.
std::vector<Trajectory> time_shift_align(std::vector<Trajectory> trajectories);

enum class PopulationMode { fixed, free };

// Least-squares problem: observed ranks against x_C(t - tau; N, a, b).
// Parameter vector layout (natural units): [a, b, N if free, tau_k for each
// offset-unknown trajectory in order].
struct FitProblem {
  std::vector<Trajectory> trajectories;  // aligned (see time_shift_align)
  PopulationMode mode = PopulationMode::fixed;
  double fixed_population = 0.0;  // N when mode == fixed

  double a_guess = 1e-3;
  double b_guess = 0.5;
  double population_guess = 0.0;  // free mode; 0 picks 2x max observed rank

  // Box bounds. The b interval must avoid the singular points 1 and 2, so
  // it lies inside (0, 1) or (1, 2) on the side of b_guess.
  double a_min = 1e-10;
  double a_max = 1e3;
  double b_min = 1e-6;
  double b_max = 1.0 - 1e-9;
  double population_min = 0.0;  // 0 picks max observed rank

  // Optional extensions, both off by default: per-observation weights
  // (parallel to trajectories/observations; empty means all 1) and time
  // intervals to exclude, e.g. around known data irregularities.
  std::vector<std::vector<double>> weights;
  std::vector<std::pair<double, double>> exclude_time_ranges;

  std::size_t offset_count() const;
  std::size_t parameter_count() const;
  std::size_t data_count() const;  // after exclusions
};

struct FitResult {
  double a = 0.0;
  double b = 0.0;
  double population = 0.0;
  std::vector<double> offsets;
  double chi2 = 0.0;
  std::size_t n_d = 0;
  double rms = 0.0;
  std::vector<double> residuals;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
};

struct ObjectiveValue {
  double chi2 = 0.0;
  std::vector<double> gradient;  // d chi2 / d params, natural units
};

// chi2 and its analytic gradient at the given natural-unit parameter
// vector. Parameters outside the problem bounds are rejected.
ObjectiveValue objective(const FitProblem& problem, const std::vector<double>& params);

// Damped Gauss-Newton (Levenberg-Marquardt) on transformed parameters
// (log a, logit b within its interval, log-shifted N, logit offsets),
// multi-started from a 3x3 grid of (a, b) guesses. Deterministic; ties in
// chi2 break toward lexicographically smaller parameters.
FitResult fit(const FitProblem& problem);

}  // namespace evaporank
