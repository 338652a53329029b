#include "evaporank/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "evaporank/pareto.hpp"

namespace evaporank {

void validate(const Trajectory& trajectory) {
  for (std::size_t i = 0; i < trajectory.observations.size(); ++i) {
    const auto& obs = trajectory.observations[i];
    if (!std::isfinite(obs.t)) {
      throw std::invalid_argument("trajectory '" + trajectory.label + "': non-finite time");
    }
    if (obs.rank < 1) {
      throw std::invalid_argument("trajectory '" + trajectory.label + "': rank below 1");
    }
    if (i > 0 && !(obs.t > trajectory.observations[i - 1].t)) {
      throw std::invalid_argument("trajectory '" + trajectory.label +
                                  "': observation times must be strictly increasing");
    }
  }
}

std::vector<Trajectory> time_shift_align(std::vector<Trajectory> trajectories) {
  for (auto& traj : trajectories) {
    validate(traj);
    if (traj.jump_time.has_value()) {
      const double shift = *traj.jump_time;
      if (!traj.observations.empty() && shift > traj.observations.front().t) {
        throw std::invalid_argument("trajectory '" + traj.label +
                                    "': jump marker lies after the first observation");
      }
      for (auto& obs : traj.observations) obs.t -= shift;
      traj.jump_time = 0.0;
      traj.offset_unknown = false;
    } else if (!traj.offset_unknown) {
      throw std::invalid_argument("trajectory '" + traj.label +
                                  "': neither jump marker nor offset-unknown flag");
    }
  }
  return trajectories;
}

std::size_t FitProblem::offset_count() const {
  std::size_t k = 0;
  for (const auto& t : trajectories) {
    if (t.offset_unknown) ++k;
  }
  return k;
}

std::size_t FitProblem::parameter_count() const {
  return 2 + (mode == PopulationMode::free ? 1 : 0) + offset_count();
}

std::size_t FitProblem::data_count() const {
  std::size_t n = 0;
  for (const auto& traj : trajectories) {
    for (const auto& obs : traj.observations) {
      bool skip = false;
      for (const auto& [lo, hi] : exclude_time_ranges) {
        skip = skip || (obs.t >= lo && obs.t <= hi);
      }
      if (!skip) ++n;
    }
  }
  return n;
}

namespace {

bool excluded(const FitProblem& problem, double t) {
  for (const auto& [lo, hi] : problem.exclude_time_ranges) {
    if (t >= lo && t <= hi) return true;
  }
  return false;
}

struct FlatData {
  std::vector<double> t;
  std::vector<double> rank;
  std::vector<double> weight;
  std::vector<int> offset_index;      // -1 when the trajectory offset is known
  std::vector<double> offset_limit;   // upper bound per offset parameter
  double max_rank = 1.0;
};

FlatData flatten(const FitProblem& problem) {
  if (!problem.weights.empty() && problem.weights.size() != problem.trajectories.size()) {
    throw std::invalid_argument("fit: weights must parallel the trajectory list");
  }
  FlatData flat;
  int offset = 0;
  for (std::size_t k = 0; k < problem.trajectories.size(); ++k) {
    const auto& traj = problem.trajectories[k];
    validate(traj);
    if (!problem.weights.empty() &&
        problem.weights[k].size() != traj.observations.size()) {
      throw std::invalid_argument("fit: weight row does not match '" + traj.label + "'");
    }
    const int idx = traj.offset_unknown ? offset++ : -1;
    if (traj.offset_unknown) {
      if (traj.observations.empty() || !(traj.observations.front().t > 0.0)) {
        throw std::invalid_argument("fit: offset-unknown trajectory '" + traj.label +
                                    "' needs a positive first observation time");
      }
      flat.offset_limit.push_back(traj.observations.front().t);
    }
    for (std::size_t i = 0; i < traj.observations.size(); ++i) {
      const auto& obs = traj.observations[i];
      if (excluded(problem, obs.t)) continue;
      const double w = problem.weights.empty() ? 1.0 : problem.weights[k][i];
      if (!(w >= 0.0) || !std::isfinite(w)) {
        throw std::invalid_argument("fit: weights must be finite and >= 0");
      }
      flat.t.push_back(obs.t);
      flat.rank.push_back(obs.rank);
      flat.weight.push_back(w);
      flat.offset_index.push_back(idx);
      flat.max_rank = std::max(flat.max_rank, obs.rank);
    }
  }
  if (flat.t.empty()) {
    throw std::invalid_argument("fit: no data points remain after exclusions");
  }
  return flat;
}

struct Layout {
  bool free_population;
  double fixed_population;
  double population_min;  // lower bound when free
  std::size_t offsets;
  std::size_t count() const { return 2 + (free_population ? 1 : 0) + offsets; }
};

Layout make_layout(const FitProblem& problem, const FlatData& flat) {
  Layout lay;
  lay.free_population = problem.mode == PopulationMode::free;
  lay.fixed_population = problem.fixed_population;
  lay.population_min = std::max({2.0, flat.max_rank, problem.population_min});
  lay.offsets = flat.offset_limit.size();
  if (!lay.free_population && !(problem.fixed_population >= 2.0)) {
    throw std::invalid_argument("fit: fixed population must be >= 2");
  }
  return lay;
}

void check_bounds_config(const FitProblem& problem) {
  if (!(problem.a_min > 0.0) || !(problem.a_max > problem.a_min)) {
    throw std::invalid_argument("fit: invalid bounds for a");
  }
  const bool low_branch = problem.b_max <= 1.0 - 1e-9;
  const bool high_branch = problem.b_min >= 1.0 + 1e-9 && problem.b_max <= 2.0 - 1e-9;
  if (!(problem.b_min > 0.0) || !(problem.b_max > problem.b_min) ||
      (!low_branch && !high_branch)) {
    throw std::invalid_argument(
        "fit: b bounds must form an interval inside (0, 1) or (1, 2), away from "
        "the singular points");
  }
}

// Residuals r_k = x_k - x_C(t_k - tau_k) and the Jacobian d r / d params in
// natural units: columns a, b, [N], tau_0..  A data point with effective
// time zero contributes x_k - 1 and a zero gradient row.
struct Evaluation {
  double chi2 = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> residuals;
  std::vector<double> jac;  // row-major n_d x k
};

Evaluation evaluate_model(const FlatData& flat, const Layout& lay,
                          const std::vector<double>& params) {
  const double a = params[0];
  const double b = params[1];
  const double population = lay.free_population ? params[2] : lay.fixed_population;
  const std::size_t k = lay.count();
  const std::size_t offset_base = lay.free_population ? 3 : 2;
  Evaluation ev;
  ev.residuals.resize(flat.t.size());
  ev.jac.assign(flat.t.size() * k, 0.0);
  const ParetoParams pp(population, a, b);
  double chi2 = 0.0;
  for (std::size_t i = 0; i < flat.t.size(); ++i) {
    const int oi = flat.offset_index[i];
    const double tau = oi >= 0 ? params[offset_base + static_cast<std::size_t>(oi)] : 0.0;
    const double te = flat.t[i] - tau;
    if (te < 0.0) {
      throw std::invalid_argument("fit: offset exceeds an observation time");
    }
    const ParetoFrontDerivs d = relative_front_pareto_derivs(pp, te);
    const double r = flat.rank[i] - (1.0 + population * d.y);
    ev.residuals[i] = r;
    chi2 += flat.weight[i] * r * r;
    double* row = &ev.jac[i * k];
    row[0] = -population * d.dy_da;
    row[1] = -population * d.dy_db;
    if (lay.free_population) row[2] = -d.y;
    if (oi >= 0) row[offset_base + static_cast<std::size_t>(oi)] = population * d.dy_dt;
  }
  ev.chi2 = chi2;
  return ev;
}

std::vector<double> chi2_gradient(const FlatData& flat, const Evaluation& ev, std::size_t k) {
  std::vector<double> g(k, 0.0);
  for (std::size_t i = 0; i < ev.residuals.size(); ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      g[j] += 2.0 * flat.weight[i] * ev.residuals[i] * ev.jac[i * k + j];
    }
  }
  return g;
}

// In-place Cholesky solve of A x = b for symmetric positive definite A.
bool solve_spd(std::vector<double>& a, std::vector<double>& b, std::size_t k) {
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      double sum = a[i * k + j];
      for (std::size_t m = 0; m < i; ++m) sum -= a[i * k + m] * a[j * k + m];
      if (i == j) {
        if (!(sum > 0.0)) return false;
        a[i * k + i] = std::sqrt(sum);
      } else {
        a[j * k + i] = sum / a[i * k + i];
      }
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    double sum = b[i];
    for (std::size_t m = 0; m < i; ++m) sum -= a[i * k + m] * b[m];
    b[i] = sum / a[i * k + i];
  }
  for (std::size_t i = k; i-- > 0;) {
    double sum = b[i];
    for (std::size_t m = i + 1; m < k; ++m) sum -= a[m * k + i] * b[m];
    b[i] = sum / a[i * k + i];
  }
  return true;
}

constexpr double kLogitClamp = 35.0;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double u) {
  u = std::min(std::max(u, 1e-15), 1.0 - 1e-15);
  return std::log(u / (1.0 - u));
}

// Bijections between the optimizer space and natural parameters:
// a = exp(theta), b and offsets logit-scaled inside their open intervals,
// N = N_min + exp(theta).
struct Transform {
  const FitProblem& problem;
  const FlatData& flat;
  const Layout& lay;

  std::vector<double> natural(const std::vector<double>& theta) const {
    std::vector<double> p(theta.size());
    p[0] = std::exp(theta[0]);
    p[1] = problem.b_min + (problem.b_max - problem.b_min) * sigmoid(theta[1]);
    std::size_t base = 2;
    if (lay.free_population) {
      p[2] = lay.population_min + std::exp(theta[2]);
      base = 3;
    }
    for (std::size_t j = 0; j < lay.offsets; ++j) {
      p[base + j] = flat.offset_limit[j] * sigmoid(theta[base + j]);
    }
    return p;
  }

  std::vector<double> scale(const std::vector<double>& theta,
                            const std::vector<double>& p) const {
    std::vector<double> s(theta.size());
    s[0] = p[0];
    const double sb = sigmoid(theta[1]);
    s[1] = (problem.b_max - problem.b_min) * sb * (1.0 - sb);
    std::size_t base = 2;
    if (lay.free_population) {
      s[2] = p[2] - lay.population_min;
      base = 3;
    }
    for (std::size_t j = 0; j < lay.offsets; ++j) {
      const double so = sigmoid(theta[base + j]);
      s[base + j] = flat.offset_limit[j] * so * (1.0 - so);
    }
    return s;
  }

  std::vector<double> from_natural(const std::vector<double>& p) const {
    std::vector<double> theta(p.size());
    theta[0] = std::log(p[0]);
    theta[1] = logit((p[1] - problem.b_min) / (problem.b_max - problem.b_min));
    std::size_t base = 2;
    if (lay.free_population) {
      theta[2] = std::log(std::max(p[2] - lay.population_min, 1e-12));
      base = 3;
    }
    for (std::size_t j = 0; j < lay.offsets; ++j) {
      theta[base + j] = logit(p[base + j] / flat.offset_limit[j]);
    }
    return theta;
  }

  void clamp(std::vector<double>& theta) const {
    theta[0] = std::min(std::max(theta[0], std::log(problem.a_min)), std::log(problem.a_max));
    theta[1] = std::min(std::max(theta[1], -kLogitClamp), kLogitClamp);
    std::size_t base = 2;
    if (lay.free_population) {
      theta[2] = std::min(theta[2], 700.0);
      base = 3;
    }
    for (std::size_t j = 0; j < lay.offsets; ++j) {
      theta[base + j] = std::min(std::max(theta[base + j], -kLogitClamp), kLogitClamp);
    }
  }
};

struct LmOutcome {
  std::vector<double> params;
  double chi2 = std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
  double gradient_norm = std::numeric_limits<double>::infinity();
  bool usable = false;
};

LmOutcome lm_minimize(const FlatData& flat, const Layout& lay, const Transform& tf,
                      std::vector<double> theta, int max_iter) {
  LmOutcome out;
  tf.clamp(theta);
  std::vector<double> params = tf.natural(theta);
  Evaluation ev;
  try {
    ev = evaluate_model(flat, lay, params);
  } catch (const std::exception&) {
    return out;
  }
  if (!std::isfinite(ev.chi2)) return out;
  out.usable = true;

  const std::size_t k = lay.count();
  double lambda = 1e-3;
  for (int iter = 0; iter < max_iter; ++iter) {
    out.iterations = iter;
    const std::vector<double> sc = tf.scale(theta, params);
    // Gradient and normal matrix in optimizer coordinates.
    std::vector<double> g(k, 0.0);
    std::vector<double> jtj(k * k, 0.0);
    for (std::size_t i = 0; i < flat.t.size(); ++i) {
      const double* row = &ev.jac[i * k];
      const double w = flat.weight[i];
      for (std::size_t p = 0; p < k; ++p) {
        const double jp = row[p] * sc[p];
        g[p] += 2.0 * w * ev.residuals[i] * jp;
        for (std::size_t q = p; q < k; ++q) {
          jtj[p * k + q] += w * jp * row[q] * sc[q];
        }
      }
    }
    for (std::size_t p = 0; p < k; ++p) {
      for (std::size_t q = 0; q < p; ++q) jtj[p * k + q] = jtj[q * k + p];
    }
    double gnorm = 0.0;
    for (double gi : g) gnorm = std::max(gnorm, std::abs(gi));
    out.gradient_norm = gnorm;
    if (gnorm <= 1e-6 * (1.0 + ev.chi2)) {
      out.converged = true;
      break;
    }

    bool stepped = false;
    while (lambda <= 1e14) {
      std::vector<double> lhs = jtj;
      std::vector<double> rhs(k);
      for (std::size_t p = 0; p < k; ++p) {
        lhs[p * k + p] += lambda * std::max(jtj[p * k + p], 1e-12);
        rhs[p] = -0.5 * g[p];
      }
      if (!solve_spd(lhs, rhs, k)) {
        lambda *= 4.0;
        continue;
      }
      std::vector<double> trial = theta;
      double step = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        trial[p] += rhs[p];
        step = std::max(step, std::abs(rhs[p]));
      }
      tf.clamp(trial);
      const std::vector<double> trial_params = tf.natural(trial);
      Evaluation trial_ev;
      bool ok = true;
      try {
        trial_ev = evaluate_model(flat, lay, trial_params);
      } catch (const std::exception&) {
        ok = false;
      }
      if (ok && std::isfinite(trial_ev.chi2) && trial_ev.chi2 < ev.chi2) {
        theta = trial;
        params = trial_params;
        ev = std::move(trial_ev);
        lambda = std::max(lambda / 3.0, 1e-12);
        stepped = true;
        if (step <= 1e-12) {
          out.converged = true;
          iter = max_iter;  // step-size stop
        }
        break;
      }
      if (step <= 1e-12) {
        out.converged = true;
        iter = max_iter;
        break;
      }
      lambda *= 4.0;
    }
    if (!stepped && out.converged) break;
    if (!stepped) break;  // damping exhausted
  }
  out.params = params;
  out.chi2 = ev.chi2;
  return out;
}

bool lexicographic_less(const std::vector<double>& a, const std::vector<double>& b) {
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return false;
}

}  // namespace

ObjectiveValue objective(const FitProblem& problem, const std::vector<double>& params) {
  check_bounds_config(problem);
  const FlatData flat = flatten(problem);
  const Layout lay = make_layout(problem, flat);
  if (params.size() != lay.count()) {
    throw std::invalid_argument("objective: expected " + std::to_string(lay.count()) +
                                " parameters, got " + std::to_string(params.size()));
  }
  if (!(params[0] >= problem.a_min && params[0] <= problem.a_max) ||
      !(params[1] >= problem.b_min && params[1] <= problem.b_max)) {
    throw std::invalid_argument("objective: parameter outside bounds");
  }
  std::size_t base = 2;
  if (lay.free_population) {
    if (!(params[2] >= lay.population_min)) {
      throw std::invalid_argument("objective: population below its lower bound");
    }
    base = 3;
  }
  for (std::size_t j = 0; j < lay.offsets; ++j) {
    if (!(params[base + j] >= 0.0 && params[base + j] <= flat.offset_limit[j])) {
      throw std::invalid_argument("objective: offset outside [0, first observation time]");
    }
  }
  const Evaluation ev = evaluate_model(flat, lay, params);
  ObjectiveValue out;
  out.chi2 = ev.chi2;
  out.gradient = chi2_gradient(flat, ev, lay.count());
  return out;
}

FitResult fit(const FitProblem& problem) {
  check_bounds_config(problem);
  if (problem.trajectories.empty()) {
    throw std::invalid_argument("fit: no trajectories");
  }
  for (const auto& traj : problem.trajectories) {
    if (traj.observations.size() < 2) {
      throw std::invalid_argument("fit: trajectory '" + traj.label +
                                  "' has fewer than 2 observations");
    }
  }
  const FlatData flat = flatten(problem);
  const Layout lay = make_layout(problem, flat);
  const Transform tf{problem, flat, lay};

  const double width = problem.b_max - problem.b_min;
  const double b_inset = std::max(1e-6 * width, 1e-12);
  auto clamp_b = [&](double b) {
    return std::min(std::max(b, problem.b_min + b_inset), problem.b_max - b_inset);
  };
  auto clamp_a = [&](double a) {
    return std::min(std::max(a, problem.a_min), problem.a_max);
  };

  const double n_guess = lay.free_population
                             ? std::max(problem.population_guess > 0.0
                                            ? problem.population_guess
                                            : 2.0 * flat.max_rank,
                                        lay.population_min + 1.0)
                             : 0.0;

  auto make_start = [&](double a0, double b0) {
    std::vector<double> p(lay.count());
    p[0] = clamp_a(a0);
    p[1] = clamp_b(b0);
    std::size_t base = 2;
    if (lay.free_population) {
      p[2] = n_guess;
      base = 3;
    }
    for (std::size_t j = 0; j < lay.offsets; ++j) {
      p[base + j] = 0.5 * flat.offset_limit[j];
    }
    return tf.from_natural(p);
  };

  // Primary guess must evaluate to a finite objective.
  {
    const std::vector<double> p0 = tf.natural(make_start(problem.a_guess, problem.b_guess));
    const Evaluation ev0 = evaluate_model(flat, lay, p0);
    if (!std::isfinite(ev0.chi2)) {
      throw std::invalid_argument("fit: objective is not finite at the initial guess");
    }
  }

  const double a_starts[3] = {problem.a_guess * 0.1, problem.a_guess, problem.a_guess * 10.0};
  const double b_starts[3] = {clamp_b(problem.b_min + 0.25 * width), clamp_b(problem.b_guess),
                              clamp_b(problem.b_min + 0.75 * width)};
  LmOutcome best;
  for (double a0 : a_starts) {
    for (double b0 : b_starts) {
      LmOutcome candidate = lm_minimize(flat, lay, tf, make_start(a0, b0), 500);
      if (!candidate.usable) continue;
      const bool better =
          candidate.chi2 < best.chi2 ||
          (candidate.chi2 == best.chi2 && lexicographic_less(candidate.params, best.params));
      if (better) best = candidate;
    }
  }
  if (!best.usable) {
    throw std::invalid_argument("fit: no usable starting point");
  }

  const Evaluation final_ev = evaluate_model(flat, lay, best.params);
  FitResult result;
  result.a = best.params[0];
  result.b = best.params[1];
  result.population = lay.free_population ? best.params[2] : lay.fixed_population;
  const std::size_t base = lay.free_population ? 3 : 2;
  result.offsets.assign(best.params.begin() + static_cast<std::ptrdiff_t>(base),
                        best.params.end());
  result.chi2 = final_ev.chi2;
  result.n_d = flat.t.size();
  result.rms = std::sqrt(final_ev.chi2 / static_cast<double>(flat.t.size()));
  result.residuals = final_ev.residuals;
  result.converged = best.converged;
  result.iterations = best.iterations;
  result.gradient_norm = best.gradient_norm;
  return result;
}

}  // namespace evaporank
