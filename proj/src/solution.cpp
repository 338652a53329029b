#include "evaporank/solution.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include <boost/numeric/odeint.hpp>

#include "evaporank/detail/numeric.hpp"
#include "evaporank/errors.hpp"

namespace evaporank {

namespace {

constexpr double kFrontMargin = 1e-12;

struct Local {
  std::vector<double> u;
  double v;
};

// Stationary branch: everything is a function of s = t0(y).
Local stationary_state(const RateMixture& m, double s) {
  Local out;
  out.u.resize(m.size());
  detail::CompensatedSum denom;
  for (std::size_t j = 0; j < m.size(); ++j) {
    out.u[j] = m.rate(j) * m.fraction(j) * std::exp(-m.rate(j) * s);
    denom.add(out.u[j]);
  }
  out.v = denom.value();
  for (auto& ui : out.u) ui /= out.v;
  return out;
}

// Wave branch: initial data at y0 = yhat(y, t), damped per component.
Local wave_state(const SolutionField& f, double y0, double t) {
  const RateMixture& m = f.mixture();
  const InitialProfile& p = f.profile();
  Local out;
  out.u.resize(m.size());
  detail::CompensatedSum denom, vel;
  for (std::size_t j = 0; j < m.size(); ++j) {
    const double decay = std::exp(-m.rate(j) * t);
    out.u[j] = decay * p.value(j, y0);
    denom.add(out.u[j]);
    vel.add(m.rate(j) * decay * p.tail_integral(j, y0));
  }
  const double d = denom.value();
  for (auto& ui : out.u) ui /= d;
  out.v = vel.value();
  return out;
}

void check_point(double y, double t) {
  if (!(y >= 0.0 && y < 1.0)) {
    throw std::invalid_argument("solution: y must lie in [0, 1)");
  }
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw std::invalid_argument("solution: t must be finite and >= 0");
  }
}

Local evaluate_off_front(const SolutionField& f, double y, double t) {
  check_point(y, t);
  const double yc = front_position(f.mixture(), t);
  if (std::abs(y - yc) <= kFrontMargin) {
    throw std::invalid_argument("solution: point lies on the front (branch ambiguous); "
                                "use sample_state");
  }
  if (y < yc) {
    return stationary_state(f.mixture(), front_inverse(f.mixture(), y));
  }
  return wave_state(f, lagrangian_inverse(f.profile(), f.mixture(), y, t), t);
}

}  // namespace

const char* to_string(Branch b) {
  switch (b) {
    case Branch::stationary: return "stationary";
    case Branch::wave: return "wave";
    case Branch::front: return "front";
  }
  return "?";
}

SolutionField::SolutionField(RateMixture mixture, InitialProfile profile)
    : mixture_(std::move(mixture)), profile_(std::move(profile)) {
  require_consistent(profile_, mixture_);
}

std::vector<double> density(const SolutionField& s, double y, double t) {
  return evaluate_off_front(s, y, t).u;
}

double velocity(const SolutionField& s, double y, double t) {
  return evaluate_off_front(s, y, t).v;
}

StateSample sample_state(const SolutionField& s, double y, double t) {
  check_point(y, t);
  StateSample out;
  out.y = y;
  out.t = t;
  const double yc = front_position(s.mixture(), t);
  Local local;
  if (std::abs(y - yc) <= kFrontMargin) {
    out.branch = Branch::front;
    local = stationary_state(s.mixture(), t);  // t0(y_C(t)) == t
  } else if (y < yc) {
    out.branch = Branch::stationary;
    local = stationary_state(s.mixture(), front_inverse(s.mixture(), y));
  } else {
    out.branch = Branch::wave;
    local = wave_state(s, lagrangian_inverse(s.profile(), s.mixture(), y, t), t);
  }
  out.u = std::move(local.u);
  out.v = local.v;
  return out;
}

double pde_residual_max(const SolutionField& s, const VerifyGrid& grid, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw std::invalid_argument("pde_residual_max: h must be positive");
  }
  const RateMixture& m = s.mixture();
  const auto& bks = s.profile().breakpoints();
  const std::size_t n = s.component_count();
  double worst = 0.0;
  for (double t : grid.t) {
    if (t - h < 0.0) {
      throw std::invalid_argument("pde_residual_max: t - h below 0");
    }
    const double times[3] = {t - h, t, t + h};
    for (double y : grid.y) {
      if (!(y - h > 0.0 && y + h < 1.0)) {
        throw std::invalid_argument("pde_residual_max: y stencil leaves (0, 1)");
      }
      // The whole stencil must sit on one side of the (moving) front.
      const bool wave_side = y > front_position(m, t);
      for (double tt : times) {
        const double yc = front_position(m, tt);
        if (std::abs(y - yc) <= 10.0 * h || (y > yc) != wave_side) {
          throw std::invalid_argument("pde_residual_max: grid point too close to the front");
        }
      }
      if (wave_side) {
        for (std::size_t k = 1; k + 1 < bks.size(); ++k) {
          for (double tt : times) {
            const double img = lagrangian_map(s.profile(), m, bks[k], tt);
            if (std::abs(y - img) <= 10.0 * h) {
              throw std::invalid_argument(
                  "pde_residual_max: grid point too close to a breakpoint image");
            }
          }
        }
      }
      const Local up = evaluate_off_front(s, y, t + h);
      const Local dn = evaluate_off_front(s, y, t - h);
      const Local rt = evaluate_off_front(s, y + h, t);
      const Local lf = evaluate_off_front(s, y - h, t);
      const Local mid = evaluate_off_front(s, y, t);
      for (std::size_t i = 0; i < n; ++i) {
        const double dudt = (up.u[i] - dn.u[i]) / (2.0 * h);
        const double dflux = (rt.v * rt.u[i] - lf.v * lf.u[i]) / (2.0 * h);
        const double res = dudt + dflux + m.rate(i) * mid.u[i];
        worst = std::max(worst, std::abs(res));
      }
    }
  }
  return worst;
}

std::vector<double> residual_grid(const SolutionField& s, double t, Branch branch,
                                  std::size_t count, double margin) {
  if (branch == Branch::front) {
    throw std::invalid_argument("residual_grid: branch must be stationary or wave");
  }
  const RateMixture& m = s.mixture();
  const double yc = front_position(m, t);
  double lo, hi;
  if (branch == Branch::stationary) {
    lo = margin;
    hi = yc - 2.0 * margin;
  } else {
    lo = yc + 2.0 * margin;
    hi = 1.0 - margin;
  }
  std::vector<double> ys;
  if (!(hi > lo)) return ys;
  const auto& bks = s.profile().breakpoints();
  for (std::size_t k = 0; k < count; ++k) {
    const double y = lo + (hi - lo) * (static_cast<double>(k) + 0.5) /
                              static_cast<double>(count);
    bool clear = true;
    if (branch == Branch::wave) {
      for (std::size_t j = 1; j + 1 < bks.size() && clear; ++j) {
        const double img = lagrangian_map(s.profile(), m, bks[j], t);
        clear = std::abs(y - img) > 2.0 * margin;
      }
    }
    if (clear) ys.push_back(y);
  }
  return ys;
}

std::vector<double> conservation_deviation(const SolutionField& s, double t, double quad_tol) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw std::invalid_argument("conservation_deviation: t must be finite and >= 0");
  }
  if (!(quad_tol > 0.0)) {
    throw std::invalid_argument("conservation_deviation: tolerance must be positive");
  }
  const RateMixture& m = s.mixture();
  const std::size_t n = m.size();
  const double yc = front_position(m, t);
  const double gap = 2.0 * kFrontMargin;

  // Split at the front and at breakpoint images, where the integrand loses
  // smoothness. The skipped slivers are O(1e-12) wide with a bounded
  // integrand, far below the 1e-8 contract.
  std::vector<double> knots;
  if (yc > gap) {
    knots.push_back(0.0);
    knots.push_back(yc - gap);
  }
  knots.push_back(std::max(yc + gap, gap));
  const auto& bks = s.profile().breakpoints();
  for (std::size_t k = 1; k + 1 < bks.size(); ++k) {
    const double img = lagrangian_map(s.profile(), m, bks[k], t);
    if (img > knots.back() && img < 1.0 - 1e-11) knots.push_back(img);
  }
  knots.push_back(1.0 - 1e-11);
  std::sort(knots.begin(), knots.end());

  auto integrand = [&](double y) { return density(s, y, t); };
  std::vector<double> total(n, 0.0);
  const double seg_tol = quad_tol / static_cast<double>(knots.size());
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    if (k == 1 && yc > gap) continue;  // the sliver straddling the front
    const auto part = detail::adaptive_simpson(integrand, knots[k], knots[k + 1], n, seg_tol);
    for (std::size_t i = 0; i < n; ++i) total[i] += part[i];
  }
  std::vector<double> dev(n);
  for (std::size_t i = 0; i < n; ++i) dev[i] = std::abs(total[i] - m.fraction(i));
  return dev;
}

std::vector<double> generator_apply(const RateMixture& m, const std::vector<double>& u) {
  if (u.size() != m.size()) {
    throw std::invalid_argument("generator_apply: state size does not match mixture");
  }
  detail::CompensatedSum flux;
  for (std::size_t j = 0; j < m.size(); ++j) flux.add(m.rate(j) * u[j]);
  const double total = flux.value();
  std::vector<double> out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    out[i] = m.rate(i) * m.fraction(i) / m.rate_mass() * total - m.rate(i) * u[i];
  }
  return out;
}

double generator_ode_deviation(const RateMixture& m, double horizon, double tol) {
  if (!(horizon > 0.0)) {
    throw std::invalid_argument("generator_ode_deviation: horizon must be positive");
  }
  if (!(tol > 0.0)) {
    throw std::invalid_argument("generator_ode_deviation: tolerance must be positive");
  }
  namespace ode = boost::numeric::odeint;
  using State = std::vector<double>;
  auto system = [&m](const State& u, State& dudt, double) { dudt = generator_apply(m, u); };

  State u(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) u[i] = m.fraction(i);

  auto stepper = ode::make_controlled(tol, tol, ode::runge_kutta_dopri5<State>());
  double t = 0.0;
  double dt = std::min(horizon, 0.1);
  double worst = 0.0;
  while (t < horizon) {
    dt = std::min(dt, horizon - t);
    const auto result = stepper.try_step(system, u, t, dt);
    if (result == ode::fail) {
      if (dt < 1e-14 * std::max(1.0, t)) {
        throw convergence_error("generator_ode_deviation: step size underflow");
      }
      continue;  // try_step already shrank dt
    }
    for (std::size_t i = 0; i < m.size(); ++i) {
      worst = std::max(worst, std::abs(u[i] - m.fraction(i)));
    }
  }
  return worst;
}

}  // namespace evaporank
