#include "evaporank/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "evaporank/detail/numeric.hpp"
#include "evaporank/errors.hpp"

namespace evaporank {

namespace {

constexpr double kFractionTol = 1e-12;
constexpr double kConsistencyTol = 1e-10;
constexpr double kEdgeMargin = 1e-12;   // reject inversions for y > 1 - this
constexpr double kInverseTol = 1e-13;   // y-residual tolerance of inversions
constexpr int kMaxIter = 200;

void require_finite_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw std::invalid_argument("time must be finite and >= 0, got " + std::to_string(t));
  }
}

double poly_eval(const InitialProfile::Coeffs& c, double y) {
  return ((c[3] * y + c[2]) * y + c[1]) * y + c[0];
}

// Antiderivative of the cell polynomial, evaluated at y.
double poly_antideriv(const InitialProfile::Coeffs& c, double y) {
  return (((c[3] / 4.0 * y + c[2] / 3.0) * y + c[1] / 2.0) * y + c[0]) * y;
}

// Extreme values of a cubic on [lo, hi]: endpoints plus interior critical
// points (roots of the derivative quadratic).
std::pair<double, double> poly_range(const InitialProfile::Coeffs& c, double lo, double hi) {
  double mn = std::min(poly_eval(c, lo), poly_eval(c, hi));
  double mx = std::max(poly_eval(c, lo), poly_eval(c, hi));
  const double qa = 3.0 * c[3];
  const double qb = 2.0 * c[2];
  const double qc = c[1];
  auto consider = [&](double y) {
    if (y > lo && y < hi) {
      const double v = poly_eval(c, y);
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    }
  };
  if (qa != 0.0) {
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      consider((-qb + sq) / (2.0 * qa));
      consider((-qb - sq) / (2.0 * qa));
    }
  } else if (qb != 0.0) {
    consider(-qc / qb);
  }
  return {mn, mx};
}

}  // namespace

RateMixture::RateMixture(std::vector<RateComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) {
    throw std::invalid_argument("RateMixture: component list is empty");
  }
  detail::CompensatedSum mass;
  min_positive_rate_ = std::numeric_limits<double>::infinity();
  for (const auto& c : components_) {
    if (!std::isfinite(c.f) || c.f < 0.0) {
      throw std::invalid_argument("RateMixture: rates must be finite and >= 0");
    }
    if (!std::isfinite(c.rho) || c.rho <= 0.0) {
      throw std::invalid_argument("RateMixture: mass fractions must be finite and > 0");
    }
    mass.add(c.rho);
    if (c.f > 0.0) min_positive_rate_ = std::min(min_positive_rate_, c.f);
  }
  const double total = mass.value();
  if (std::abs(total - 1.0) > kFractionTol) {
    throw std::invalid_argument("RateMixture: mass fractions sum to " +
                                std::to_string(total) + ", expected 1 within 1e-12");
  }
  if (!std::isfinite(min_positive_rate_)) {
    throw std::invalid_argument("RateMixture: all rates are zero; the front is degenerate");
  }
  detail::CompensatedSum rate_mass, immobile;
  for (auto& c : components_) {
    c.rho /= total;
    rate_mass.add(c.f * c.rho);
    if (c.f == 0.0) immobile.add(c.rho);
  }
  rate_mass_ = rate_mass.value();
  immobile_mass_ = immobile.value();
}

double front_position(const RateMixture& m, double t) {
  require_finite_time(t);
  if (t == 0.0) return 0.0;
  detail::CompensatedSum s;
  for (const auto& c : m.components()) s.add(c.rho * std::exp(-c.f * t));
  return std::max(0.0, 1.0 - s.value());
}

double front_speed(const RateMixture& m, double t) {
  require_finite_time(t);
  detail::CompensatedSum s;
  for (const auto& c : m.components()) s.add(c.f * c.rho * std::exp(-c.f * t));
  return s.value();
}

double front_inverse(const RateMixture& m, double y) {
  if (!(y >= 0.0) || !(y < 1.0) || !std::isfinite(y)) {
    throw std::invalid_argument("front_inverse: y must lie in [0, 1)");
  }
  if (y > 1.0 - kEdgeMargin) {
    throw std::invalid_argument("front_inverse: y too close to 1 (t0 overflows)");
  }
  if (y == 0.0) return 0.0;
  const double limit = 1.0 - m.immobile_mass();
  if (y >= limit) {
    throw std::invalid_argument("front_inverse: front never reaches y = " + std::to_string(y) +
                                " (limit " + std::to_string(limit) + ")");
  }
  // e^{-f_min t} <= (limit - y) suffices for y_C(t) >= y, so this upper
  // bound brackets the root.
  double hi = std::max(1.0, -std::log(limit - y) / m.min_positive_rate());
  for (int guard = 0; front_position(m, hi) < y; ++guard) {
    if (guard > 64) throw convergence_error("front_inverse: failed to bracket");
    hi *= 2.0;
  }
  return detail::solve_monotone(
      [&m](double t) { return std::pair{front_position(m, t), front_speed(m, t)}; },
      0.0, hi, y, kInverseTol, kMaxIter);
}

InitialProfile::InitialProfile(std::vector<double> breakpoints,
                               std::vector<std::vector<Coeffs>> cells)
    : breakpoints_(std::move(breakpoints)), cells_(std::move(cells)) {
  if (breakpoints_.size() < 2 || breakpoints_.front() != 0.0 || breakpoints_.back() != 1.0) {
    throw std::invalid_argument("InitialProfile: breakpoints must run from 0 to 1");
  }
  for (std::size_t k = 1; k < breakpoints_.size(); ++k) {
    if (!(breakpoints_[k] > breakpoints_[k - 1]) || !std::isfinite(breakpoints_[k])) {
      throw std::invalid_argument("InitialProfile: breakpoints must be strictly increasing");
    }
  }
  if (cells_.size() != breakpoints_.size() - 1) {
    throw std::invalid_argument("InitialProfile: need one coefficient row per cell");
  }
  component_count_ = cells_.front().size();
  if (component_count_ == 0) {
    throw std::invalid_argument("InitialProfile: need at least one component");
  }
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    if (cells_[c].size() != component_count_) {
      throw std::invalid_argument("InitialProfile: inconsistent component count in cell " +
                                  std::to_string(c));
    }
    const double lo = breakpoints_[c];
    const double hi = breakpoints_[c + 1];
    Coeffs sum{0.0, 0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < component_count_; ++i) {
      const Coeffs& cf = cells_[c][i];
      for (double v : cf) {
        if (!std::isfinite(v)) {
          throw std::invalid_argument("InitialProfile: non-finite coefficient");
        }
      }
      if (poly_range(cf, lo, hi).first < -1e-12) {
        throw std::invalid_argument("InitialProfile: component " + std::to_string(i) +
                                    " is negative in cell " + std::to_string(c));
      }
      for (int k = 0; k < 4; ++k) sum[k] += cf[k];
    }
    const auto [smin, smax] = poly_range(sum, lo, hi);
    if (smin < 1.0 - kConsistencyTol || smax > 1.0 + kConsistencyTol) {
      throw std::invalid_argument("InitialProfile: densities do not sum to 1 in cell " +
                                  std::to_string(c));
    }
  }
  // Per-component exact cell integrals, accumulated tail-first so that
  // tail_integral needs only one partial cell.
  totals_.assign(component_count_, 0.0);
  suffix_.assign(component_count_, std::vector<double>(cells_.size() + 1, 0.0));
  for (std::size_t i = 0; i < component_count_; ++i) {
    for (std::size_t c = cells_.size(); c-- > 0;) {
      const double cell = poly_antideriv(cells_[c][i], breakpoints_[c + 1]) -
                          poly_antideriv(cells_[c][i], breakpoints_[c]);
      suffix_[i][c] = suffix_[i][c + 1] + cell;
    }
    totals_[i] = suffix_[i][0];
  }
}

InitialProfile InitialProfile::uniform(const RateMixture& m) {
  std::vector<std::vector<Coeffs>> cells(1);
  cells[0].reserve(m.size());
  for (const auto& c : m.components()) {
    cells[0].push_back(Coeffs{c.rho, 0.0, 0.0, 0.0});
  }
  return InitialProfile({0.0, 1.0}, std::move(cells));
}

std::size_t InitialProfile::locate_cell(double y) const {
  const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), y);
  const std::size_t idx = static_cast<std::size_t>(it - breakpoints_.begin());
  return std::min(idx == 0 ? 0 : idx - 1, cells_.size() - 1);
}

double InitialProfile::value(std::size_t i, double y) const {
  if (!(y >= 0.0 && y < 1.0)) {
    throw std::invalid_argument("InitialProfile::value: y must lie in [0, 1)");
  }
  return poly_eval(cells_[locate_cell(y)][i], y);
}

std::vector<double> InitialProfile::values(double y) const {
  if (!(y >= 0.0 && y < 1.0)) {
    throw std::invalid_argument("InitialProfile::values: y must lie in [0, 1)");
  }
  const std::size_t c = locate_cell(y);
  std::vector<double> out(component_count_);
  for (std::size_t i = 0; i < component_count_; ++i) out[i] = poly_eval(cells_[c][i], y);
  return out;
}

double InitialProfile::tail_integral(std::size_t i, double y) const {
  if (!(y >= 0.0 && y <= 1.0)) {
    throw std::invalid_argument("InitialProfile::tail_integral: y must lie in [0, 1]");
  }
  if (y == 1.0) return 0.0;
  const std::size_t c = locate_cell(y);
  const double partial = poly_antideriv(cells_[c][i], breakpoints_[c + 1]) -
                         poly_antideriv(cells_[c][i], y);
  return partial + suffix_[i][c + 1];
}

RateMixture mixture_from_profile(const InitialProfile& p, const std::vector<double>& rates) {
  if (rates.size() != p.component_count()) {
    throw std::invalid_argument("mixture_from_profile: rate count does not match profile");
  }
  std::vector<RateComponent> comps(rates.size());
  for (std::size_t i = 0; i < rates.size(); ++i) {
    comps[i] = RateComponent{rates[i], p.total_integral(i)};
  }
  return RateMixture(std::move(comps));
}

bool consistent(const InitialProfile& p, const RateMixture& m) {
  if (p.component_count() != m.size()) return false;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (std::abs(p.total_integral(i) - m.fraction(i)) > kConsistencyTol) return false;
  }
  return true;
}

void require_consistent(const InitialProfile& p, const RateMixture& m) {
  if (!consistent(p, m)) {
    throw std::invalid_argument("profile/mixture pair is inconsistent: "
                                "profile integrals do not reproduce the mass fractions");
  }
}

double lagrangian_map(const InitialProfile& p, const RateMixture& m, double y, double t) {
  require_consistent(p, m);
  require_finite_time(t);
  if (!(y >= 0.0 && y < 1.0)) {
    throw std::invalid_argument("lagrangian_map: y must lie in [0, 1)");
  }
  detail::CompensatedSum s;
  for (std::size_t j = 0; j < m.size(); ++j) {
    s.add(std::exp(-m.rate(j) * t) * p.tail_integral(j, y));
  }
  return 1.0 - s.value();
}

double lagrangian_inverse(const InitialProfile& p, const RateMixture& m, double y, double t) {
  require_consistent(p, m);
  require_finite_time(t);
  if (!(y < 1.0)) {
    throw std::invalid_argument("lagrangian_inverse: y must lie below 1");
  }
  if (y > 1.0 - kEdgeMargin) {
    throw std::invalid_argument("lagrangian_inverse: y too close to 1");
  }
  const double yc = front_position(m, t);
  if (y < yc) {
    throw std::invalid_argument("lagrangian_inverse: y is behind the front (stationary region)");
  }
  if (y == yc) return 0.0;
  auto eval = [&](double y0) {
    detail::CompensatedSum value, slope;
    for (std::size_t j = 0; j < m.size(); ++j) {
      const double decay = std::exp(-m.rate(j) * t);
      value.add(decay * p.tail_integral(j, y0));
      slope.add(decay * p.value(j, y0));
    }
    return std::pair{1.0 - value.value(), slope.value()};
  };
  return detail::solve_monotone(eval, 0.0, 1.0 - kEdgeMargin, y, kInverseTol, kMaxIter);
}

}  // namespace evaporank
