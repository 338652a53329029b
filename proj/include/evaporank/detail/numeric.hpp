#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "evaporank/errors.hpp"

namespace evaporank::detail {

// Neumaier compensated accumulator. Keeps long sums (e.g. 1e5-component
// mixtures) accurate to a few ulp regardless of term count.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Solves eval(x).first == target for a strictly increasing function on
// [lo, hi], where eval returns {value, derivative}. Safeguarded Newton:
// steps leaving the current bracket fall back to bisection. Stops when
// |value - target| <= abs_tol.
template <class Eval>
double solve_monotone(Eval&& eval, double lo, double hi, double target,
                      double abs_tol, int max_iter) {
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < max_iter; ++it) {
    const auto [value, slope] = eval(x);
    const double resid = value - target;
    if (std::abs(resid) <= abs_tol) {
      // One polishing Newton step: snaps the argument to the root even
      // where the map is nearly flat and the residual test alone is loose.
      if (slope > 0.0) {
        const double polished = x - resid / slope;
        if (polished >= lo && polished <= hi) return polished;
      }
      return x;
    }
    if (resid < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    double next = x - resid / slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == x) return x;  // bracket exhausted at machine resolution
    x = next;
  }
  throw convergence_error("solve_monotone: no convergence within iteration cap");
}

// Adaptive Simpson quadrature for a vector-valued integrand. The error
// estimate is the max-norm Richardson difference; accepted panels use the
// extrapolated value. Throws quadrature_error when max_depth is exhausted.
template <class F>
class SimpsonIntegrator {
 public:
  SimpsonIntegrator(F& f, std::size_t dim, int max_depth)
      : f_(f), dim_(dim), max_depth_(max_depth) {}

  std::vector<double> integrate(double a, double b, double tol) {
    const std::vector<double> fa = f_(a);
    const std::vector<double> fb = f_(b);
    const double m = 0.5 * (a + b);
    const std::vector<double> fm = f_(m);
    std::vector<double> out(dim_, 0.0);
    recurse(a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), tol, max_depth_, out);
    return out;
  }

 private:
  std::vector<double> simpson(double a, double b, const std::vector<double>& fa,
                              const std::vector<double>& fm,
                              const std::vector<double>& fb) const {
    std::vector<double> s(dim_);
    const double w = (b - a) / 6.0;
    for (std::size_t i = 0; i < dim_; ++i) s[i] = w * (fa[i] + 4.0 * fm[i] + fb[i]);
    return s;
  }

  void recurse(double a, double b, const std::vector<double>& fa,
               const std::vector<double>& fm, const std::vector<double>& fb,
               const std::vector<double>& whole, double tol, int depth,
               std::vector<double>& out) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const std::vector<double> flm = f_(lm);
    const std::vector<double> frm = f_(rm);
    const std::vector<double> left = simpson(a, m, fa, flm, fm);
    const std::vector<double> right = simpson(m, b, fm, frm, fb);
    double err = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      err = std::max(err, std::abs(left[i] + right[i] - whole[i]));
    }
    if (err <= 15.0 * tol) {
      for (std::size_t i = 0; i < dim_; ++i) {
        out[i] += left[i] + right[i] + (left[i] + right[i] - whole[i]) / 15.0;
      }
      return;
    }
    if (depth <= 0) {
      throw quadrature_error("adaptive Simpson: subdivision depth exhausted");
    }
    recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, out);
    recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, out);
  }

  F& f_;
  std::size_t dim_;
  int max_depth_;
};

template <class F>
std::vector<double> adaptive_simpson(F&& f, double a, double b, std::size_t dim,
                                     double tol, int max_depth = 40) {
  if (!(b > a)) return std::vector<double>(dim, 0.0);
  SimpsonIntegrator<F> integ(f, dim, max_depth);
  return integ.integrate(a, b, tol);
}

}  // namespace evaporank::detail
