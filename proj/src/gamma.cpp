#include "evaporank/gamma.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "evaporank/errors.hpp"

namespace evaporank {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kMaxTerms = 512;

// Modified Lentz evaluation of the standard continued fraction
//   Gamma(s, p) = e^{-p} p^s / (p + 1 - s - 1(1-s)/(p + 3 - s - 2(2-s)/(...)))
// Reliable for p > s + 1.
double upper_cf(double s, double p) {
  const double tiny = 1e-300;
  double b = p + 1.0 - s;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int k = 1; k < kMaxTerms; ++k) {
    const double a = -static_cast<double>(k) * (static_cast<double>(k) - s);
    b += 2.0;
    d = a * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + a / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) {
      return std::exp(s * std::log(p) - p) * h;
    }
  }
  throw convergence_error("upper_incomplete_gamma: continued fraction did not converge");
}

// Lower-incomplete series gamma(s, p) = p^s e^{-p} sum_k p^k / (s (s+1) ... (s+k)),
// subtracted from the complete gamma. Used for p <= s + 1.
double upper_series(double s, double p) {
  double term = 1.0 / s;
  double sum = term;
  for (int k = 1; k < kMaxTerms; ++k) {
    term *= p / (s + static_cast<double>(k));
    sum += term;
    if (term < std::abs(sum) * kEps) {
      return std::tgamma(s) - std::exp(s * std::log(p) - p) * sum;
    }
  }
  throw convergence_error("upper_incomplete_gamma: series did not converge");
}

double upper_positive(double s, double p) {
  return p > s + 1.0 ? upper_cf(s, p) : upper_series(s, p);
}

}  // namespace

double upper_incomplete_gamma(double z, double p) {
  if (!(p > 0.0) || !std::isfinite(p)) {
    throw std::invalid_argument("upper_incomplete_gamma: p must be positive, got " +
                                std::to_string(p));
  }
  if (!(z > -2.0 && z < 2.0)) {
    throw std::invalid_argument("upper_incomplete_gamma: z outside supported range (-2, 2)");
  }
  if (z > 0.0) return upper_positive(z, p);
  if (std::abs(z) < 1e-12 || std::abs(z + 1.0) < 1e-12) {
    throw std::invalid_argument("upper_incomplete_gamma: z too close to a recurrence pivot");
  }
  const int m = static_cast<int>(std::ceil(-z)) + 1;
  double g = upper_positive(z + static_cast<double>(m), p);
  const double lp = std::log(p);
  for (int k = m - 1; k >= 0; --k) {
    const double j = z + static_cast<double>(k);
    g = (g - std::exp(j * lp - p)) / j;
  }
  return g;
}

}  // namespace evaporank
