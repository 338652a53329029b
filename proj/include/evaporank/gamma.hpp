#pragma once

namespace evaporank {

// Upper incomplete gamma Gamma(z, p) = int_p^inf e^{-w} w^{z-1} dw for
// p > 0 and z in (-2, 2).
//
// z > 0 is evaluated directly: a Lentz continued fraction for p > z + 1,
// otherwise the lower-incomplete series against std::tgamma. z <= 0 lifts
// to s = z + ceil(-z) + 1 in [1, 2] and walks the recurrence
// Gamma(z, p) = (Gamma(z+1, p) - p^z e^{-p}) / z back down. The recurrence
// divides by z + k, so z within 1e-12 of {0, -1} is rejected; accuracy
// degrades gradually within ~1e-6 of those pivots.
double upper_incomplete_gamma(double z, double p);

}  // namespace evaporank
