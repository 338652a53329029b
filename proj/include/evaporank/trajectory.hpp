#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace evaporank {

struct RankObservation {
  double t = 0.0;   // hours
  double rank = 1;  // >= 1; integral in observed data, real in synthetic fixtures
};

// One item's observed rank history. jump_time marks the known instant the
// item last reached rank 1 (2ch-style data records it); offset_unknown
// declares that the instant was not observable (Amazon-style data) and the
// offset becomes a fit parameter.
struct Trajectory {
  std::string label;
  std::vector<RankObservation> observations;
  std::optional<double> jump_time;
  bool offset_unknown = false;
};

// Throws std::invalid_argument when observation times are not strictly
// increasing or a rank is below 1.
void validate(const Trajectory& trajectory);

}  // namespace evaporank
