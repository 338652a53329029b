#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "evaporank/fit.hpp"
#include "evaporank/mixture.hpp"
#include "evaporank/simulate.hpp"
#include "evaporank/trajectory.hpp"

namespace evaporank {

// Shortest decimal representation that round-trips the exact double.
std::string format_double(double value);

// Trajectory CSV. Canonical layout: header `label,t,rank` or
// `label,t,rank,jump_t`; rows grouped by label in first-appearance order;
// a known jump time appears on the first row of its trajectory. When the
// jump_t column is present but empty the trajectory is offset-unknown.
// A headerless two-column `t,rank` file is a single unlabeled trajectory.
// Lines starting with '#' are skipped. Malformed input fails with the
// offending line number.
std::vector<Trajectory> ingest_trajectories(const std::string& path);
std::vector<Trajectory> parse_trajectories(std::istream& in, const std::string& name);
void emit_trajectories(std::ostream& out, const std::vector<Trajectory>& trajectories);

// Jump event log: '#' metadata lines (RNG identity, seed), then
// `t,particle,old_rank` rows.
void write_event_log(std::ostream& out, const std::vector<JumpEvent>& events,
                     std::uint64_t seed);
std::vector<JumpEvent> read_event_log(std::istream& in, const std::string& name);

// Tracked trajectory as two-column `t,rank` CSV.
void write_tracked_csv(std::ostream& out, const TrackedTrajectory& trajectory);

nlohmann::ordered_json mixture_to_json(const RateMixture& m);
RateMixture mixture_from_json(const nlohmann::ordered_json& j);
RateMixture load_mixture(const std::string& path);

nlohmann::ordered_json profile_to_json(const InitialProfile& p);
InitialProfile profile_from_json(const nlohmann::ordered_json& j);
InitialProfile load_profile(const std::string& path);

nlohmann::ordered_json fit_result_to_json(const FitResult& result);

struct VerifyReport {
  double residual_max = 0.0;
  std::vector<double> conservation;
  double generator_deviation = 0.0;
};
nlohmann::ordered_json verify_report_to_json(const VerifyReport& report);

}  // namespace evaporank
