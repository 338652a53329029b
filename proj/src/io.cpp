#include "evaporank/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace evaporank {

namespace {

[[noreturn]] void fail_line(const std::string& name, std::size_t line, const std::string& why) {
  throw std::invalid_argument(name + ":" + std::to_string(line) + ": " + why);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string::size_type start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

bool parse_number(const std::string& s, double& out) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  const auto r = std::from_chars(begin, end, out);
  return r.ec == std::errc() && r.ptr == end;
}

bool parse_integer(const std::string& s, std::int64_t& out) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  const auto r = std::from_chars(begin, end, out);
  return r.ec == std::errc() && r.ptr == end;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

void check_label(const std::string& label) {
  if (label.find_first_of(",\n\r\"") != std::string::npos) {
    throw std::invalid_argument("trajectory label contains CSV delimiters: '" + label + "'");
  }
}

// Integral ranks print as integers; synthetic real-valued ranks keep the
// shortest round-trip form.
std::string format_rank(double rank) {
  if (rank == std::floor(rank) && std::abs(rank) < 9.007199254740992e15) {
    return std::to_string(static_cast<std::int64_t>(rank));
  }
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, rank);
  return std::string(buf, r.ptr);
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, r.ptr);
}

std::vector<Trajectory> parse_trajectories(std::istream& in, const std::string& name) {
  std::vector<Trajectory> out;
  auto find = [&out](const std::string& label) -> Trajectory& {
    for (auto& t : out) {
      if (t.label == label) return t;
    }
    out.push_back(Trajectory{label, {}, std::nullopt, false});
    return out.back();
  };

  std::string line;
  std::size_t lineno = 0;
  bool labeled = false;
  bool has_jump_col = false;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_csv(line);
    if (!header_seen) {
      header_seen = true;
      if (fields[0] == "label") {
        labeled = true;
        if (fields.size() == 4 && fields[3] == "jump_t") {
          has_jump_col = true;
        } else if (fields.size() != 3 || fields[1] != "t" || fields[2] != "rank") {
          fail_line(name, lineno, "expected header label,t,rank[,jump_t]");
        }
        continue;
      }
      if (fields[0] == "t" && fields.size() == 2 && fields[1] == "rank") {
        continue;  // unlabeled two-column header
      }
      // Headerless two-column numeric data.
    }
    double t;
    double rank;
    if (labeled) {
      if (fields.size() != (has_jump_col ? 4u : 3u)) {
        fail_line(name, lineno, "wrong field count");
      }
      if (!parse_number(fields[1], t)) fail_line(name, lineno, "bad time '" + fields[1] + "'");
      if (!parse_number(fields[2], rank)) {
        fail_line(name, lineno, "bad rank '" + fields[2] + "'");
      }
      Trajectory& traj = find(fields[0]);
      if (has_jump_col) {
        if (!fields[3].empty()) {
          double jump;
          if (!parse_number(fields[3], jump)) {
            fail_line(name, lineno, "bad jump time '" + fields[3] + "'");
          }
          if (traj.jump_time && *traj.jump_time != jump) {
            fail_line(name, lineno, "conflicting jump times for '" + traj.label + "'");
          }
          traj.jump_time = jump;
        }
        traj.offset_unknown = !traj.jump_time.has_value();
      }
      if (rank < 1) fail_line(name, lineno, "rank below 1");
      if (!traj.observations.empty() && !(t > traj.observations.back().t)) {
        fail_line(name, lineno, "observation times not strictly increasing in '" +
                                    traj.label + "'");
      }
      traj.observations.push_back(RankObservation{t, rank});
    } else {
      if (fields.size() != 2) fail_line(name, lineno, "expected two columns t,rank");
      if (!parse_number(fields[0], t)) fail_line(name, lineno, "bad time '" + fields[0] + "'");
      if (!parse_number(fields[1], rank)) {
        fail_line(name, lineno, "bad rank '" + fields[1] + "'");
      }
      if (rank < 1) fail_line(name, lineno, "rank below 1");
      Trajectory& traj = find("");
      if (!traj.observations.empty() && !(t > traj.observations.back().t)) {
        fail_line(name, lineno, "observation times not strictly increasing");
      }
      traj.observations.push_back(RankObservation{t, rank});
    }
  }
  if (out.empty()) {
    throw std::invalid_argument(name + ": no trajectory data found");
  }
  for (const auto& traj : out) validate(traj);
  return out;
}

std::vector<Trajectory> ingest_trajectories(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open trajectory file '" + path + "'");
  }
  return parse_trajectories(in, path);
}

void emit_trajectories(std::ostream& out, const std::vector<Trajectory>& trajectories) {
  bool jump_col = false;
  for (const auto& t : trajectories) {
    validate(t);
    check_label(t.label);
    jump_col = jump_col || t.jump_time.has_value() || t.offset_unknown;
  }
  out << (jump_col ? "label,t,rank,jump_t\n" : "label,t,rank\n");
  for (const auto& traj : trajectories) {
    bool first = true;
    for (const auto& obs : traj.observations) {
      out << traj.label << ',' << format_double(obs.t) << ',' << format_rank(obs.rank);
      if (jump_col) {
        out << ',';
        if (first && traj.jump_time) out << format_double(*traj.jump_time);
      }
      out << '\n';
      first = false;
    }
  }
}

void write_event_log(std::ostream& out, const std::vector<JumpEvent>& events,
                     std::uint64_t seed) {
  out << "# generator=mt19937_64 stream=splitmix64 seed=" << seed << "\n";
  out << "t,particle,old_rank\n";
  for (const auto& ev : events) {
    out << format_double(ev.t) << ',' << ev.particle << ',' << ev.old_rank << '\n';
  }
}

std::vector<JumpEvent> read_event_log(std::istream& in, const std::string& name) {
  std::vector<JumpEvent> events;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (line == "t,particle,old_rank") continue;
      fail_line(name, lineno, "expected header t,particle,old_rank");
    }
    const auto fields = split_csv(line);
    if (fields.size() != 3) fail_line(name, lineno, "wrong field count");
    double t;
    std::int64_t particle, rank;
    if (!parse_number(fields[0], t) || !parse_integer(fields[1], particle) ||
        !parse_integer(fields[2], rank) || particle < 1 || rank < 1) {
      fail_line(name, lineno, "malformed event row");
    }
    events.push_back(JumpEvent{t, static_cast<std::uint32_t>(particle),
                               static_cast<std::uint32_t>(rank)});
  }
  return events;
}

void write_tracked_csv(std::ostream& out, const TrackedTrajectory& trajectory) {
  out << "t,rank\n";
  for (std::size_t i = 0; i < trajectory.t.size(); ++i) {
    out << format_double(trajectory.t[i]) << ',' << trajectory.rank[i] << '\n';
  }
}

nlohmann::ordered_json mixture_to_json(const RateMixture& m) {
  nlohmann::ordered_json comps = nlohmann::ordered_json::array();
  for (const auto& c : m.components()) {
    comps.push_back({{"f", c.f}, {"rho", c.rho}});
  }
  return nlohmann::ordered_json{{"components", comps}};
}

RateMixture mixture_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object() || !j.contains("components") || !j["components"].is_array()) {
    throw std::invalid_argument("mixture JSON: expected {\"components\":[...]}");
  }
  std::vector<RateComponent> comps;
  for (const auto& c : j["components"]) {
    if (!c.is_object() || !c.contains("f") || !c.contains("rho")) {
      throw std::invalid_argument("mixture JSON: component needs \"f\" and \"rho\"");
    }
    comps.push_back(RateComponent{c["f"].get<double>(), c["rho"].get<double>()});
  }
  return RateMixture(std::move(comps));
}

RateMixture load_mixture(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open mixture file '" + path + "'");
  nlohmann::ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return mixture_from_json(j);
}

nlohmann::ordered_json profile_to_json(const InitialProfile& p) {
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  for (const auto& cell : p.cells()) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (const auto& coeffs : cell) {
      row.push_back(std::vector<double>(coeffs.begin(), coeffs.end()));
    }
    cells.push_back(row);
  }
  return nlohmann::ordered_json{{"breakpoints", p.breakpoints()}, {"cells", cells}};
}

InitialProfile profile_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object() || !j.contains("breakpoints") || !j.contains("cells")) {
    throw std::invalid_argument("profile JSON: expected {\"breakpoints\":[...],\"cells\":[...]}");
  }
  std::vector<double> breakpoints = j["breakpoints"].get<std::vector<double>>();
  std::vector<std::vector<InitialProfile::Coeffs>> cells;
  for (const auto& cell : j["cells"]) {
    std::vector<InitialProfile::Coeffs> row;
    for (const auto& poly : cell) {
      const auto v = poly.get<std::vector<double>>();
      if (v.empty() || v.size() > 4) {
        throw std::invalid_argument("profile JSON: polynomial needs 1 to 4 coefficients");
      }
      InitialProfile::Coeffs c{0.0, 0.0, 0.0, 0.0};
      for (std::size_t k = 0; k < v.size(); ++k) c[k] = v[k];
      row.push_back(c);
    }
    cells.push_back(std::move(row));
  }
  return InitialProfile(std::move(breakpoints), std::move(cells));
}

InitialProfile load_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open profile file '" + path + "'");
  nlohmann::ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return profile_from_json(j);
}

nlohmann::ordered_json fit_result_to_json(const FitResult& result) {
  nlohmann::ordered_json j;
  j["a"] = result.a;
  j["b"] = result.b;
  j["N"] = result.population;
  j["offsets"] = result.offsets;
  j["chi2"] = result.chi2;
  j["n_d"] = result.n_d;
  j["rms"] = result.rms;
  j["converged"] = result.converged;
  j["iterations"] = result.iterations;
  return j;
}

nlohmann::ordered_json verify_report_to_json(const VerifyReport& report) {
  nlohmann::ordered_json j;
  j["residual_max"] = report.residual_max;
  j["conservation"] = report.conservation;
  j["generator_deviation"] = report.generator_deviation;
  return j;
}

}  // namespace evaporank
