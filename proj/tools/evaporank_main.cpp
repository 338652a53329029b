// Command-line surface: closed-form mixture/front evaluation, Pareto rank
// curves, move-to-front simulation, trajectory fitting and solution
// verification. Exit codes: 0 success, 1 validation failure, 2 numerical
// non-convergence.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evaporank/errors.hpp"
#include "evaporank/fit.hpp"
#include "evaporank/gamma.hpp"
#include "evaporank/io.hpp"
#include "evaporank/mixture.hpp"
#include "evaporank/pareto.hpp"
#include "evaporank/simulate.hpp"
#include "evaporank/solution.hpp"

namespace {

using namespace evaporank;

// Writes to the path when given, otherwise to stdout.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw std::invalid_argument("cannot open output file '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::vector<double> parse_grid(const std::string& spec) {
  // Either "lo:hi:count" or a comma-separated list.
  const auto c1 = spec.find(':');
  std::vector<double> out;
  if (c1 != std::string::npos) {
    const auto c2 = spec.find(':', c1 + 1);
    if (c2 == std::string::npos) {
      throw std::invalid_argument("grid spec must be lo:hi:count or v1,v2,...");
    }
    const double lo = std::stod(spec.substr(0, c1));
    const double hi = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
    const int count = std::stoi(spec.substr(c2 + 1));
    if (count < 1) throw std::invalid_argument("grid count must be >= 1");
    for (int i = 0; i < count; ++i) {
      out.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
    }
    return out;
  }
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  if (out.empty()) throw std::invalid_argument("empty grid spec");
  return out;
}

std::vector<double> read_rates_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open rates file '" + path + "'");
  std::vector<double> rates;
  double w;
  while (in >> w) rates.push_back(w);
  if (rates.empty()) throw std::invalid_argument("rates file '" + path + "' is empty");
  return rates;
}

struct ParetoOpts {
  double population = 0.0;
  double min_rate = 0.0;
  double exponent = 0.0;
  bool given() const { return population > 0.0 || min_rate > 0.0 || exponent > 0.0; }
  ParetoParams params() const { return ParetoParams(population, min_rate, exponent); }
};

void add_pareto_opts(CLI::App* cmd, ParetoOpts& o, bool required) {
  auto* n = cmd->add_option("--N", o.population, "Pareto population size");
  auto* a = cmd->add_option("--a", o.min_rate, "Pareto minimum rate (per hour)");
  auto* b = cmd->add_option("--b", o.exponent, "Pareto exponent");
  if (required) {
    n->required();
    a->required();
    b->required();
  }
}

int cmd_front(const ParetoOpts& pareto, const std::string& mixture_path, double t_max,
              double dt, const std::string& out_path) {
  Output out(out_path);
  if (!(dt > 0.0) || !(t_max >= 0.0)) {
    throw std::invalid_argument("front: need t-max >= 0 and dt > 0");
  }
  if (!mixture_path.empty() && pareto.given()) {
    throw std::invalid_argument("front: --mixture conflicts with --N/--a/--b");
  }
  if (mixture_path.empty() && !pareto.given()) {
    throw std::invalid_argument("front: give --mixture or all of --N/--a/--b");
  }
  const auto steps = static_cast<std::size_t>(t_max / dt + 1e-9);
  if (!mixture_path.empty()) {
    const RateMixture m = load_mixture(mixture_path);
    out.stream() << "t,y_C\n";
    for (std::size_t i = 0; i <= steps; ++i) {
      const double t = static_cast<double>(i) * dt;
      out.stream() << format_double(t) << ',' << format_double(front_position(m, t)) << '\n';
    }
    return 0;
  }
  const ParetoParams p = pareto.params();
  relative_front_pareto(p, 0.0);  // reject unsupported exponents before emitting
  out.stream() << "t,y_C,x_C\n";
  for (std::size_t i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) * dt;
    const double y = relative_front_pareto(p, t);
    out.stream() << format_double(t) << ',' << format_double(y) << ','
                 << format_double(1.0 + p.population() * y) << '\n';
  }
  return 0;
}

int cmd_evaluate(const std::string& mixture_path, const std::string& profile_path,
                 const std::string& y_spec, const std::string& t_spec,
                 const std::string& out_path) {
  const SolutionField field(load_mixture(mixture_path), load_profile(profile_path));
  const std::vector<double> ys = parse_grid(y_spec);
  const std::vector<double> ts = parse_grid(t_spec);
  Output out(out_path);
  out.stream() << "y,t,branch,v";
  for (std::size_t i = 1; i <= field.component_count(); ++i) out.stream() << ",u" << i;
  out.stream() << '\n';
  for (double t : ts) {
    for (double y : ys) {
      const StateSample s = sample_state(field, y, t);
      out.stream() << format_double(y) << ',' << format_double(t) << ',' << to_string(s.branch)
                   << ',' << format_double(s.v);
      for (double ui : s.u) out.stream() << ',' << format_double(ui);
      out.stream() << '\n';
    }
  }
  return 0;
}

int cmd_simulate(const ParetoOpts& pareto, const std::string& rates_path, double horizon,
                 std::uint64_t seed, const std::string& order_name,
                 const std::string& events_path, std::uint32_t tracked, double dt,
                 const std::string& track_path) {
  std::vector<double> rates;
  if (!rates_path.empty() && pareto.given()) {
    throw std::invalid_argument("simulate: --rates conflicts with --N/--a/--b");
  }
  if (!rates_path.empty()) {
    rates = read_rates_file(rates_path);
  } else if (pareto.given()) {
    const RateMixture m = pareto_rates(pareto.params());
    rates.reserve(m.size());
    for (const auto& c : m.components()) rates.push_back(c.f);
  } else {
    throw std::invalid_argument("simulate: give --rates or Pareto --N/--a/--b");
  }
  const InitialOrder order = order_name == "by-rate" ? InitialOrder::by_rate
                                                     : InitialOrder::uniform_random;
  if (order_name != "by-rate" && order_name != "uniform-random") {
    throw std::invalid_argument("simulate: --order must be uniform-random or by-rate");
  }
  const RunResult result = run(rates, horizon, seed, order);
  {
    Output out(events_path);
    write_event_log(out.stream(), result.events, seed);
  }
  if (tracked > 0) {
    if (!(dt > 0.0)) throw std::invalid_argument("simulate: --track needs --dt > 0");
    const TrackedTrajectory traj = track(rates, horizon, seed, dt, tracked, order);
    Output out(track_path);
    write_tracked_csv(out.stream(), traj);
  }
  std::cerr << "simulated " << result.events.size() << " events over horizon "
            << format_double(horizon) << "\n";
  return 0;
}

std::pair<double, double> parse_interval(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) {
    throw std::invalid_argument("interval must be lo:hi, got '" + spec + "'");
  }
  return {std::stod(spec.substr(0, colon)), std::stod(spec.substr(colon + 1))};
}

int cmd_fit(const std::string& data_path, double fixed_n, bool free_n, double a0, double b0,
            double n0, double b_min, double b_max, bool align, bool unknown_offsets,
            const std::vector<std::string>& exclude, const std::string& out_path) {
  std::vector<Trajectory> trajectories = ingest_trajectories(data_path);
  if (unknown_offsets) {
    for (auto& t : trajectories) {
      if (!t.jump_time) t.offset_unknown = true;
    }
  }
  if (align) trajectories = time_shift_align(std::move(trajectories));
  FitProblem problem;
  problem.trajectories = std::move(trajectories);
  for (const auto& spec : exclude) {
    problem.exclude_time_ranges.push_back(parse_interval(spec));
  }
  if (free_n) {
    problem.mode = PopulationMode::free;
    problem.population_guess = n0;
  } else {
    if (!(fixed_n >= 2.0)) {
      throw std::invalid_argument("fit: give --fix-N <value> (>= 2) or --free-N");
    }
    problem.mode = PopulationMode::fixed;
    problem.fixed_population = fixed_n;
  }
  problem.a_guess = a0;
  problem.b_guess = b0;
  problem.b_min = b_min;
  problem.b_max = b_max;
  const FitResult result = fit(problem);
  Output out(out_path);
  out.stream() << fit_result_to_json(result).dump(2) << '\n';
  if (!result.converged) {
    std::cerr << "fit did not converge within the iteration cap\n";
    return 2;
  }
  return 0;
}

int cmd_verify(const std::string& mixture_path, const std::string& profile_path, double h,
               const std::string& t_spec, double quad_tol, double ode_horizon, double ode_tol,
               const std::string& out_path) {
  const SolutionField field(load_mixture(mixture_path), load_profile(profile_path));
  const std::vector<double> ts = parse_grid(t_spec);
  VerifyReport report;
  const double margin = std::max(20.0 * h, 1e-3);
  for (double t : ts) {
    for (Branch branch : {Branch::stationary, Branch::wave}) {
      VerifyGrid grid;
      grid.t = {t};
      grid.y = residual_grid(field, t, branch, 50, margin);
      if (grid.y.empty()) continue;
      report.residual_max = std::max(report.residual_max, pde_residual_max(field, grid, h));
    }
    const auto dev = conservation_deviation(field, t, quad_tol);
    if (report.conservation.empty()) {
      report.conservation = dev;
    } else {
      for (std::size_t i = 0; i < dev.size(); ++i) {
        report.conservation[i] = std::max(report.conservation[i], dev[i]);
      }
    }
  }
  report.generator_deviation = generator_ode_deviation(field.mixture(), ode_horizon, ode_tol);
  Output out(out_path);
  out.stream() << verify_report_to_json(report).dump(2) << '\n';
  return 0;
}

int cmd_pareto_check(const ParetoOpts& pareto, const std::string& out_path) {
  const ParetoParams p = pareto.params();

  // Recurrence identity of the incomplete gamma across the orders the
  // front formulas use.
  double recurrence_rel = 0.0;
  for (double z : {-p.exponent(), 1.0 - p.exponent(), 0.5 - p.exponent() / 2.0}) {
    if (z <= -1.0 || z + 1.0 >= 2.0) continue;
    for (double q : {1e-4, 1e-2, 0.5, 1.0, 5.0, 20.0}) {
      const double lhs = upper_incomplete_gamma(z + 1.0, q);
      const double rhs = z * upper_incomplete_gamma(z, q) + std::pow(q, z) * std::exp(-q);
      recurrence_rel = std::max(recurrence_rel, std::abs(lhs - rhs) / std::abs(lhs));
    }
  }

  // The pre- and post-partial-integration front forms must agree.
  double form_rel = 0.0;
  if (p.exponent() < 1.0) {
    for (double q = 1e-6; q <= 10.0; q *= 10.0) {
      const double t = q / p.min_rate();
      const double direct =
          1.0 - p.exponent() * std::pow(q, p.exponent()) *
                    upper_incomplete_gamma(-p.exponent(), q);
      const double value = relative_front_pareto(p, t);
      form_rel = std::max(form_rel, std::abs(direct - value) / std::abs(value));
    }
  }

  // Continuum front against the explicit N-term sum, in rank units.
  double rank_gap = 0.0;
  const RateMixture rates = pareto_rates(p);
  for (double q = 1e-3; q <= 2.0; q *= 1.5) {
    const double t = q / p.min_rate();
    const double gap = p.population() *
                       std::abs(relative_front_pareto(p, t) - front_position(rates, t));
    rank_gap = std::max(rank_gap, gap);
  }

  nlohmann::ordered_json j;
  j["gamma_recurrence_max_rel"] = recurrence_rel;
  j["front_forms_max_rel"] = form_rel;
  j["rank_gap_max"] = rank_gap;
  Output out(out_path);
  out.stream() << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evaporation-driven mixture fronts and move-to-front ranking dynamics"};
  app.require_subcommand(1);
  app.fallthrough();  // --out may appear after the subcommand

  std::string out_path;
  app.add_option("--out", out_path, "output file (default stdout)")->capture_default_str();

  // front
  auto* front = app.add_subcommand("front", "emit y_C / x_C curve as CSV");
  ParetoOpts front_pareto;
  add_pareto_opts(front, front_pareto, false);
  std::string front_mixture;
  double t_max = 0.0, dt_front = 0.0;
  front->add_option("--mixture", front_mixture, "mixture JSON (instead of --N/--a/--b)")
      ->check(CLI::ExistingFile);
  front->add_option("--t-max", t_max, "last time on the grid")->required();
  front->add_option("--dt", dt_front, "grid spacing")->required();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "sample densities and velocity on a grid");
  std::string eval_mixture, eval_profile, y_spec, t_spec;
  evaluate->add_option("--mixture", eval_mixture, "mixture JSON")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--profile", eval_profile, "initial profile JSON")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--y", y_spec, "y grid: lo:hi:count or list")->required();
  evaluate->add_option("--t", t_spec, "t grid: lo:hi:count or list")->required();

  // simulate
  auto* simulate = app.add_subcommand("simulate", "run the move-to-front process");
  ParetoOpts sim_pareto;
  add_pareto_opts(simulate, sim_pareto, false);
  std::string rates_path, order_name = "uniform-random", events_path, track_path;
  double horizon = 0.0, dt_track = 0.0;
  std::uint64_t seed = 1;
  std::uint32_t tracked = 0;
  simulate->add_option("--rates", rates_path, "file with one jump rate per line")
      ->check(CLI::ExistingFile);
  simulate->add_option("--horizon", horizon, "simulation horizon (hours)")->required();
  simulate->add_option("--seed", seed, "RNG seed")->capture_default_str();
  simulate->add_option("--order", order_name, "initial order: uniform-random | by-rate")
      ->capture_default_str();
  simulate->add_option("--events-out", events_path, "event log CSV (default stdout)");
  simulate->add_option("--track", tracked, "particle id to track");
  simulate->add_option("--dt", dt_track, "tracking sample interval");
  simulate->add_option("--track-out", track_path, "tracked trajectory CSV");

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "least-squares fit of rank trajectories");
  std::string data_path;
  double fixed_n = 0.0, a0 = 1e-3, b0 = 0.5, n0 = 0.0;
  double b_min = 1e-6, b_max = 1.0 - 1e-9;
  bool free_n = false, align = false, unknown_offsets = false;
  std::vector<std::string> exclude;
  fit_cmd->add_option("--data", data_path, "trajectory CSV")
      ->required()
      ->check(CLI::ExistingFile);
  fit_cmd->add_option("--fix-N", fixed_n, "fit with fixed population N");
  fit_cmd->add_flag("--free-N", free_n, "fit N as a free parameter");
  fit_cmd->add_option("--a0", a0, "initial guess for a")->capture_default_str();
  fit_cmd->add_option("--b0", b0, "initial guess for b")->capture_default_str();
  fit_cmd->add_option("--N0", n0, "initial guess for N (free-N mode)");
  fit_cmd->add_option("--b-min", b_min, "lower bound for b")->capture_default_str();
  fit_cmd->add_option("--b-max", b_max, "upper bound for b")->capture_default_str();
  fit_cmd->add_flag("--align", align, "re-zero trajectories at their jump markers");
  fit_cmd->add_flag("--unknown-offsets", unknown_offsets,
                    "treat unmarked trajectories as offset-unknown");
  fit_cmd->add_option("--exclude", exclude,
                      "time interval lo:hi to mask out (repeatable)");

  // verify
  auto* verify = app.add_subcommand("verify", "residual/conservation/generator report");
  std::string ver_mixture, ver_profile, ver_t = "0.3,1.0";
  double h = 1e-4, quad_tol = 1e-9, ode_horizon = 10.0, ode_tol = 1e-10;
  verify->add_option("--mixture", ver_mixture, "mixture JSON")
      ->required()
      ->check(CLI::ExistingFile);
  verify->add_option("--profile", ver_profile, "initial profile JSON")
      ->required()
      ->check(CLI::ExistingFile);
  verify->add_option("--step", h, "finite-difference step")->capture_default_str();
  verify->add_option("--t", ver_t, "times to verify at")->capture_default_str();
  verify->add_option("--quad-tol", quad_tol, "conservation quadrature tolerance")
      ->capture_default_str();
  verify->add_option("--ode-horizon", ode_horizon, "generator ODE horizon")
      ->capture_default_str();
  verify->add_option("--ode-tol", ode_tol, "generator ODE tolerance")->capture_default_str();

  // pareto-check
  auto* pcheck = app.add_subcommand("pareto-check", "gamma identities and continuum gap");
  ParetoOpts check_pareto;
  add_pareto_opts(pcheck, check_pareto, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints the message / help text
    return code == 0 ? 0 : 1;     // usage problems are validation failures
  }

  try {
    if (front->parsed()) return cmd_front(front_pareto, front_mixture, t_max, dt_front, out_path);
    if (evaluate->parsed()) {
      return cmd_evaluate(eval_mixture, eval_profile, y_spec, t_spec, out_path);
    }
    if (simulate->parsed()) {
      return cmd_simulate(sim_pareto, rates_path, horizon, seed, order_name,
                          events_path.empty() ? out_path : events_path, tracked, dt_track,
                          track_path);
    }
    if (fit_cmd->parsed()) {
      return cmd_fit(data_path, fixed_n, free_n, a0, b0, n0, b_min, b_max, align,
                     unknown_offsets, exclude, out_path);
    }
    if (verify->parsed()) {
      return cmd_verify(ver_mixture, ver_profile, h, ver_t, quad_tol, ode_horizon, ode_tol,
                        out_path);
    }
    if (pcheck->parsed()) return cmd_pareto_check(check_pareto, out_path);
  } catch (const convergence_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const quadrature_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
