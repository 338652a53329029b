#include <sstream>
#include <stdexcept>
#include <string>

#include <doctest.h>

#include "evaporank/io.hpp"
#include "oracles.hpp"

using namespace evaporank;

TEST_SUITE("io") {

TEST_CASE("shortest round-trip doubles") {
  for (double v : {0.1, 1.0 / 3.0, 3.3425e-4, 1e-300, 12345.0, -2.5}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.25) == "0.25");
  CHECK(format_double(1.0) == "1");
}

TEST_CASE("two-column file becomes one trajectory") {
  std::istringstream in("0.0,1\n1.0,37\n");
  const auto trajs = parse_trajectories(in, "mem");
  REQUIRE(trajs.size() == 1);
  CHECK(trajs[0].label.empty());
  REQUIRE(trajs[0].observations.size() == 2);
  CHECK(trajs[0].observations[1].t == 1.0);
  CHECK(trajs[0].observations[1].rank == 37);
  CHECK_FALSE(trajs[0].offset_unknown);
}

TEST_CASE("rank zero is rejected with its line number") {
  std::istringstream in("0.0,1\n1.0,0\n");
  try {
    parse_trajectories(in, "mem");
    FAIL("expected a parse error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("mem:2") != std::string::npos);
    CHECK(std::string(e.what()).find("rank") != std::string::npos);
  }
}

TEST_CASE("non-monotone times are rejected with line numbers") {
  std::istringstream in("label,t,rank\nx,1.0,5\nx,1.0,6\n");
  try {
    parse_trajectories(in, "mem");
    FAIL("expected a parse error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("mem:3") != std::string::npos);
  }
}

TEST_CASE("bad csv is rejected") {
  std::istringstream in("label,t,rank\nx,notatime,5\n");
  CHECK_THROWS_AS(parse_trajectories(in, "mem"), std::invalid_argument);
  std::istringstream empty("");
  CHECK_THROWS_AS(parse_trajectories(empty, "mem"), std::invalid_argument);
  std::istringstream extra("label,t,rank\nx,1.0,5,9\n");
  CHECK_THROWS_AS(parse_trajectories(extra, "mem"), std::invalid_argument);
}

TEST_CASE("labeled trajectories group in first-appearance order") {
  std::istringstream in(
      "label,t,rank\n"
      "beta,0.0,1\n"
      "alpha,0.5,2\n"
      "beta,1.0,4\n"
      "alpha,1.5,8\n");
  const auto trajs = parse_trajectories(in, "mem");
  REQUIRE(trajs.size() == 2);
  CHECK(trajs[0].label == "beta");
  CHECK(trajs[1].label == "alpha");
  CHECK(trajs[0].observations.size() == 2);
  CHECK(trajs[1].observations.size() == 2);
}

TEST_CASE("jump markers and offset-unknown flags") {
  std::istringstream in(
      "label,t,rank,jump_t\n"
      "thread,14.3,4,14.05\n"
      "thread,15.0,9,\n"
      "book,3.0,12,\n"
      "book,5.0,40,\n");
  const auto trajs = parse_trajectories(in, "mem");
  REQUIRE(trajs.size() == 2);
  CHECK(trajs[0].jump_time.value() == 14.05);
  CHECK_FALSE(trajs[0].offset_unknown);
  CHECK_FALSE(trajs[1].jump_time.has_value());
  CHECK(trajs[1].offset_unknown);
}

TEST_CASE("emit then ingest round-trips byte-identically") {
  std::istringstream in(
      "label,t,rank,jump_t\n"
      "thread,14.3,4,14.05\n"
      "thread,15.0,9,\n"
      "book,3.0,12,\n"
      "book,5.0,40,\n");
  const auto trajs = parse_trajectories(in, "mem");
  std::ostringstream first;
  emit_trajectories(first, trajs);
  std::istringstream again(first.str());
  std::ostringstream second;
  emit_trajectories(second, parse_trajectories(again, "mem"));
  CHECK(first.str() == second.str());

  // plain three-column form round-trips as well
  std::istringstream plain("label,t,rank\na,0.5,3\na,1.25,9\n");
  const auto plain_trajs = parse_trajectories(plain, "mem");
  std::ostringstream out;
  emit_trajectories(out, plain_trajs);
  CHECK(out.str() == "label,t,rank\na,0.5,3\na,1.25,9\n");
}

TEST_CASE("event log round trip with metadata header") {
  std::vector<JumpEvent> events{{0.25, 3, 7}, {0.75, 1, 2}};
  std::ostringstream out;
  write_event_log(out, events, 42);
  CHECK(out.str().rfind("# generator=mt19937_64", 0) == 0);
  std::istringstream in(out.str());
  const auto parsed = read_event_log(in, "mem");
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[0].t == 0.25);
  CHECK(parsed[0].particle == 3);
  CHECK(parsed[1].old_rank == 2);
}

TEST_CASE("mixture json schema") {
  const RateMixture m({{1.5, 0.25}, {0.0, 0.75}});
  const auto j = mixture_to_json(m);
  CHECK(j.dump() == R"({"components":[{"f":1.5,"rho":0.25},{"f":0.0,"rho":0.75}]})");
  const RateMixture back = mixture_from_json(j);
  CHECK(back.size() == 2);
  CHECK(back.rate(0) == 1.5);
  CHECK(back.fraction(1) == 0.75);
  CHECK_THROWS_AS(mixture_from_json(nlohmann::ordered_json::object()), std::invalid_argument);
  CHECK_THROWS_AS(mixture_from_json(nlohmann::ordered_json{{"components", {{{"f", 1.0}}}}}),
                  std::invalid_argument);
}

TEST_CASE("profile json schema") {
  const RateMixture m({{1.0, 0.5}, {0.0, 0.5}});
  const InitialProfile p = InitialProfile::uniform(m);
  const auto j = profile_to_json(p);
  CHECK(j["breakpoints"].size() == 2);
  CHECK(j["cells"].size() == 1);
  CHECK(j["cells"][0].size() == 2);
  CHECK(j["cells"][0][0].size() == 4);
  const InitialProfile back = profile_from_json(j);
  CHECK(back.component_count() == 2);
  CHECK(back.value(0, 0.3) == 0.5);
  // short coefficient lists are zero-padded
  nlohmann::ordered_json shorter = {{"breakpoints", {0.0, 1.0}},
                                    {"cells", {{{0.5}, {0.5}}}}};
  CHECK(profile_from_json(shorter).value(1, 0.9) == 0.5);
}

TEST_CASE("fit result json key order") {
  FitResult r;
  r.a = 3.3425e-4;
  r.b = 0.6145;
  r.population = 795.0;
  r.offsets = {1.5};
  r.chi2 = 383.0;
  r.n_d = 117;
  r.rms = 1.81;
  r.converged = true;
  r.iterations = 23;
  const auto j = fit_result_to_json(r);
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  CHECK(keys == std::vector<std::string>{"a", "b", "N", "offsets", "chi2", "n_d", "rms",
                                         "converged", "iterations"});
}

TEST_CASE("verify report json keys") {
  VerifyReport rep;
  rep.residual_max = 1e-9;
  rep.conservation = {1e-11, 2e-11};
  rep.generator_deviation = 3e-12;
  const auto j = verify_report_to_json(rep);
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  CHECK(keys == std::vector<std::string>{"residual_max", "conservation",
                                         "generator_deviation"});
}

}  // TEST_SUITE
