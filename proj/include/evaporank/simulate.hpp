#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "evaporank/detail/fenwick.hpp"

namespace evaporank {

// Initial arrangement of the queue. by_rate orders by ascending jump rate
// (ties by id), so the least active particle starts at the head.
enum class InitialOrder { uniform_random, by_rate };

struct JumpEvent {
  double t;
  std::uint32_t particle;  // 1-based id
  std::uint32_t old_rank;  // rank held immediately before the jump
};

struct RankingSnapshot {
  std::size_t n = 0;
  std::vector<std::uint32_t> order;  // order[r-1] = particle at rank r
  std::vector<double> rates;
  double clock = 0.0;
};

// Move-to-front queue driven by competing exponentials: the next jump time
// is Exponential(sum w_i) and the jumper is chosen with probability
// w_i / sum w_j. Ranks are maintained as order statistics over a virtual
// key space (each jump takes a fresh key in front of all others), so rank
// queries and moves cost O(log n) instead of O(n) array shifting.
//
// Randomness comes from a single mt19937_64 stream seeded with the given
// value; replica streams should be derived with derive_seed. Identical
// (rates, seed, order) reproduce the event sequence exactly.
class RankingProcess {
 public:
  RankingProcess(std::vector<double> rates, std::uint64_t seed,
                 InitialOrder order = InitialOrder::uniform_random);

  std::size_t size() const { return rates_.size(); }
  double clock() const { return clock_; }
  double total_rate() const { return total_rate_; }
  double next_event_time() const { return pending_; }

  // Moves the clock forward without crossing the pending event.
  void advance_to(double t);

  // Applies the pending jump and schedules the next one.
  JumpEvent apply_next();

  std::uint32_t rank_of(std::uint32_t particle) const;
  RankingSnapshot snapshot() const;

  // Stream k of a base seed (splitmix64 of base + (k+1) * golden gamma).
  static std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

 private:
  double draw_uniform();   // [0, 1)
  double draw_exponential();
  std::uint64_t draw_below(std::uint64_t bound);
  void rebuild_keys();

  std::vector<double> rates_;
  double total_rate_ = 0.0;
  double clock_ = 0.0;
  double pending_ = 0.0;

  detail::FenwickCount keys_;
  detail::FenwickWeight weights_;
  std::vector<std::uint32_t> weight_slot_to_particle_;  // positive-rate subset
  std::vector<std::size_t> particle_key_;
  std::vector<std::uint32_t> key_owner_;
  std::size_t next_front_key_ = 0;

  std::mt19937_64 rng_;
};

struct RunResult {
  RankingSnapshot final_state;
  std::vector<JumpEvent> events;
};

// Simulates the process on [0, horizon] and returns the final state plus
// the full event log. Rejects non-positive rates and empty systems.
RunResult run(const std::vector<double>& rates, double horizon, std::uint64_t seed,
              InitialOrder order = InitialOrder::uniform_random);

struct TrackedTrajectory {
  std::size_t n = 0;            // system size, for relative ranks
  std::uint32_t particle = 0;   // tracked id
  // (time since the episode start, rank). A new episode begins whenever the
  // tracked particle reaches rank 1 (at t = 0 if it starts there, and at
  // each of its jumps), so times restart from 0 within the series.
  std::vector<double> t;
  std::vector<std::uint32_t> rank;
};

// Samples the tracked particle's rank every dt after each of its visits to
// rank 1, until its next jump or the horizon. A particle that never reaches
// rank 1 (e.g. zero rate) is sampled from t = 0 at its initial rank instead.
// Zero rates are permitted here; the total rate must stay positive.
TrackedTrajectory track(const std::vector<double>& rates, double horizon,
                        std::uint64_t seed, double dt, std::uint32_t particle,
                        InitialOrder order = InitialOrder::uniform_random);

// First episode of a trajectory (observations up to the next time restart).
TrackedTrajectory first_episode(const TrackedTrajectory& full);

struct EnsembleFront {
  std::vector<double> t;
  std::vector<double> mean;  // mean relative rank (rank - 1) / n
  std::vector<double> se;    // pointwise standard error; 0 for a single replica
};

// Pointwise mean and standard error of relative rank over replicas sampled
// on one common grid. Mismatched grids are rejected.
EnsembleFront empirical_front(const std::vector<TrackedTrajectory>& histories);

}  // namespace evaporank
