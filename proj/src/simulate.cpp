#include "evaporank/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace evaporank {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Key space headroom before a compaction pass; large enough that rebuilds
// are rare even in million-event runs.
std::size_t headroom_for(std::size_t n) { return std::max<std::size_t>(4 * n, 1u << 16); }

void validate_rates(const std::vector<double>& rates, bool allow_zero) {
  if (rates.empty()) {
    throw std::invalid_argument("simulate: zero particles");
  }
  double total = 0.0;
  for (double w : rates) {
    if (!std::isfinite(w) || w < 0.0 || (!allow_zero && w == 0.0)) {
      throw std::invalid_argument(allow_zero
                                      ? "simulate: rates must be finite and >= 0"
                                      : "simulate: rates must be finite and > 0");
    }
    total += w;
  }
  if (!(total > 0.0)) {
    throw std::invalid_argument("simulate: total rate must be positive");
  }
}

}  // namespace

std::uint64_t RankingProcess::derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(base + (stream + 1) * 0x9E3779B97F4A7C15ULL);
}

RankingProcess::RankingProcess(std::vector<double> rates, std::uint64_t seed,
                               InitialOrder order)
    : rates_(std::move(rates)),
      keys_(rates_.empty() ? 1 : rates_.size() + headroom_for(rates_.size())),
      weights_([&] {
        std::vector<double> positive;
        positive.reserve(rates_.size());
        for (double w : rates_) {
          if (w > 0.0) positive.push_back(w);
        }
        return detail::FenwickWeight(positive);
      }()),
      rng_(splitmix64(seed)) {
  validate_rates(rates_, /*allow_zero=*/true);
  const std::size_t n = rates_.size();
  weight_slot_to_particle_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rates_[i] > 0.0) weight_slot_to_particle_.push_back(static_cast<std::uint32_t>(i + 1));
  }
  total_rate_ = weights_.total();

  std::vector<std::uint32_t> initial(n);
  std::iota(initial.begin(), initial.end(), 1u);
  if (order == InitialOrder::uniform_random) {
    for (std::size_t i = n; i > 1; --i) {  // Fisher-Yates with our own stream
      const std::size_t j = static_cast<std::size_t>(draw_below(i));
      std::swap(initial[i - 1], initial[j]);
    }
  } else {
    std::stable_sort(initial.begin(), initial.end(), [this](std::uint32_t a, std::uint32_t b) {
      return rates_[a - 1] < rates_[b - 1];
    });
  }

  const std::size_t headroom = headroom_for(n);
  particle_key_.assign(n + 1, 0);
  key_owner_.assign(n + headroom + 1, 0);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t key = headroom + r + 1;
    particle_key_[initial[r]] = key;
    key_owner_[key] = initial[r];
    keys_.add(key, 1);
  }
  next_front_key_ = headroom;
  pending_ = draw_exponential();
}

double RankingProcess::draw_uniform() {
  return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

double RankingProcess::draw_exponential() {
  return clock_ - std::log(1.0 - draw_uniform()) / total_rate_;
}

std::uint64_t RankingProcess::draw_below(std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng_();
  } while (x >= limit);
  return x % bound;
}

void RankingProcess::advance_to(double t) {
  if (t < clock_ || t > pending_) {
    throw std::invalid_argument("RankingProcess::advance_to: time outside [clock, next event]");
  }
  clock_ = t;
}

JumpEvent RankingProcess::apply_next() {
  clock_ = pending_;
  double u = draw_uniform() * total_rate_;
  u = std::min(u, std::nextafter(weights_.total(), 0.0));
  // FP slack between the clamped draw and the tree's internal partial sums
  // can overshoot the last slot by one; clamp back.
  const std::size_t slot = std::min(weights_.sample(u), weight_slot_to_particle_.size());
  const std::uint32_t particle = weight_slot_to_particle_[slot - 1];

  const std::uint32_t old_rank = rank_of(particle);
  if (old_rank != 1) {
    if (next_front_key_ == 0) rebuild_keys();
    keys_.add(particle_key_[particle], -1);
    key_owner_[particle_key_[particle]] = 0;
    const std::size_t key = next_front_key_--;
    particle_key_[particle] = key;
    key_owner_[key] = particle;
    keys_.add(key, 1);
  }
  const JumpEvent ev{clock_, particle, old_rank};
  pending_ = draw_exponential();
  return ev;
}

std::uint32_t RankingProcess::rank_of(std::uint32_t particle) const {
  if (particle == 0 || particle > rates_.size()) {
    throw std::invalid_argument("RankingProcess::rank_of: particle id out of range");
  }
  return keys_.prefix(particle_key_[particle]);
}

RankingSnapshot RankingProcess::snapshot() const {
  RankingSnapshot s;
  s.n = rates_.size();
  s.rates = rates_;
  s.clock = clock_;
  s.order.resize(s.n);
  for (std::size_t r = 1; r <= s.n; ++r) {
    s.order[r - 1] = key_owner_[keys_.select(static_cast<std::uint32_t>(r))];
  }
  return s;
}

void RankingProcess::rebuild_keys() {
  const std::size_t n = rates_.size();
  const std::size_t headroom = headroom_for(n);
  std::vector<std::uint32_t> by_rank(n);
  for (std::size_t r = 1; r <= n; ++r) {
    by_rank[r - 1] = key_owner_[keys_.select(static_cast<std::uint32_t>(r))];
  }
  keys_ = detail::FenwickCount(n + headroom);
  std::fill(key_owner_.begin(), key_owner_.end(), 0);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t key = headroom + r + 1;
    particle_key_[by_rank[r]] = key;
    key_owner_[key] = by_rank[r];
    keys_.add(key, 1);
  }
  next_front_key_ = headroom;
}

RunResult run(const std::vector<double>& rates, double horizon, std::uint64_t seed,
              InitialOrder order) {
  validate_rates(rates, /*allow_zero=*/false);
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw std::invalid_argument("run: horizon must be positive and finite");
  }
  RankingProcess proc(rates, seed, order);
  RunResult out;
  while (proc.next_event_time() <= horizon) {
    out.events.push_back(proc.apply_next());
  }
  proc.advance_to(horizon);
  out.final_state = proc.snapshot();
  return out;
}

TrackedTrajectory track(const std::vector<double>& rates, double horizon,
                        std::uint64_t seed, double dt, std::uint32_t particle,
                        InitialOrder order) {
  validate_rates(rates, /*allow_zero=*/true);
  if (particle == 0 || particle > rates.size()) {
    throw std::invalid_argument("track: tracked particle id out of range");
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw std::invalid_argument("track: sampling interval must be positive");
  }
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw std::invalid_argument("track: horizon must be positive and finite");
  }

  RankingProcess proc(rates, seed, order);
  TrackedTrajectory out;
  out.n = rates.size();
  out.particle = particle;

  // Fallback record in case the particle never reaches rank 1: unshifted
  // samples from t = 0 starting at its initial rank.
  TrackedTrajectory fallback = out;

  bool episode = proc.rank_of(particle) == 1;
  double episode_start = 0.0;
  std::uint64_t sample_idx = 0;
  bool any_episode = episode;

  auto emit = [&](TrackedTrajectory& dst) {
    dst.t.push_back(static_cast<double>(sample_idx) * dt);
    dst.rank.push_back(proc.rank_of(particle));
    ++sample_idx;
  };
  emit(episode ? out : fallback);

  while (true) {
    const double next_sample = (episode ? episode_start : 0.0) +
                               static_cast<double>(sample_idx) * dt;
    const double next_event = proc.next_event_time();
    if (next_event <= std::min(next_sample, horizon)) {
      const JumpEvent ev = proc.apply_next();
      if (ev.particle == particle) {
        episode = true;
        any_episode = true;
        episode_start = ev.t;
        sample_idx = 0;
        emit(out);  // rank is 1 by construction
      }
      continue;
    }
    if (next_sample > horizon) break;
    proc.advance_to(next_sample);
    emit(episode ? out : fallback);
  }
  return any_episode ? out : fallback;
}

TrackedTrajectory first_episode(const TrackedTrajectory& full) {
  TrackedTrajectory out;
  out.n = full.n;
  out.particle = full.particle;
  for (std::size_t i = 0; i < full.t.size(); ++i) {
    if (i > 0 && full.t[i] <= full.t[i - 1]) break;
    out.t.push_back(full.t[i]);
    out.rank.push_back(full.rank[i]);
  }
  return out;
}

EnsembleFront empirical_front(const std::vector<TrackedTrajectory>& histories) {
  if (histories.empty()) {
    throw std::invalid_argument("empirical_front: need at least one replica");
  }
  const auto& first = histories.front();
  for (const auto& h : histories) {
    if (h.t != first.t || h.n != first.n) {
      throw std::invalid_argument("empirical_front: mismatched sampling grids");
    }
  }
  const std::size_t points = first.t.size();
  const double r = static_cast<double>(histories.size());
  const double n = static_cast<double>(first.n);
  EnsembleFront out;
  out.t = first.t;
  out.mean.assign(points, 0.0);
  out.se.assign(points, 0.0);
  for (const auto& h : histories) {
    for (std::size_t k = 0; k < points; ++k) {
      out.mean[k] += (static_cast<double>(h.rank[k]) - 1.0) / n;
    }
  }
  for (auto& m : out.mean) m /= r;
  if (histories.size() > 1) {
    for (const auto& h : histories) {
      for (std::size_t k = 0; k < points; ++k) {
        const double d = (static_cast<double>(h.rank[k]) - 1.0) / n - out.mean[k];
        out.se[k] += d * d;
      }
    }
    for (auto& s : out.se) s = std::sqrt(s / (r - 1.0)) / std::sqrt(r);
  }
  return out;
}

}  // namespace evaporank
