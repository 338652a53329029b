#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace evaporank::detail {

// Binary indexed tree over occupancy counts, 1-based. Supports prefix
// counts (rank queries) and select (k-th occupied index), both O(log n).
class FenwickCount {
 public:
  explicit FenwickCount(std::size_t n) : n_(n), tree_(n + 1, 0) {
    top_bit_ = 1;
    while ((top_bit_ << 1) <= n_) top_bit_ <<= 1;
  }

  void add(std::size_t idx, std::int32_t delta) {
    for (; idx <= n_; idx += idx & (~idx + 1)) {
      tree_[idx] = static_cast<std::uint32_t>(static_cast<std::int64_t>(tree_[idx]) + delta);
    }
  }

  // Number of occupied indices in [1, idx].
  std::uint32_t prefix(std::size_t idx) const {
    std::uint32_t sum = 0;
    for (; idx > 0; idx -= idx & (~idx + 1)) sum += tree_[idx];
    return sum;
  }

  // Smallest index whose prefix count equals k (k >= 1).
  std::size_t select(std::uint32_t k) const {
    std::size_t pos = 0;
    for (std::size_t mask = top_bit_; mask != 0; mask >>= 1) {
      const std::size_t next = pos + mask;
      if (next <= n_ && tree_[next] < k) {
        pos = next;
        k -= tree_[next];
      }
    }
    return pos + 1;
  }

 private:
  std::size_t n_;
  std::size_t top_bit_;
  std::vector<std::uint32_t> tree_;
};

// Binary indexed tree over non-negative weights with cumulative sampling:
// sample(u) returns the smallest index whose prefix sum exceeds u. Indices
// with zero weight are never returned.
class FenwickWeight {
 public:
  explicit FenwickWeight(const std::vector<double>& weights)
      : n_(weights.size()), tree_(weights.size() + 1, 0.0) {
    top_bit_ = 1;
    while ((top_bit_ << 1) <= n_) top_bit_ <<= 1;
    for (std::size_t i = 1; i <= n_; ++i) {
      tree_[i] += weights[i - 1];
      const std::size_t parent = i + (i & (~i + 1));
      if (parent <= n_) tree_[parent] += tree_[i];
    }
    total_ = 0.0;
    for (std::size_t i = 0; i < n_; ++i) total_ += weights[i];
  }

  double total() const { return total_; }

  std::size_t sample(double u) const {
    std::size_t pos = 0;
    for (std::size_t mask = top_bit_; mask != 0; mask >>= 1) {
      const std::size_t next = pos + mask;
      if (next <= n_ && tree_[next] <= u) {
        pos = next;
        u -= tree_[next];
      }
    }
    return pos + 1;
  }

 private:
  std::size_t n_;
  std::size_t top_bit_;
  std::vector<double> tree_;
  double total_;
};

}  // namespace evaporank::detail
