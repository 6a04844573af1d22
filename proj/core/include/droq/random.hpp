#pragma once

#include <cstdint>

namespace droq {

// Counter-based random stream. Every draw is a pure function of (key, counter),
// so copying a stream duplicates its future exactly and fork(tag) derives
// child streams without touching the parent.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed = 0);

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  // Uniform on [lo, hi).
  double uniform(double lo, double hi);
  // Standard normal (Box-Muller).
  double normal();
  // Unbiased integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  // Independent child stream identified by tag. Does not advance this stream.
  [[nodiscard]] RandomStream fork(std::uint64_t tag) const;
  // Child stream keyed by the next draw of this stream.
  RandomStream split();

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  friend bool operator==(const RandomStream&, const RandomStream&) = default;

 private:
  RandomStream(std::uint64_t key, std::uint64_t counter, bool) : key_(key), counter_(counter) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace droq
