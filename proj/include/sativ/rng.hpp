#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string_view>

namespace sativ {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based random stream.
///
/// Output i of a stream with key k is mix64(k + (i + 1) * golden), so the
/// stream carries no state beyond (key, counter). `split(j)` derives an
/// independent child key from (key, j); a draw for replication r, group g is
/// therefore reproducible from (root seed, r, g) regardless of the order in
/// which other groups or replications were evaluated.
///
/// All distributions below are implemented here rather than through
/// <random> distributions so that sequences are identical across standard
/// library implementations.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed) : key_(mix64(seed ^ 0x5EED5EED5EED5EEDULL)) {}

  RandomStream split(std::uint64_t index) const;
  /// Child stream keyed by a label; used to separate purposes ("design", "oracle").
  RandomStream split(std::string_view label) const;

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  result_type operator()() { return mix64(key_ + (++counter_) * kGolden); }
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t uniform_index(std::uint64_t bound);
  /// Standard normal via Box-Muller (one variate per two uniforms, no caching).
  double normal();
  /// P(true) = p. p <= 0 never fires, p >= 1 always fires.
  bool bernoulli(double p) { return uniform() < p; }
  /// Index drawn with probability proportional to weights (must sum to > 0).
  std::size_t categorical(std::span<const double> weights);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_index(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  struct FromKey {};
  RandomStream(FromKey, std::uint64_t key) : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace sativ
