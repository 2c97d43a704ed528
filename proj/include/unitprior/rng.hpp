#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace unitprior {

/// Stafford variant 13 finalizer, as used by SplitMix64.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent child key from a parent key and a tag (a counter,
/// a layer index, ...). Keys form a tree; any node can be regenerated
/// without touching its siblings.
constexpr std::uint64_t derive_key(std::uint64_t parent, std::uint64_t tag) noexcept {
  return mix64(parent ^ mix64(tag + 0x9e3779b97f4a7c15ULL));
}

/// SplitMix64 (Steele, Lea & Flood). Satisfies UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

 private:
  std::uint64_t state_;
};

/// Sequential standard-normal draws from one keyed stream.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t key) : engine_(key) {}

  double operator()() { return normal_(engine_); }

 private:
  SplitMix64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// Tags separating the sub-trees of a sample key.
inline constexpr std::uint64_t kInputTag = 0x696e707574ULL;       // "input"
inline constexpr std::uint64_t kWeightsTag = 0x77656967687473ULL;  // "weights"
inline constexpr std::uint64_t kScaleTag = 0x7363616c65ULL;        // "scale"

/// Key of sample `index` under the chunked scheme: chunk c gets
/// derive_key(seed, c), and its j-th sample derive_key(chunk key, j).
constexpr std::uint64_t sample_key(std::uint64_t seed, std::uint64_t chunk_size,
                                   std::uint64_t index) noexcept {
  return derive_key(derive_key(seed, index / chunk_size), index % chunk_size);
}

}  // namespace unitprior
