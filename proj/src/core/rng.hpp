#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace scnn {

// Deterministic random source. The engine is std::mt19937_64, whose output
// sequence is fixed by the standard; conversions to floats and bounded
// integers are done here because the standard distributions are
// implementation-defined.
//
// Substreams: derive(seed, label) mixes a label (string or integer) into a
// parent seed with SplitMix64, so independent parts of a run draw from
// independent, reproducible streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer on [0, n), unbiased (rejection sampling). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t substream);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view substream);

}  // namespace scnn
