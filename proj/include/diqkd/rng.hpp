#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace diqkd {

// One SplitMix64 step: advances the state and returns a mixed output.
std::uint64_t splitmix64(std::uint64_t& state);

// Derives a substream seed from a root seed and a label path by chained
// SplitMix64 absorption. The same (root, path) always yields the same seed,
// and distinct paths yield independent streams, so repetitions, rounds and
// shuffles can be generated in any order (or concurrently) without changing
// the results.
std::uint64_t derive_seed(std::uint64_t root,
                          std::initializer_list<std::uint64_t> path);

// Stream labels used by the simulator. Kept in one place so the derivation
// scheme is auditable.
namespace stream {
inline constexpr std::uint64_t kRepetition = 1;
inline constexpr std::uint64_t kRound = 2;
inline constexpr std::uint64_t kCascadeShuffle = 3;
inline constexpr std::uint64_t kVerifySeed = 4;
inline constexpr std::uint64_t kHashSeed = 5;
inline constexpr std::uint64_t kSweep = 6;
inline constexpr std::uint64_t kHeatmap = 7;
inline constexpr std::uint64_t kQberProbe = 8;
}  // namespace stream

// xoshiro256++ generator seeded via SplitMix64. Chosen over <random>
// distributions because its output is reproducible bit-for-bit across
// standard library implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform double in [0, 1) with 53 bits of precision.
    double next_double();

    // True with probability p; always consumes exactly one draw.
    bool bernoulli(double p);

    // Uniform integer in [0, n), unbiased (rejection sampling). n >= 1.
    std::uint64_t below(std::uint64_t n);

    // In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::array<std::uint64_t, 4> state_;
};

}  // namespace diqkd
