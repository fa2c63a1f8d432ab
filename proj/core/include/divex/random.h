#ifndef DIVEX_RANDOM_H_
#define DIVEX_RANDOM_H_

#include <cstddef>
#include <cstdint>
#include <random>

namespace divex {

// All randomness in the library draws from std::mt19937_64, whose output
// sequence is fixed by the C++ standard, and converts raw outputs with the
// helpers below (the standard distributions are implementation-defined).
// Child seeds are derived with SplitSeed so that per-instance and
// per-resample streams are independent of evaluation order.
using Rng = std::mt19937_64;

// SplitMix64 finalizer applied to `seed` combined with `stream`.
std::uint64_t SplitSeed(std::uint64_t seed, std::uint64_t stream);

// Uniform double in [0, 1) from the top 53 bits of one draw.
double UniformUnit(Rng& rng);

// Uniform integer in [0, n) by rejection sampling; n must be positive.
std::size_t UniformIndex(Rng& rng, std::size_t n);

// Uniform integer in [lo, hi].
std::size_t UniformInRange(Rng& rng, std::size_t lo, std::size_t hi);

}  // namespace divex

#endif  // DIVEX_RANDOM_H_
