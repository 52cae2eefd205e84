#pragma once

#include <cstdint>
#include <random>

namespace wafer {

using Rng = std::mt19937_64;

// splitmix64 finalizer; derives independent child seeds from (seed, ids...).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                       std::uint64_t c = 0);

// Uniform double in [lo, hi) built from raw engine output so that values do
// not depend on the standard library's distribution implementation.
double uniform(Rng& rng, double lo, double hi);
int uniform_int(Rng& rng, int lo, int hi);  // inclusive bounds
double normal(Rng& rng, double mean, double stddev);

}  // namespace wafer
