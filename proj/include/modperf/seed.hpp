#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace modperf {

/// 64-bit engine used everywhere a seeded stream is needed.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t x);

/// FNV-1a over the bytes of a stage tag.
std::uint64_t tag_hash(std::string_view tag);

/// Child seed for a named sub-stream of `parent` with an index.
///
/// All seeds in the workbench are derived by chaining this function, so a
/// run is a pure function of its global seed. The mix is
/// `mix64(mix64(parent ^ tag_hash(tag)) + index * golden)`.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag, std::uint64_t index = 0);

/// Seed for (system, trial, stage) under a global experiment seed.
std::uint64_t derive_seed(std::uint64_t global, std::uint64_t system, std::uint64_t trial,
                          std::string_view stage);

// Distribution helpers with a fixed, library-independent mapping from engine
// output to values, so streams are identical across standard libraries.

/// Uniform in [0, 1) with 53 random bits.
double uniform01(Rng& rng);
double uniform_real(Rng& rng, double lo, double hi);
/// Uniform integer in [lo, hi] (inclusive), rejection sampled.
std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi);
bool bernoulli(Rng& rng, double p);
/// Standard normal via Box-Muller (one value per call).
double standard_normal(Rng& rng);
/// Normal(mu, sigma) truncated to [lo, hi]: rejection sampling with `max_attempts`
/// tries, then the last draw clamped into the interval.
double truncated_normal(Rng& rng, double mu, double sigma, double lo, double hi,
                        int max_attempts = 10000);

/// Fisher-Yates shuffle driven by `uniform_int`.
template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        auto j = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i) - 1));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace modperf
