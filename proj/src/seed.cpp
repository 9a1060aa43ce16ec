#include "modperf/seed.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace modperf {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t tag_hash(std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag, std::uint64_t index) {
    return mix64(mix64(parent ^ tag_hash(tag)) + index * 0x9e3779b97f4a7c15ULL);
}

std::uint64_t derive_seed(std::uint64_t global, std::uint64_t system, std::uint64_t trial,
                          std::string_view stage) {
    return derive_seed(derive_seed(derive_seed(global, "system", system), "trial", trial), stage);
}

double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform_real(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo);
    if (span == ~0ULL) return static_cast<std::int64_t>(rng());
    const std::uint64_t range = span + 1;
    const std::uint64_t limit = ~0ULL - (~0ULL % range);
    std::uint64_t r;
    do {
        r = rng();
    } while (r >= limit);
    return lo + static_cast<std::int64_t>(r % range);
}

bool bernoulli(Rng& rng, double p) {
    return uniform01(rng) < p;
}

double standard_normal(Rng& rng) {
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double truncated_normal(Rng& rng, double mu, double sigma, double lo, double hi,
                        int max_attempts) {
    double x = mu;
    for (int i = 0; i < max_attempts; ++i) {
        x = mu + sigma * standard_normal(rng);
        if (x >= lo && x <= hi) return x;
    }
    return std::clamp(x, lo, hi);
}

}  // namespace modperf
