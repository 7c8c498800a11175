#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace nsgms {

// SplitMix64 output function.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

// Derives a stream key from a master seed and a path of integer ids, e.g.
// (seed, block, column). Distinct paths give statistically independent keys.
constexpr std::uint64_t derive_key(std::uint64_t seed,
                                   std::initializer_list<std::uint64_t> ids) noexcept {
    std::uint64_t k = mix64(seed ^ 0x6A09E667F3BCC908ULL);
    for (std::uint64_t id : ids) k = mix64(k ^ mix64(id + kGoldenGamma));
    return k;
}

// Counter-based generator: the n-th draw is mix64(key + n * gamma), i.e. a
// SplitMix64 stream started at `key`. Cheap to construct, so one stream per
// (block, column) or per Monte Carlo trial is affordable.
//
// Normal variates use the Marsaglia polar method; the second variate of each
// accepted pair is cached. The output sequence is a pure function of the key.
class KeyedRng {
public:
    explicit constexpr KeyedRng(std::uint64_t key) noexcept : key_(key) {}

    std::uint64_t next_u64() noexcept { return mix64(key_ + (++counter_) * kGoldenGamma); }

    // uniform in [0, 1)
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n), Lemire's multiply-shift with rejection
    std::uint64_t uniform_index(std::uint64_t n) noexcept {
        std::uint64_t x = next_u64();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                x = next_u64();
                m = static_cast<__uint128_t>(x) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace nsgms
