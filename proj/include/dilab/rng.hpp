#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace dilab {

// 64-bit finalizer used both as the SplitMix64 output function and as a
// general seed/stream mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Derives an independent stream seed from a base seed and a stream index.
// Streams with distinct indices are statistically independent for our
// purposes, and the derivation is stable across platforms.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return mix64(base + 0x9E3779B97F4A7C15ULL * (stream + 1));
}

// Counter-based SplitMix64 generator. The state is a plain counter, so the
// sequence is a pure function of (seed, call index): reproducible everywhere,
// cheap to fork, and safe to use from many threads with per-stream instances.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix64(state_);
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1]; used where log(u) must stay finite.
    double uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    // Integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Multiply-shift bounded draw; bias is < 2^-64 * n, irrelevant here.
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Standard normal via Box-Muller, caching the second value of each pair.
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
        const double theta = 6.283185307179586476925286766559 * uniform();
        cached_ = r * std::sin(theta);
        have_cached_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Random sign in {-1, +1}.
    int sign() { return (next_u64() >> 63) ? 1 : -1; }

    // Forks an independent generator; the child stream does not overlap the
    // parent's future output.
    Rng fork(std::uint64_t stream) { return Rng(derive_seed(next_u64(), stream)); }

private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

// In-place Fisher-Yates shuffle.
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(items[i - 1], items[j]);
    }
}

// k distinct indices drawn uniformly from [0, n), in draw order.
inline std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

}  // namespace dilab
