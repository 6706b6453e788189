#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace mcdlab {

namespace detail {

// SplitMix64 finalizer (Steele, Lea & Flood 2014). Bijective on uint64.
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

}  // namespace detail

/// Counter-based pseudo-random stream. A stream is defined entirely by a
/// 64-bit key; output i is mix64(key + (i+1)*gamma), so draws can be
/// reproduced from (key, draw index) alone. Streams split into statistically
/// independent children keyed off the parent key, not the parent's position,
/// so split(i) yields the same child no matter how much the parent has been
/// consumed.
class RngStream {
public:
    RngStream() : RngStream(0) {}
    explicit RngStream(std::uint64_t key) : key_(key), counter_(0) {}

    std::uint64_t key() const noexcept { return key_; }

    std::uint64_t next_u64() noexcept {
        counter_ += 1;
        return detail::mix64(key_ + counter_ * detail::kGamma);
    }

    /// Uniform double in [0, 1), 53 random bits.
    double next_double() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double next_uniform(double lo, double hi) noexcept {
        return lo + (hi - lo) * next_double();
    }

    /// Standard Box-Muller, no spare caching: every normal consumes exactly
    /// two raw draws, so the stream position never depends on call history.
    double next_normal(double mu, double sigma) noexcept {
        const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mu + sigma * r * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// One Bernoulli trial with success probability p (clamped to [0,1]).
    bool next_bernoulli(double p) noexcept {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        return static_cast<double>(next_u64()) < p * 0x1.0p64;
    }

    /// Uniform integer in [0, n). n must be >= 1.
    std::uint64_t next_below(std::uint64_t n) noexcept {
        // Rejection sampling on the top bits; bias-free.
        const std::uint64_t limit = n * (UINT64_MAX / n);
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

    /// Independent child stream. Children with distinct indices, and streams
    /// with distinct keys, do not collide in practice.
    RngStream split(std::uint64_t index) const noexcept {
        return RngStream(detail::mix64(key_ ^ detail::mix64(index + 0x5851f42d4c957f2dULL)));
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_;
};

/// In-place Fisher-Yates shuffle driven by an RngStream.
template <typename T>
void shuffle(std::vector<T>& items, RngStream& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace mcdlab
