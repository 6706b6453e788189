#pragma once

#include <cmath>
#include <cstdint>
#include <span>

#include "mcdlab/errors.hpp"

namespace mcdlab {

/// Streaming mean/variance (Welford). Supports exact merging of partial
/// accumulations (Chan et al.), which keeps parallel reductions bit-stable
/// as long as merge order is fixed.
class MomentAccumulator {
public:
    void add(double x) noexcept {
        count_ += 1;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(count_);
        m2_ += delta * (x - mean_);
    }

    void merge(const MomentAccumulator& other) noexcept {
        if (other.count_ == 0) return;
        if (count_ == 0) {
            *this = other;
            return;
        }
        const double na = static_cast<double>(count_);
        const double nb = static_cast<double>(other.count_);
        const double delta = other.mean_ - mean_;
        mean_ += delta * nb / (na + nb);
        m2_ += other.m2_ + delta * delta * na * nb / (na + nb);
        count_ += other.count_;
    }

    std::int64_t count() const noexcept { return count_; }
    double mean() const noexcept { return mean_; }

    /// Unbiased sample variance (n-1 denominator). Requires count >= 2.
    double sample_variance() const {
        if (count_ < 2) throw ValidationError("sample_variance requires at least 2 samples");
        return m2_ / static_cast<double>(count_ - 1);
    }

    /// Population variance (n denominator).
    double population_variance() const {
        if (count_ < 1) throw ValidationError("population_variance requires at least 1 sample");
        return m2_ / static_cast<double>(count_);
    }

private:
    std::int64_t count_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

/// Compensated (Kahan) summation.
class KahanSum {
public:
    void add(double x) noexcept {
        const double y = x - c_;
        const double t = s_ + y;
        c_ = (t - s_) - y;
        s_ = t;
    }
    double value() const noexcept { return s_; }

private:
    double s_ = 0.0;
    double c_ = 0.0;
};

inline double mean_of(std::span<const double> xs) {
    if (xs.empty()) throw ValidationError("mean_of: empty input");
    KahanSum s;
    for (double x : xs) s.add(x);
    return s.value() / static_cast<double>(xs.size());
}

inline double sample_std(std::span<const double> xs) {
    MomentAccumulator acc;
    for (double x : xs) acc.add(x);
    return std::sqrt(acc.sample_variance());
}

inline double population_std(std::span<const double> xs) {
    MomentAccumulator acc;
    for (double x : xs) acc.add(x);
    return std::sqrt(acc.population_variance());
}

/// Pearson correlation coefficient of two equal-length series.
inline double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2)
        throw ValidationError("pearson: need two equal-length series with >= 2 points");
    const double ma = mean_of(a);
    const double mb = mean_of(b);
    KahanSum sab, saa, sbb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab.add(da * db);
        saa.add(da * da);
        sbb.add(db * db);
    }
    const double denom = std::sqrt(saa.value() * sbb.value());
    if (denom == 0.0) throw NumericError("pearson: zero variance series");
    return sab.value() / denom;
}

/// Standardized sample skewness m3 / m2^(3/2).
inline double sample_skewness(std::span<const double> xs) {
    if (xs.size() < 3) throw ValidationError("sample_skewness: need >= 3 points");
    const double m = mean_of(xs);
    KahanSum s2, s3;
    for (double x : xs) {
        const double d = x - m;
        s2.add(d * d);
        s3.add(d * d * d);
    }
    const double n = static_cast<double>(xs.size());
    const double m2 = s2.value() / n;
    if (m2 == 0.0) throw NumericError("sample_skewness: zero variance");
    return (s3.value() / n) / std::pow(m2, 1.5);
}

}  // namespace mcdlab
