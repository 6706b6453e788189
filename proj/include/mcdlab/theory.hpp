#pragma once

#include <cmath>
#include <span>
#include <string>

#include "mcdlab/errors.hpp"
#include "mcdlab/stats.hpp"

namespace mcdlab {

/// The analytically solvable model: K parallel weights behind one dropout
/// layer, all feeding a single output, trained towards a constant target
/// whose mean is y_bar.
struct SingleLayerSpec {
    int units = 1;          // K
    double drop_rate = 0.5; // P(unit dropped)
    double y_bar = 0.0;     // mean of the ground truth

    double keep_prob() const noexcept { return 1.0 - drop_rate; }

    void validate() const {
        if (units < 1) throw ValidationError("single-layer spec: units must be >= 1");
        if (!(drop_rate >= 0.0 && drop_rate < 1.0))
            throw ValidationError("single-layer spec: drop rate must lie in [0, 1)");
    }
};

/// Closed-form optimum and the predictive moments it induces.
struct TheoryPrediction {
    double w_opt = 0.0;
    double mean_f = 0.0;
    double var_f = 0.0;
};

/// Predictive moments of f = sum_k d_k w for a common weight w: the masked
/// sum is w * Binomial(K, keep), so E[f] = wKp and Var[f] = w^2 Kp(1-p).
inline double mean_at_weight(const SingleLayerSpec& spec, double w) {
    spec.validate();
    return w * spec.units * spec.keep_prob();
}

inline double variance_at_weight(const SingleLayerSpec& spec, double w) {
    spec.validate();
    const double p = spec.keep_prob();
    return w * w * spec.units * p * (1.0 - p);
}

/// The MSE-optimal common weight, y_bar / (Kp - p + 1).
inline double optimal_weight(const SingleLayerSpec& spec) {
    spec.validate();
    const double p = spec.keep_prob();
    return spec.y_bar / (spec.units * p - p + 1.0);
}

/// Moments at the optimum.
inline TheoryPrediction predict_moments(const SingleLayerSpec& spec) {
    const double w = optimal_weight(spec);
    return TheoryPrediction{w, mean_at_weight(spec, w), variance_at_weight(spec, w)};
}

/// Expected squared error at a common weight w:
/// w^2 Kp(Kp - p + 1) - 2 y_bar w Kp + y_bar^2.
inline double expected_mse(const SingleLayerSpec& spec, double w) {
    spec.validate();
    const double p = spec.keep_prob();
    const double kp = spec.units * p;
    return w * w * kp * (kp - p + 1.0) - 2.0 * spec.y_bar * w * kp + spec.y_bar * spec.y_bar;
}

/// d/dw of expected_mse: 2wKp(Kp - p + 1) - 2 y_bar Kp. Zero at the optimum.
inline double mse_derivative(const SingleLayerSpec& spec, double w) {
    spec.validate();
    const double p = spec.keep_prob();
    const double kp = spec.units * p;
    return 2.0 * w * kp * (kp - p + 1.0) - 2.0 * spec.y_bar * kp;
}

inline constexpr int kEnumerationMaxUnits = 20;

struct EnumeratedMoments {
    double mean = 0.0;
    double variance = 0.0;
};

/// Exact output moments by summing over all 2^K dropout masks, for arbitrary
/// (not necessarily equal) weights. Independent route used to validate the
/// closed forms; capped at K=20 to keep the term count near 10^6.
inline EnumeratedMoments enumerate_moments(double drop_rate, std::span<const double> weights) {
    const int k = static_cast<int>(weights.size());
    if (k < 1) throw ValidationError("enumerate_moments: need at least one weight");
    if (k > kEnumerationMaxUnits)
        throw ValidationError("enumerate_moments: K = " + std::to_string(k) +
                              " exceeds the enumeration bound of " +
                              std::to_string(kEnumerationMaxUnits));
    if (!(drop_rate >= 0.0 && drop_rate < 1.0))
        throw ValidationError("enumerate_moments: drop rate must lie in [0, 1)");

    const double keep = 1.0 - drop_rate;
    KahanSum mean_sum, sq_sum;
    const std::uint64_t total = std::uint64_t{1} << k;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
        double prob = 1.0;
        double f = 0.0;
        for (int i = 0; i < k; ++i) {
            if (mask & (std::uint64_t{1} << i)) {
                prob *= keep;
                f += weights[i];
            } else {
                prob *= drop_rate;
            }
        }
        mean_sum.add(prob * f);
        sq_sum.add(prob * f * f);
    }
    const double mean = mean_sum.value();
    return EnumeratedMoments{mean, sq_sum.value() - mean * mean};
}

}  // namespace mcdlab
