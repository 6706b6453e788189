#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

#include "mcdlab/dropout.hpp"
#include "mcdlab/errors.hpp"
#include "mcdlab/network.hpp"
#include "mcdlab/stats.hpp"

namespace mcdlab {

/// Monte-Carlo estimate of the predictive distribution at one input point.
struct McPoint {
    double x = std::numeric_limits<double>::quiet_NaN();  // meaningful for scalar-input grids
    double sample_mean = 0.0;
    double sample_variance = 0.0;  // unbiased, S-1 denominator

    double sigma() const noexcept { return std::sqrt(sample_variance); }
    double band(int k) const noexcept { return k * sigma(); }
};

struct MCResult {
    std::vector<McPoint> points;
    std::int64_t samples = 0;
    std::uint64_t seed = 0;
};

namespace detail {

// Fixed chunking keeps the merge order (and therefore every bit of the
// result) independent of how many workers happen to run.
inline constexpr std::int64_t kMcChunk = 1024;

inline McPoint mc_sample_impl(const NetworkDef& def, const NetworkState& state,
                              std::span<const double> x, std::int64_t samples,
                              const MaskSource& root, int workers) {
    if (samples < 2) throw ValidationError("mc_sample: need at least 2 samples");
    if (def.output_dim != 1)
        throw ValidationError("mc_sample: predictive moments are defined for scalar outputs");
    if (static_cast<int>(x.size()) != def.input_dim)
        throw ValidationError("mc_sample: input has " + std::to_string(x.size()) +
                              " entries, expected " + std::to_string(def.input_dim));

    const std::int64_t n_chunks = (samples + kMcChunk - 1) / kMcChunk;
    std::vector<MomentAccumulator> partials(static_cast<std::size_t>(n_chunks));

    const auto run_chunks = [&](std::atomic<std::int64_t>& next) {
        BatchEvaluator eval(def, state);
        Eigen::MatrixXd input(def.input_dim, kMcChunk);
        for (std::int64_t c = 0; c < kMcChunk; ++c)
            for (int r = 0; r < def.input_dim; ++r) input(r, c) = x[static_cast<std::size_t>(r)];
        for (;;) {
            const std::int64_t chunk = next.fetch_add(1);
            if (chunk >= n_chunks) break;
            const std::int64_t first = chunk * kMcChunk;
            const std::int64_t m = std::min(kMcChunk, samples - first);
            eval.set_input(input.leftCols(m));
            eval.draw_masks_per_sample(root, static_cast<std::uint64_t>(first));
            const auto& out = eval.forward();
            if (!out.allFinite()) throw NumericError("mc_sample: non-finite network output");
            auto& acc = partials[static_cast<std::size_t>(chunk)];
            for (std::int64_t c = 0; c < m; ++c) acc.add(out(0, c));
        }
    };

    std::atomic<std::int64_t> next{0};
    const int n_workers = std::max(1, workers);
    if (n_workers == 1 || n_chunks == 1) {
        run_chunks(next);
    } else {
        std::vector<std::thread> pool;
        std::exception_ptr failure;
        std::mutex failure_mu;
        for (int i = 0; i < std::min<std::int64_t>(n_workers, n_chunks); ++i)
            pool.emplace_back([&] {
                try {
                    run_chunks(next);
                } catch (...) {
                    std::lock_guard lock(failure_mu);
                    if (!failure) failure = std::current_exception();
                }
            });
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }

    MomentAccumulator total;
    for (const auto& p : partials) total.merge(p);

    McPoint point;
    point.x = def.input_dim == 1 ? x[0] : std::numeric_limits<double>::quiet_NaN();
    point.sample_mean = total.mean();
    point.sample_variance = total.sample_variance();
    return point;
}

}  // namespace detail

/// S stochastic forward passes at a fixed input, dropout active, one
/// independent mask stream per sample (split off `root` by sample index).
/// Reproducible for a given root seed regardless of worker count.
inline McPoint mc_sample(const NetworkDef& def, const NetworkState& state,
                         std::span<const double> x, std::int64_t samples, const MaskSource& root,
                         int workers = 1) {
    return detail::mc_sample_impl(def, state, x, samples, root, workers);
}

/// One mc_sample per grid point; point i draws from root.split(i) so every
/// point and every sample sees fresh independent masks.
inline MCResult mc_curve(const NetworkDef& def, const NetworkState& state,
                         std::span<const double> grid, std::int64_t samples,
                         const MaskSource& root, int workers = 1) {
    if (grid.empty()) throw ValidationError("mc_curve: empty grid");
    if (def.input_dim != 1) throw ValidationError("mc_curve: requires a scalar-input network");
    MCResult result;
    result.samples = samples;
    result.points.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid[i];
        McPoint p = detail::mc_sample_impl(def, state, std::span<const double>(&x, 1), samples,
                                           root.split(i), workers);
        result.points.push_back(p);
    }
    return result;
}

/// Equally spaced grid of `count` points over [lo, hi], endpoints included.
inline std::vector<double> linspace(double lo, double hi, int count) {
    if (count < 1) throw ValidationError("linspace: count must be >= 1");
    std::vector<double> xs(static_cast<std::size_t>(count));
    if (count == 1) {
        xs[0] = lo;
        return xs;
    }
    for (int i = 0; i < count; ++i)
        xs[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (count - 1);
    return xs;
}

}  // namespace mcdlab
