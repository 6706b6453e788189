#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mcdlab/errors.hpp"
#include "mcdlab/rng.hpp"
#include "mcdlab/stats.hpp"

namespace mcdlab {

/// A sample collection with provenance. `xs` is absent for constant-target
/// collections where every model unit sees input 1.
struct Dataset {
    std::optional<std::vector<double>> xs;
    std::vector<double> ys;
    std::size_t n = 0;
    double y_bar = 0.0;
    std::string generator_id;
    std::uint64_t seed = 0;
};

inline Dataset finalize_dataset(std::optional<std::vector<double>> xs, std::vector<double> ys,
                                std::string generator_id, std::uint64_t seed) {
    Dataset d;
    d.n = ys.size();
    d.y_bar = mean_of(ys);
    d.xs = std::move(xs);
    d.ys = std::move(ys);
    d.generator_id = std::move(generator_id);
    d.seed = seed;
    return d;
}

/// n i.i.d. draws from N(mu, sigma^2); targets only, no inputs.
inline Dataset gen_gaussian(double mu, double sigma, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw ValidationError("gen_gaussian: n must be >= 1");
    if (sigma < 0.0) throw ValidationError("gen_gaussian: sigma must be non-negative");
    RngStream rng(seed);
    std::vector<double> ys(n);
    for (auto& y : ys) y = rng.next_normal(mu, sigma);
    std::string id = "gaussian(mu=" + std::to_string(mu) + ",sigma=" + std::to_string(sigma) + ")";
    return finalize_dataset(std::nullopt, std::move(ys), std::move(id), seed);
}

enum class Shape { diamond, saw, triangle, line, square };

inline std::string to_string(Shape s) {
    switch (s) {
        case Shape::diamond: return "diamond";
        case Shape::saw: return "saw";
        case Shape::triangle: return "triangle";
        case Shape::line: return "line";
        case Shape::square: return "square";
    }
    return "?";
}

inline Shape shape_from_string(const std::string& s) {
    if (s == "diamond") return Shape::diamond;
    if (s == "saw") return Shape::saw;
    if (s == "triangle") return Shape::triangle;
    if (s == "line") return Shape::line;
    if (s == "square") return Shape::square;
    throw ValidationError("unknown dataset shape '" + s +
                          "' (expected diamond, saw, triangle, line or square)");
}

/// Noise-free target for the deterministic shapes, all mapping [0,1] into
/// [0,1]. The diamond is not a function of x and has no value here.
inline double shape_value(Shape shape, double x) {
    switch (shape) {
        case Shape::saw: {
            const double t = 3.0 * x;
            return t - std::floor(t);
        }
        case Shape::triangle: return 1.0 - 2.0 * std::abs(x - 0.5);
        case Shape::line: return x;
        case Shape::square: {
            const double t = 2.0 * x;
            return (t - std::floor(t)) < 0.5 ? 1.0 : 0.0;
        }
        case Shape::diamond:
            throw ValidationError("shape_value: diamond is stochastic, not a pointwise function");
    }
    throw ValidationError("shape_value: unknown shape");
}

/// 1-d regression sets over x ~ U[0,1). The diamond scatters y symmetrically
/// around 0.5 with x-dependent spread, so E[y|x] = 0.5 everywhere; the other
/// four shapes are noise-free curves.
inline Dataset gen_function(Shape shape, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw ValidationError("gen_function: n must be >= 1");
    RngStream rng(seed);
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = rng.next_double();
        xs[i] = x;
        if (shape == Shape::diamond) {
            const double halfwidth = 0.5 - std::abs(x - 0.5);
            ys[i] = 0.5 + halfwidth * rng.next_uniform(-1.0, 1.0);
        } else {
            ys[i] = shape_value(shape, x);
        }
    }
    return finalize_dataset(std::move(xs), std::move(ys), to_string(shape), seed);
}

}  // namespace mcdlab
