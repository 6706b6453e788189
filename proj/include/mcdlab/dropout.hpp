#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mcdlab/errors.hpp"
#include "mcdlab/rng.hpp"

namespace mcdlab {

/// How kept activations are rescaled after masking.
///
/// `none` multiplies by the raw Bernoulli mask; predictive moments of a
/// masked sum then follow the Binomial directly. `inverted` divides kept
/// units by the keep probability, the convention most frameworks default to.
enum class MaskScaling { none, inverted };

inline std::string to_string(MaskScaling s) {
    return s == MaskScaling::none ? "none" : "inverted";
}

inline MaskScaling mask_scaling_from_string(const std::string& s) {
    if (s == "none") return MaskScaling::none;
    if (s == "inverted") return MaskScaling::inverted;
    throw ValidationError("unknown mask scaling '" + s + "' (expected 'none' or 'inverted')");
}

/// One dropout layer's configuration. `drop_rate` is P(unit is zeroed),
/// i.e. the parameter most frameworks call p; the keep probability is its
/// complement.
struct DropoutSpec {
    double drop_rate = 0.5;
    MaskScaling scaling = MaskScaling::none;

    double keep_prob() const noexcept { return 1.0 - drop_rate; }

    void validate() const {
        if (!(drop_rate >= 0.0 && drop_rate < 1.0))
            throw ValidationError("dropout rate must lie in [0, 1), got " +
                                  std::to_string(drop_rate));
    }
};

using Mask = std::vector<std::uint8_t>;

/// Seeded source of Bernoulli masks. One source owns one stream; splitting
/// yields independent per-sample sources so Monte-Carlo sampling can fan out
/// without draws interleaving.
class MaskSource {
public:
    explicit MaskSource(std::uint64_t seed) : stream_(seed) {}
    explicit MaskSource(RngStream stream) : stream_(stream) {}

    MaskSource split(std::uint64_t index) const { return MaskSource(stream_.split(index)); }

    RngStream& stream() noexcept { return stream_; }

    /// Fill `width` mask entries, 1 with the keep probability. OutT is
    /// uint8_t for the public Mask type and double when writing straight
    /// into matrix storage; both consume the stream identically.
    template <typename OutT>
    void fill(const DropoutSpec& spec, OutT* out, std::size_t width) {
        spec.validate();
        const double keep = spec.keep_prob();
        for (std::size_t i = 0; i < width; ++i)
            out[i] = static_cast<OutT>(stream_.next_bernoulli(keep) ? 1 : 0);
    }

private:
    RngStream stream_;
};

/// Draw one i.i.d. Bernoulli(keep) mask of the given width.
inline Mask draw_mask(const DropoutSpec& spec, std::size_t width, MaskSource& source) {
    if (width < 1) throw ValidationError("draw_mask: width must be >= 1");
    Mask mask(width);
    source.fill(spec, mask.data(), width);
    return mask;
}

/// Elementwise mask application. scaling=none is the plain product; inverted
/// divides kept entries by the keep probability.
inline std::vector<double> apply_mask(std::span<const double> x, std::span<const std::uint8_t> mask,
                                      const DropoutSpec& spec) {
    spec.validate();
    if (x.size() != mask.size())
        throw ValidationError("apply_mask: length mismatch (" + std::to_string(x.size()) +
                              " values vs " + std::to_string(mask.size()) + " mask entries)");
    const double scale = spec.scaling == MaskScaling::inverted ? 1.0 / spec.keep_prob() : 1.0;
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = mask[i] ? x[i] * scale : 0.0;
    return out;
}

}  // namespace mcdlab
