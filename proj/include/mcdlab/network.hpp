#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mcdlab/dropout.hpp"
#include "mcdlab/errors.hpp"
#include "mcdlab/rng.hpp"

namespace mcdlab {

struct DenseDef {
    int in_dim = 0;
    int out_dim = 0;
    bool has_bias = true;
};

struct ReluDef {};

struct DropoutDef {
    DropoutSpec spec;
};

using LayerDef = std::variant<DenseDef, ReluDef, DropoutDef>;

/// Architecture description. Widths are checked layer by layer: Dense maps
/// in_dim -> out_dim, ReLU and Dropout preserve the incoming width.
struct NetworkDef {
    int input_dim = 0;
    int output_dim = 0;
    std::vector<LayerDef> layers;

    void validate() const {
        if (input_dim < 1 || output_dim < 1)
            throw ValidationError("network def: input and output dims must be positive");
        if (layers.empty()) throw ValidationError("network def: at least one layer required");
        int width = input_dim;
        for (std::size_t i = 0; i < layers.size(); ++i) {
            if (const auto* d = std::get_if<DenseDef>(&layers[i])) {
                if (d->in_dim < 1 || d->out_dim < 1)
                    throw ValidationError("layer " + std::to_string(i) +
                                          ": dense dims must be positive");
                if (d->in_dim != width)
                    throw ValidationError("layer " + std::to_string(i) +
                                          ": dense expects in_dim " + std::to_string(width) +
                                          " but was declared with " + std::to_string(d->in_dim));
                width = d->out_dim;
            } else if (const auto* dr = std::get_if<DropoutDef>(&layers[i])) {
                try {
                    dr->spec.validate();
                } catch (const ValidationError& e) {
                    throw ValidationError("layer " + std::to_string(i) + ": " + e.what());
                }
            }
        }
        if (width != output_dim)
            throw ValidationError("network def: layers end at width " + std::to_string(width) +
                                  " but output_dim is " + std::to_string(output_dim));
    }

    int dense_count() const noexcept {
        int n = 0;
        for (const auto& l : layers) n += std::holds_alternative<DenseDef>(l) ? 1 : 0;
        return n;
    }

    int dropout_count() const noexcept {
        int n = 0;
        for (const auto& l : layers) n += std::holds_alternative<DropoutDef>(l) ? 1 : 0;
        return n;
    }

    /// Width of the data entering layer i.
    std::vector<int> entry_widths() const {
        std::vector<int> w;
        w.reserve(layers.size());
        int width = input_dim;
        for (const auto& l : layers) {
            w.push_back(width);
            if (const auto* d = std::get_if<DenseDef>(&l)) width = d->out_dim;
        }
        return w;
    }
};

/// The canonical model behind the closed-form analysis: a dropout layer
/// masking K constant inputs into one bias-free linear unit.
inline NetworkDef single_layer_def(int units, const DropoutSpec& spec) {
    NetworkDef def;
    def.input_dim = units;
    def.output_dim = 1;
    def.layers = {DropoutDef{spec}, DenseDef{units, 1, false}};
    return def;
}

/// Scalar-to-scalar MLP with dropout after every hidden ReLU, so the last
/// linear layer always sees masked activations.
inline NetworkDef mlp_def(std::span<const int> hidden, const DropoutSpec& spec,
                          bool last_layer_bias) {
    if (hidden.empty()) throw ValidationError("mlp def: need at least one hidden layer");
    NetworkDef def;
    def.input_dim = 1;
    def.output_dim = 1;
    int width = 1;
    for (int h : hidden) {
        def.layers.push_back(DenseDef{width, h, true});
        def.layers.push_back(ReluDef{});
        def.layers.push_back(DropoutDef{spec});
        width = h;
    }
    def.layers.push_back(DenseDef{width, 1, last_layer_bias});
    return def;
}

/// Weights and biases of one dense layer. `weights` is out_dim x in_dim;
/// `bias` has size 0 when the layer was declared without one.
struct ParamBlock {
    Eigen::MatrixXd weights;
    Eigen::VectorXd bias;
};

struct NetworkState {
    std::vector<ParamBlock> dense;  // one per Dense layer, in network order
    std::uint64_t rng_seed = 0;
};

/// Same shape tree as NetworkState.
struct Gradient {
    std::vector<ParamBlock> dense;
};

inline Gradient zero_gradient(const NetworkState& state) {
    Gradient g;
    g.dense.reserve(state.dense.size());
    for (const auto& blk : state.dense)
        g.dense.push_back(ParamBlock{Eigen::MatrixXd::Zero(blk.weights.rows(), blk.weights.cols()),
                                     Eigen::VectorXd::Zero(blk.bias.size())});
    return g;
}

/// Deterministic initialization: weights uniform in +-sqrt(1/fan_in), drawn
/// in row-major order from a stream keyed by `seed`; biases zero.
inline NetworkState init_network(const NetworkDef& def, std::uint64_t seed) {
    def.validate();
    NetworkState state;
    state.rng_seed = seed;
    RngStream rng(seed);
    for (const auto& layer : def.layers) {
        const auto* d = std::get_if<DenseDef>(&layer);
        if (!d) continue;
        ParamBlock blk;
        blk.weights.resize(d->out_dim, d->in_dim);
        const double bound = std::sqrt(1.0 / d->in_dim);
        for (int r = 0; r < d->out_dim; ++r)
            for (int c = 0; c < d->in_dim; ++c) blk.weights(r, c) = rng.next_uniform(-bound, bound);
        blk.bias = d->has_bias ? Eigen::VectorXd::Zero(d->out_dim) : Eigen::VectorXd();
        state.dense.push_back(std::move(blk));
    }
    return state;
}

namespace detail {

inline void check_state_shapes(const NetworkDef& def, const NetworkState& state) {
    if (static_cast<int>(state.dense.size()) != def.dense_count())
        throw ValidationError("state holds " + std::to_string(state.dense.size()) +
                              " dense blocks, def declares " + std::to_string(def.dense_count()));
    std::size_t bi = 0;
    for (std::size_t i = 0; i < def.layers.size(); ++i) {
        const auto* d = std::get_if<DenseDef>(&def.layers[i]);
        if (!d) continue;
        const auto& blk = state.dense[bi++];
        if (blk.weights.rows() != d->out_dim || blk.weights.cols() != d->in_dim)
            throw ValidationError("layer " + std::to_string(i) + ": weight shape mismatch");
        if (blk.bias.size() != (d->has_bias ? d->out_dim : 0))
            throw ValidationError("layer " + std::to_string(i) + ": bias shape mismatch");
    }
}

}  // namespace detail

/// Evaluates a network on column-batches (each column one sample) with
/// per-sample dropout masks, caching activations so gradients can be read
/// back without a second pass. Buffers are reused across calls.
class BatchEvaluator {
public:
    BatchEvaluator(const NetworkDef& def, const NetworkState& state)
        : def_(&def), state_(&state) {
        def.validate();
        detail::check_state_shapes(def, state);
        acts_.resize(def.layers.size() + 1);
        deltas_.resize(def.layers.size() + 1);
        masks_.resize(def.layers.size());
        first_dense_ = 0;
        while (first_dense_ < def.layers.size() &&
               !std::holds_alternative<DenseDef>(def.layers[first_dense_]))
            ++first_dense_;
    }

    const NetworkDef& def() const noexcept { return *def_; }

    /// Load a batch of inputs, one sample per column.
    void set_input(const Eigen::Ref<const Eigen::MatrixXd>& input) {
        if (input.rows() != def_->input_dim)
            throw ValidationError("input has " + std::to_string(input.rows()) +
                                  " rows, network expects " + std::to_string(def_->input_dim));
        batch_ = static_cast<int>(input.cols());
        acts_[0] = input;
    }

    /// Draw fresh masks for every dropout layer from one sequential stream:
    /// layer by layer, sample by sample, unit by unit.
    void draw_masks(MaskSource& source) {
        const auto widths = def_->entry_widths();
        for (std::size_t i = 0; i < def_->layers.size(); ++i) {
            const auto* dr = std::get_if<DropoutDef>(&def_->layers[i]);
            if (!dr) continue;
            auto& m = masks_[i];
            m.resize(widths[i], batch_);
            for (int c = 0; c < batch_; ++c) source.fill(dr->spec, m.col(c).data(), widths[i]);
        }
    }

    /// Draw masks with one independent stream per sample, keyed by the
    /// sample's global index. The mask a sample sees depends only on
    /// (root key, sample index), never on batch grouping.
    void draw_masks_per_sample(const MaskSource& root, std::uint64_t first_sample_index) {
        const auto widths = def_->entry_widths();
        sample_sources_.clear();
        for (int c = 0; c < batch_; ++c)
            sample_sources_.push_back(root.split(first_sample_index + static_cast<std::uint64_t>(c)));
        for (std::size_t i = 0; i < def_->layers.size(); ++i) {
            const auto* dr = std::get_if<DropoutDef>(&def_->layers[i]);
            if (!dr) continue;
            auto& m = masks_[i];
            m.resize(widths[i], batch_);
            for (int c = 0; c < batch_; ++c)
                sample_sources_[c].fill(dr->spec, m.col(c).data(), widths[i]);
        }
    }

    /// Use externally supplied masks (one per dropout layer, width x batch as
    /// 0/1 values).
    void set_masks(std::span<const Mask> layer_masks) {
        const auto widths = def_->entry_widths();
        std::size_t mi = 0;
        for (std::size_t i = 0; i < def_->layers.size(); ++i) {
            const auto* dr = std::get_if<DropoutDef>(&def_->layers[i]);
            if (!dr) continue;
            if (mi >= layer_masks.size())
                throw ValidationError("expected " + std::to_string(def_->dropout_count()) +
                                      " masks, got " + std::to_string(layer_masks.size()));
            const Mask& src = layer_masks[mi++];
            if (static_cast<int>(src.size()) != widths[i] * batch_)
                throw ValidationError("layer " + std::to_string(i) + ": mask has " +
                                      std::to_string(src.size()) + " entries, expected " +
                                      std::to_string(widths[i] * batch_));
            auto& m = masks_[i];
            m.resize(widths[i], batch_);
            for (int c = 0; c < batch_; ++c)
                for (int r = 0; r < widths[i]; ++r)
                    m(r, c) = src[static_cast<std::size_t>(c) * widths[i] + r] ? 1.0 : 0.0;
        }
        if (mi != layer_masks.size())
            throw ValidationError("expected " + std::to_string(def_->dropout_count()) +
                                  " masks, got " + std::to_string(layer_masks.size()));
    }

    /// Forward pass over the loaded batch with the loaded masks.
    const Eigen::MatrixXd& forward() {
        std::size_t bi = 0;
        for (std::size_t i = 0; i < def_->layers.size(); ++i) {
            const auto& prev = acts_[i];
            auto& next = acts_[i + 1];
            if (const auto* d = std::get_if<DenseDef>(&def_->layers[i])) {
                const auto& blk = state_->dense[bi++];
                next.noalias() = blk.weights * prev;
                if (blk.bias.size() > 0) next.colwise() += blk.bias;
            } else if (std::holds_alternative<ReluDef>(def_->layers[i])) {
                next = prev.cwiseMax(0.0);
            } else {
                const auto& dr = std::get<DropoutDef>(def_->layers[i]);
                next = prev.cwiseProduct(masks_[i]);
                if (dr.spec.scaling == MaskScaling::inverted) next /= dr.spec.keep_prob();
            }
        }
        return acts_.back();
    }

    const Eigen::MatrixXd& output() const noexcept { return acts_.back(); }

    /// Reverse pass: contracts the cached forward against `upstream`
    /// (output_dim x batch) and accumulates parameter gradients into `grad`.
    /// Gradients are summed over the batch. Backpropagation stops at the
    /// first dense layer since nothing upstream of it holds parameters.
    void accumulate_backward(const Eigen::Ref<const Eigen::MatrixXd>& upstream, Gradient& grad) {
        if (upstream.rows() != def_->output_dim || upstream.cols() != batch_)
            throw ValidationError("upstream shape mismatch: expected " +
                                  std::to_string(def_->output_dim) + "x" + std::to_string(batch_));
        if (grad.dense.size() != state_->dense.size())
            throw ValidationError("gradient block count mismatch");

        deltas_[def_->layers.size()] = upstream;
        std::size_t bi = state_->dense.size();
        for (std::size_t i = def_->layers.size(); i-- > 0;) {
            const auto& delta = deltas_[i + 1];
            if (const auto* d = std::get_if<DenseDef>(&def_->layers[i])) {
                --bi;
                auto& gblk = grad.dense[bi];
                gblk.weights.noalias() += delta * acts_[i].transpose();
                if (d->has_bias) gblk.bias.noalias() += delta.rowwise().sum();
                if (i == first_dense_) break;
                deltas_[i].noalias() = state_->dense[bi].weights.transpose() * delta;
            } else if (std::holds_alternative<ReluDef>(def_->layers[i])) {
                deltas_[i] = delta.cwiseProduct(
                    (acts_[i + 1].array() > 0.0).cast<double>().matrix());
            } else {
                const auto& dr = std::get<DropoutDef>(def_->layers[i]);
                deltas_[i] = delta.cwiseProduct(masks_[i]);
                if (dr.spec.scaling == MaskScaling::inverted) deltas_[i] /= dr.spec.keep_prob();
            }
        }
    }

private:
    const NetworkDef* def_;
    const NetworkState* state_;
    int batch_ = 0;
    std::size_t first_dense_ = 0;
    std::vector<Eigen::MatrixXd> acts_;    // acts_[i] enters layer i
    std::vector<Eigen::MatrixXd> deltas_;  // deltas_[i+1] leaves layer i on the way back
    std::vector<Eigen::MatrixXd> masks_;   // 0/1, width x batch, per dropout layer
    std::vector<MaskSource> sample_sources_;
};

namespace detail {

inline Eigen::VectorXd to_vector(std::span<const double> x) {
    return Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
}

inline void check_finite_output(const Eigen::MatrixXd& out) {
    if (!out.allFinite()) throw NumericError("non-finite value in network output");
}

}  // namespace detail

/// Single-sample forward with explicit masks (one Mask per dropout layer).
inline std::vector<double> forward(const NetworkDef& def, const NetworkState& state,
                                   std::span<const double> x, std::span<const Mask> masks) {
    if (static_cast<int>(x.size()) != def.input_dim)
        throw ValidationError("input has " + std::to_string(x.size()) + " entries, expected " +
                              std::to_string(def.input_dim));
    BatchEvaluator eval(def, state);
    eval.set_input(detail::to_vector(x));
    eval.set_masks(masks);
    const auto& out = eval.forward();
    detail::check_finite_output(out);
    return std::vector<double>(out.data(), out.data() + out.rows());
}

/// Single-sample forward drawing fresh masks from `source`.
inline std::vector<double> forward(const NetworkDef& def, const NetworkState& state,
                                   std::span<const double> x, MaskSource& source) {
    if (static_cast<int>(x.size()) != def.input_dim)
        throw ValidationError("input has " + std::to_string(x.size()) + " entries, expected " +
                              std::to_string(def.input_dim));
    BatchEvaluator eval(def, state);
    eval.set_input(detail::to_vector(x));
    eval.draw_masks(source);
    const auto& out = eval.forward();
    detail::check_finite_output(out);
    return std::vector<double>(out.data(), out.data() + out.rows());
}

/// Exact reverse-mode gradient of upstream . f(x) for a fixed mask draw.
/// Recomputes the forward internally; the (x, masks) pair must match the
/// forward being differentiated.
inline Gradient backward(const NetworkDef& def, const NetworkState& state,
                         std::span<const double> x, std::span<const Mask> masks,
                         std::span<const double> upstream) {
    if (static_cast<int>(upstream.size()) != def.output_dim)
        throw ValidationError("upstream has " + std::to_string(upstream.size()) +
                              " entries, expected " + std::to_string(def.output_dim));
    BatchEvaluator eval(def, state);
    eval.set_input(detail::to_vector(x));
    eval.set_masks(masks);
    eval.forward();
    Gradient grad = zero_gradient(state);
    eval.accumulate_backward(detail::to_vector(upstream), grad);
    return grad;
}

}  // namespace mcdlab
