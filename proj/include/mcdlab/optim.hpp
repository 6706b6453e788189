#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mcdlab/datasets.hpp"
#include "mcdlab/errors.hpp"
#include "mcdlab/network.hpp"
#include "mcdlab/rng.hpp"

namespace mcdlab {

/// Mean squared residual over a batch.
inline double mse_loss(std::span<const double> pred, std::span<const double> target) {
    if (pred.empty()) throw ValidationError("mse_loss: empty input");
    if (pred.size() != target.size())
        throw ValidationError("mse_loss: length mismatch (" + std::to_string(pred.size()) +
                              " vs " + std::to_string(target.size()) + ")");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.size());
}

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const {
        if (!(learning_rate > 0.0)) throw ValidationError("adam: learning rate must be positive");
        if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
            throw ValidationError("adam: betas must lie in (0, 1)");
        if (!(epsilon > 0.0)) throw ValidationError("adam: epsilon must be positive");
    }
};

/// Bias-corrected Adam. Moment accumulators mirror the parameter tree and
/// start at zero; the step counter advances once per update.
class Adam {
public:
    Adam(const AdamConfig& cfg, const NetworkState& shape) : cfg_(cfg) {
        cfg.validate();
        m_ = zero_gradient(shape).dense;
        v_ = zero_gradient(shape).dense;
    }

    const AdamConfig& config() const noexcept { return cfg_; }
    long step_count() const noexcept { return t_; }

    void step(NetworkState& state, const Gradient& grad) {
        if (grad.dense.size() != state.dense.size())
            throw ValidationError("adam: gradient/state block count mismatch");
        t_ += 1;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < state.dense.size(); ++i) {
            update_block(state.dense[i].weights, grad.dense[i].weights, m_[i].weights,
                         v_[i].weights, bc1, bc2);
            if (state.dense[i].bias.size() > 0)
                update_block(state.dense[i].bias, grad.dense[i].bias, m_[i].bias, v_[i].bias, bc1,
                             bc2);
        }
    }

private:
    template <typename Derived>
    void update_block(Eigen::MatrixBase<Derived>& x, const Eigen::MatrixBase<Derived>& g,
                      Eigen::MatrixBase<Derived>& m, Eigen::MatrixBase<Derived>& v, double bc1,
                      double bc2) {
        m.array() = cfg_.beta1 * m.array() + (1.0 - cfg_.beta1) * g.array();
        v.array() = cfg_.beta2 * v.array() + (1.0 - cfg_.beta2) * g.array().square();
        x.array() -= cfg_.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg_.epsilon);
    }

    AdamConfig cfg_;
    std::vector<ParamBlock> m_;
    std::vector<ParamBlock> v_;
    long t_ = 0;
};

/// One validated update. The offending layer is named when the gradient
/// carries non-finite entries.
inline void adam_step(NetworkState& state, const Gradient& grad, Adam& optimizer) {
    for (std::size_t i = 0; i < grad.dense.size(); ++i) {
        if (!grad.dense[i].weights.allFinite() ||
            (grad.dense[i].bias.size() > 0 && !grad.dense[i].bias.allFinite()))
            throw NumericError("adam: non-finite gradient in dense block " + std::to_string(i));
    }
    optimizer.step(state, grad);
}

struct TrainConfig {
    int epochs = 1;
    int batch_size = 32;
    std::uint64_t shuffle_seed = 0;

    void validate() const {
        if (epochs < 1) throw ValidationError("train: epochs must be >= 1");
        if (batch_size < 1) throw ValidationError("train: batch size must be >= 1");
    }
};

/// Per-epoch mean training loss.
struct LossTrace {
    std::vector<double> epoch_mean_loss;
};

struct TrainResult {
    NetworkState state;
    LossTrace trace;
};

/// Minibatch gradient descent to the MSE optimum: per-epoch reshuffle,
/// fresh dropout masks for every sample in every forward pass, one Adam
/// update per batch (last partial batch included). Dropout stays active
/// throughout. Deterministic given (initial state, dataset, seeds).
inline TrainResult train(const NetworkDef& def, NetworkState state, const Dataset& data,
                         const TrainConfig& train_cfg, const AdamConfig& adam_cfg,
                         MaskSource& mask_source) {
    def.validate();
    train_cfg.validate();
    if (data.n < 1) throw ValidationError("train: dataset is empty");
    if (def.output_dim != 1)
        throw ValidationError("train: only scalar-output networks are trainable");
    const bool has_xs = data.xs.has_value();
    if (has_xs && def.input_dim != 1)
        throw ValidationError("train: (x, y) datasets require input_dim == 1");

    const int n = static_cast<int>(data.n);
    const int bs = std::min(train_cfg.batch_size, n);

    BatchEvaluator eval(def, state);
    Adam adam(adam_cfg, state);
    Gradient grad = zero_gradient(state);

    // For constant-target data every unit sees input 1, realizing a masked
    // sum of weights; otherwise the scalar x is the one input.
    Eigen::MatrixXd input(def.input_dim, bs);
    if (!has_xs) input.setOnes();
    Eigen::MatrixXd upstream(1, bs);
    Eigen::RowVectorXd targets(bs);

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    RngStream shuffle_rng(train_cfg.shuffle_seed);

    LossTrace trace;
    trace.epoch_mean_loss.reserve(static_cast<std::size_t>(train_cfg.epochs));

    for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
        shuffle(order, shuffle_rng);
        double sse = 0.0;
        for (int start = 0; start < n; start += bs) {
            const int m = std::min(bs, n - start);
            for (int c = 0; c < m; ++c) {
                const int idx = order[static_cast<std::size_t>(start + c)];
                if (has_xs) input(0, c) = (*data.xs)[static_cast<std::size_t>(idx)];
                targets(c) = data.ys[static_cast<std::size_t>(idx)];
            }
            eval.set_input(input.leftCols(m));
            eval.draw_masks(mask_source);
            const auto& out = eval.forward();

            double batch_sse = 0.0;
            for (int c = 0; c < m; ++c) {
                const double r = out(0, c) - targets(c);
                batch_sse += r * r;
                upstream(0, c) = 2.0 * r / static_cast<double>(m);
            }
            if (!std::isfinite(batch_sse))
                throw TrainingDivergedError(
                    "training diverged: non-finite loss in epoch " + std::to_string(epoch), epoch);
            sse += batch_sse;

            for (auto& blk : grad.dense) {
                blk.weights.setZero();
                blk.bias.setZero();
            }
            eval.accumulate_backward(upstream.leftCols(m), grad);
            adam.step(state, grad);
        }
        trace.epoch_mean_loss.push_back(sse / static_cast<double>(n));
    }
    return TrainResult{std::move(state), std::move(trace)};
}

}  // namespace mcdlab
