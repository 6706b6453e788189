#include <catch2/catch_amalgamated.hpp>
#include <vector>

#include "mcdlab/optim.hpp"
#include "mcdlab/theory.hpp"

using namespace mcdlab;

TEST_CASE("mse loss basics", "[optim]") {
    REQUIRE(mse_loss(std::vector<double>{1, 1}, std::vector<double>{1, 1}) == 0.0);
    REQUIRE(mse_loss(std::vector<double>{2}, std::vector<double>{0}) == 4.0);
    REQUIRE(mse_loss(std::vector<double>{1, 3}, std::vector<double>{0, 0}) == 5.0);
    REQUIRE_THROWS_AS(mse_loss(std::vector<double>{}, std::vector<double>{}), ValidationError);
    REQUIRE_THROWS_AS(mse_loss(std::vector<double>{1}, std::vector<double>{1, 2}),
                      ValidationError);
}

TEST_CASE("zero gradient leaves parameters unchanged", "[optim]") {
    const NetworkDef def = single_layer_def(8, DropoutSpec{0.0});
    NetworkState state = init_network(def, 5);
    const Eigen::MatrixXd before = state.dense[0].weights;
    Adam adam(AdamConfig{}, state);
    adam_step(state, zero_gradient(state), adam);
    REQUIRE(state.dense[0].weights == before);
}

TEST_CASE("first adam step moves by about the learning rate", "[optim]") {
    // Bias correction makes m-hat = g and v-hat = g^2 at t=1, so the step is
    // lr * sign(g) up to epsilon.
    const NetworkDef def = single_layer_def(1, DropoutSpec{0.0});
    NetworkState state = init_network(def, 1);
    const double w0 = state.dense[0].weights(0, 0);
    Gradient g = zero_gradient(state);
    g.dense[0].weights(0, 0) = 1.0;
    Adam adam(AdamConfig{0.1, 0.9, 0.999, 1e-8}, state);
    adam_step(state, g, adam);
    REQUIRE(state.dense[0].weights(0, 0) == Catch::Approx(w0 - 0.1).margin(1e-6));
}

TEST_CASE("non-finite gradients are reported with the block named", "[optim]") {
    const NetworkDef def = single_layer_def(2, DropoutSpec{0.0});
    NetworkState state = init_network(def, 2);
    Gradient g = zero_gradient(state);
    g.dense[0].weights(0, 1) = std::numeric_limits<double>::quiet_NaN();
    Adam adam(AdamConfig{}, state);
    REQUIRE_THROWS_AS(adam_step(state, g, adam), NumericError);
}

TEST_CASE("training is deterministic", "[optim]") {
    const Dataset data = gen_gaussian(2.0, 0.5, 64, 3);
    const NetworkDef def = single_layer_def(16, DropoutSpec{0.3});
    const TrainConfig cfg{5, 8, 11};

    const auto run = [&] {
        MaskSource masks(21);
        return train(def, init_network(def, 9), data, cfg, AdamConfig{}, masks);
    };
    const TrainResult a = run();
    const TrainResult b = run();
    REQUIRE(a.state.dense[0].weights == b.state.dense[0].weights);
    REQUIRE(a.trace.epoch_mean_loss == b.trace.epoch_mean_loss);
}

TEST_CASE("without dropout training solves the least-squares problem", "[optim]") {
    // Constant target y-bar, every unit fed 1/K: the optimum is any weight
    // vector whose sum is y-bar, reached by plain gradient descent.
    const int k = 8;
    const double y_bar = 3.0;
    const NetworkDef def = single_layer_def(k, DropoutSpec{0.0});
    NetworkState state = init_network(def, 7);
    Adam adam(AdamConfig{0.05, 0.9, 0.999, 1e-8}, state);

    const std::vector<double> x(k, 1.0 / k);
    const std::vector<Mask> ones{Mask(k, 1)};
    for (int step = 0; step < 400; ++step) {
        const auto out = forward(def, state, x, ones);
        const std::vector<double> upstream{2.0 * (out[0] - y_bar)};
        const Gradient g = backward(def, state, x, ones, upstream);
        adam_step(state, g, adam);
    }
    const auto out = forward(def, state, x, ones);
    REQUIRE(out[0] == Catch::Approx(y_bar).margin(1e-3));
}

TEST_CASE("train reaches the closed-form weight on a small problem", "[optim]") {
    const Dataset data = gen_gaussian(5.0, 0.1, 256, 13);
    const int k = 20;
    const double pd = 0.2;
    const NetworkDef def = single_layer_def(k, DropoutSpec{pd});
    MaskSource masks(17);
    const TrainResult r = train(def, init_network(def, 3), data, TrainConfig{80, 32, 19},
                                AdamConfig{0.01, 0.9, 0.999, 1e-8}, masks);

    const double w_opt = optimal_weight(SingleLayerSpec{k, pd, data.y_bar});
    REQUIRE(r.state.dense[0].weights.mean() == Catch::Approx(w_opt).epsilon(0.1));
    for (double loss : r.trace.epoch_mean_loss) REQUIRE(std::isfinite(loss));
    REQUIRE(r.trace.epoch_mean_loss.size() == 80);
    REQUIRE(r.trace.epoch_mean_loss.back() < r.trace.epoch_mean_loss.front());
}

TEST_CASE("dropout-trained parallel weights homogenize", "[optim]") {
    // The closed-form analysis assumes all weights land on a common value;
    // verify the spread stays small relative to the mean.
    const Dataset data = gen_gaussian(10.0, 1.0, 1600, 41);
    const int k = 100;
    const NetworkDef def = single_layer_def(k, DropoutSpec{0.5});
    MaskSource masks(43);
    const TrainResult r = train(def, init_network(def, 47), data, TrainConfig{600, 32, 53},
                                AdamConfig{1e-4, 0.9, 0.999, 1e-8}, masks);

    const auto& w = r.state.dense[0].weights;
    const double mean = w.mean();
    const double sd = std::sqrt((w.array() - mean).square().sum() / (k - 1));
    REQUIRE(sd / std::abs(mean) < 0.15);
}

TEST_CASE("divergence carries the epoch index", "[optim]") {
    const Dataset data = gen_gaussian(1e200, 0.0, 8, 1);
    const NetworkDef def = single_layer_def(4, DropoutSpec{0.0});
    MaskSource masks(2);
    try {
        train(def, init_network(def, 1), data, TrainConfig{3, 4, 5}, AdamConfig{}, masks);
        FAIL("expected divergence");
    } catch (const TrainingDivergedError& e) {
        REQUIRE(e.epoch() == 0);
    }
}

TEST_CASE("invalid training configs are rejected", "[optim]") {
    const Dataset data = gen_gaussian(1.0, 0.0, 4, 1);
    const NetworkDef def = single_layer_def(4, DropoutSpec{0.0});
    MaskSource masks(1);
    REQUIRE_THROWS_AS(train(def, init_network(def, 1), data, TrainConfig{0, 4, 0}, AdamConfig{},
                            masks),
                      ValidationError);
    Dataset empty = data;
    empty.ys.clear();
    empty.n = 0;
    REQUIRE_THROWS_AS(train(def, init_network(def, 1), empty, TrainConfig{1, 4, 0}, AdamConfig{},
                            masks),
                      ValidationError);
    REQUIRE_THROWS_AS(Adam(AdamConfig{-1.0, 0.9, 0.999, 1e-8}, init_network(def, 1)),
                      ValidationError);
}
