#include <catch2/catch_amalgamated.hpp>
#include <vector>

#include "mcdlab/theory.hpp"

using namespace mcdlab;

TEST_CASE("reference table values", "[theory]") {
    const TheoryPrediction a = predict_moments(SingleLayerSpec{500, 0.2, 10.0});
    REQUIRE(a.w_opt == Catch::Approx(0.025).margin(0.0005));
    REQUIRE(a.var_f == Catch::Approx(0.050).margin(0.0005));

    const TheoryPrediction b = predict_moments(SingleLayerSpec{500, 0.5, 10.0});
    REQUIRE(b.w_opt == Catch::Approx(0.040).margin(0.0005));
    REQUIRE(b.var_f == Catch::Approx(0.199).margin(0.0005));
}

TEST_CASE("one unit recovers the target mean", "[theory]") {
    for (double pd : {0.0, 0.3, 0.9})
        REQUIRE(optimal_weight(SingleLayerSpec{1, pd, 4.2}) == Catch::Approx(4.2).epsilon(1e-12));
}

TEST_CASE("no dropout means exact mean and zero variance", "[theory]") {
    const TheoryPrediction p = predict_moments(SingleLayerSpec{17, 0.0, 3.5});
    REQUIRE(p.mean_f == Catch::Approx(3.5).epsilon(1e-12));
    REQUIRE(p.var_f == 0.0);
}

TEST_CASE("small case agrees with exhaustive enumeration", "[theory]") {
    const SingleLayerSpec spec{4, 0.5, 2.0};
    const TheoryPrediction p = predict_moments(spec);
    REQUIRE(p.w_opt == Catch::Approx(0.8).epsilon(1e-12));
    REQUIRE(p.mean_f == Catch::Approx(1.6).epsilon(1e-12));
    REQUIRE(p.var_f == Catch::Approx(0.64).epsilon(1e-12));

    const std::vector<double> weights(4, p.w_opt);
    const EnumeratedMoments e = enumerate_moments(0.5, weights);
    REQUIRE(std::abs(e.mean - p.mean_f) < 1e-12);
    REQUIRE(std::abs(e.variance - p.var_f) < 1e-12);
}

TEST_CASE("expected mse basics", "[theory]") {
    const SingleLayerSpec spec{12, 0.3, 5.0};
    REQUIRE(expected_mse(spec, 0.0) == Catch::Approx(25.0).epsilon(1e-12));

    const double w = optimal_weight(spec);
    REQUIRE(expected_mse(spec, w) <= expected_mse(spec, w * 1.01));
    REQUIRE(expected_mse(spec, w) <= expected_mse(spec, w * 0.99));
}

TEST_CASE("expected mse matches the enumeration average", "[theory]") {
    // E[(f - y_bar)^2] from the 2^K sum: variance plus squared bias.
    const SingleLayerSpec spec{4, 0.5, 2.0};
    const double w = 0.8;
    const EnumeratedMoments e = enumerate_moments(0.5, std::vector<double>(4, w));
    const double brute = e.variance + (e.mean - spec.y_bar) * (e.mean - spec.y_bar);
    REQUIRE(std::abs(expected_mse(spec, w) - brute) < 1e-12);
}

TEST_CASE("mse derivative", "[theory]") {
    const SingleLayerSpec spec{40, 0.25, -3.0};
    const double w = optimal_weight(spec);
    REQUIRE(std::abs(mse_derivative(spec, w)) < 1e-12 * std::abs(spec.y_bar));
    REQUIRE(mse_derivative(spec, 0.0) ==
            Catch::Approx(-2.0 * spec.y_bar * spec.units * spec.keep_prob()).epsilon(1e-12));

    // Central finite differences of expected_mse.
    for (double probe : {-1.0, -0.01, 0.05, 0.4, 2.0}) {
        const double h = 1e-6 * std::max(1.0, std::abs(probe));
        const double fd = (expected_mse(spec, probe + h) - expected_mse(spec, probe - h)) / (2 * h);
        const double an = mse_derivative(spec, probe);
        REQUIRE(std::abs(fd - an) < 1e-8 * std::max({std::abs(fd), std::abs(an), 1.0}));
    }
}

TEST_CASE("enumeration handles unequal weights", "[theory]") {
    const EnumeratedMoments e = enumerate_moments(0.5, std::vector<double>{1.0, 2.0});
    REQUIRE(e.mean == Catch::Approx(1.5).epsilon(1e-12));
    REQUIRE(e.variance == Catch::Approx(1.25).epsilon(1e-12));
}

TEST_CASE("enumeration degenerate cases and bounds", "[theory]") {
    const std::vector<double> w{0.5, -1.5, 2.0};
    const EnumeratedMoments e = enumerate_moments(0.0, w);
    REQUIRE(e.mean == Catch::Approx(1.0).epsilon(1e-12));
    REQUIRE(std::abs(e.variance) < 1e-12);

    REQUIRE_THROWS_AS(enumerate_moments(0.5, std::vector<double>(21, 1.0)), ValidationError);
    REQUIRE_THROWS_AS(enumerate_moments(0.5, std::vector<double>{}), ValidationError);
}

TEST_CASE("enumeration agrees with the closed forms across K and rates", "[theory]") {
    for (int k = 1; k <= 12; ++k) {
        for (double pd : {0.1, 0.2, 0.5, 0.9}) {
            const SingleLayerSpec spec{k, pd, 10.0};
            const double w = optimal_weight(spec);
            const EnumeratedMoments e = enumerate_moments(pd, std::vector<double>(k, w));
            REQUIRE(std::abs(e.mean - mean_at_weight(spec, w)) < 1e-12);
            REQUIRE(std::abs(e.variance - variance_at_weight(spec, w)) < 1e-12);
        }
    }
}

TEST_CASE("the predictive mean is biased low but vanishingly so for big K", "[theory]") {
    double prev_ratio = 0.0;
    for (int k : {10, 100, 1000, 10000}) {
        const TheoryPrediction p = predict_moments(SingleLayerSpec{k, 0.3, 7.0});
        REQUIRE(p.mean_f < 7.0);
        const double ratio = p.mean_f / 7.0;
        REQUIRE(ratio > prev_ratio);
        prev_ratio = ratio;
    }
    REQUIRE(prev_ratio > 0.9999);
}

TEST_CASE("variance scales with the squared target mean", "[theory]") {
    // Power-of-two scaling keeps the comparison exact in floating point.
    const SingleLayerSpec base{64, 0.4, 1.25};
    const SingleLayerSpec scaled{64, 0.4, 2.0 * 1.25};
    REQUIRE(predict_moments(scaled).var_f == 4.0 * predict_moments(base).var_f);
}

TEST_CASE("prediction depends only on units, rate and target mean", "[theory]") {
    // No n, no data variance in the inputs; same triple, same prediction.
    const TheoryPrediction a = predict_moments(SingleLayerSpec{500, 0.2, 10.0});
    const TheoryPrediction b = predict_moments(SingleLayerSpec{500, 0.2, 10.0});
    REQUIRE(a.w_opt == b.w_opt);
    REQUIRE(a.mean_f == b.mean_f);
    REQUIRE(a.var_f == b.var_f);
}

TEST_CASE("spec validation", "[theory]") {
    REQUIRE_THROWS_AS(optimal_weight(SingleLayerSpec{0, 0.5, 1.0}), ValidationError);
    REQUIRE_THROWS_AS(optimal_weight(SingleLayerSpec{5, 1.0, 1.0}), ValidationError);
}
