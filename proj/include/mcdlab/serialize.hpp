#pragma once

#include <json.hpp>
#include <string>

#include "mcdlab/datasets.hpp"
#include "mcdlab/mc.hpp"
#include "mcdlab/network.hpp"
#include "mcdlab/theory.hpp"

namespace mcdlab {

using Json = nlohmann::ordered_json;

inline Json to_json(const NetworkDef& def) {
    Json layers = Json::array();
    for (const auto& layer : def.layers) {
        if (const auto* d = std::get_if<DenseDef>(&layer)) {
            layers.push_back({{"kind", "dense"},
                              {"in", d->in_dim},
                              {"out", d->out_dim},
                              {"bias", d->has_bias}});
        } else if (std::holds_alternative<ReluDef>(layer)) {
            layers.push_back({{"kind", "relu"}});
        } else {
            const auto& dr = std::get<DropoutDef>(layer);
            layers.push_back({{"kind", "dropout"},
                              {"rate", dr.spec.drop_rate},
                              {"scaling", to_string(dr.spec.scaling)}});
        }
    }
    return Json{{"input_dim", def.input_dim}, {"output_dim", def.output_dim}, {"layers", layers}};
}

inline NetworkDef network_def_from_json(const Json& j) {
    NetworkDef def;
    def.input_dim = j.at("input_dim").get<int>();
    def.output_dim = j.at("output_dim").get<int>();
    for (const auto& l : j.at("layers")) {
        const std::string kind = l.at("kind").get<std::string>();
        if (kind == "dense") {
            def.layers.push_back(DenseDef{l.at("in").get<int>(), l.at("out").get<int>(),
                                          l.at("bias").get<bool>()});
        } else if (kind == "relu") {
            def.layers.push_back(ReluDef{});
        } else if (kind == "dropout") {
            def.layers.push_back(DropoutDef{DropoutSpec{
                l.at("rate").get<double>(),
                mask_scaling_from_string(l.at("scaling").get<std::string>())}});
        } else {
            throw ValidationError("unknown layer kind '" + kind + "'");
        }
    }
    def.validate();
    return def;
}

/// Weight matrices are flattened row-major.
inline Json to_json(const NetworkState& state) {
    Json blocks = Json::array();
    for (const auto& blk : state.dense) {
        Json weights = Json::array();
        for (Eigen::Index r = 0; r < blk.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < blk.weights.cols(); ++c)
                weights.push_back(blk.weights(r, c));
        Json bias = Json::array();
        for (Eigen::Index i = 0; i < blk.bias.size(); ++i) bias.push_back(blk.bias(i));
        blocks.push_back({{"out", blk.weights.rows()},
                          {"in", blk.weights.cols()},
                          {"weights", weights},
                          {"bias", bias}});
    }
    return Json{{"rng_seed", state.rng_seed}, {"dense", blocks}};
}

inline NetworkState network_state_from_json(const Json& j) {
    NetworkState state;
    state.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    for (const auto& b : j.at("dense")) {
        ParamBlock blk;
        const auto rows = b.at("out").get<Eigen::Index>();
        const auto cols = b.at("in").get<Eigen::Index>();
        const auto& w = b.at("weights");
        if (static_cast<Eigen::Index>(w.size()) != rows * cols)
            throw ValidationError("state: weight array size does not match declared shape");
        blk.weights.resize(rows, cols);
        Eigen::Index k = 0;
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c) blk.weights(r, c) = w[k++].get<double>();
        const auto& bias = b.at("bias");
        blk.bias.resize(static_cast<Eigen::Index>(bias.size()));
        for (Eigen::Index i = 0; i < blk.bias.size(); ++i) blk.bias(i) = bias[i].get<double>();
        state.dense.push_back(std::move(blk));
    }
    return state;
}

inline Json to_json(const TheoryPrediction& p) {
    return Json{{"w_opt", p.w_opt}, {"mean_f", p.mean_f}, {"var_f", p.var_f}};
}

inline Json to_json(const MCResult& r) {
    Json points = Json::array();
    for (const auto& p : r.points)
        points.push_back({{"x", p.x},
                          {"mean", p.sample_mean},
                          {"variance", p.sample_variance},
                          {"bands", {p.band(1), p.band(2), p.band(3)}}});
    return Json{{"samples", r.samples}, {"seed", r.seed}, {"points", points}};
}

inline Json provenance_json(const Dataset& d, const std::string& version) {
    return Json{{"generator", d.generator_id},
                {"n", d.n},
                {"seed", d.seed},
                {"y_bar", d.y_bar},
                {"generator_version", version}};
}

}  // namespace mcdlab
