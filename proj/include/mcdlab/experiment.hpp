#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "mcdlab/datasets.hpp"
#include "mcdlab/io.hpp"
#include "mcdlab/mc.hpp"
#include "mcdlab/network.hpp"
#include "mcdlab/optim.hpp"
#include "mcdlab/serialize.hpp"
#include "mcdlab/theory.hpp"
#include "mcdlab/toml.hpp"
#include "mcdlab/version.hpp"

namespace mcdlab {

enum class Scenario { single, mlp };

inline std::string to_string(Scenario s) { return s == Scenario::single ? "single" : "mlp"; }

inline Scenario scenario_from_string(const std::string& s) {
    if (s == "single") return Scenario::single;
    if (s == "mlp") return Scenario::mlp;
    throw ValidationError("unknown scenario '" + s + "' (expected 'single' or 'mlp')");
}

/// Everything needed to reproduce one experiment end to end. All stochastic
/// stages derive their streams from the one root seed.
struct ExperimentConfig {
    Scenario scenario = Scenario::single;
    std::uint64_t seed = 0;
    std::string out_dir;

    struct DatasetCfg {
        std::string kind = "gaussian";  // "gaussian" or a shape name
        double mu = 10.0;
        double sigma = 1.0;
        std::size_t n = 0;  // 0 -> scenario default
        std::string label;  // reporting label; defaults to the generator id
    } dataset;

    struct NetworkCfg {
        int units = 500;                // single-layer width K
        std::vector<int> hidden = {64, 64};
        bool last_layer_bias = false;
        double drop_rate = 0.5;
        MaskScaling scaling = MaskScaling::none;
    } network;

    struct TrainCfg {
        int epochs = 0;  // 0 -> scenario default
        int batch_size = 32;
        double learning_rate = 0.0;  // 0 -> scenario default
        double beta1 = 0.9;
        double beta2 = 0.999;
        double epsilon = 1e-8;
    } train;

    struct McCfg {
        std::int64_t samples = 0;  // 0 -> scenario default
        int grid_points = 101;
        int workers = 0;  // 0 -> hardware default; does not affect results
    } mc;

    // Scenario defaults: the single-layer study trains 600 epochs on n=3200
    // and estimates moments from 10^6 passes; the non-linear study trains
    // 1000 epochs on n=32000 and draws 300 passes per grid point. The
    // single-layer runs use a smaller step size so the K parallel weights
    // tighten around the common optimum instead of diffusing under target
    // noise; 1e-3 demonstrably leaves too much weight spread on wide-noise
    // targets.
    void apply_defaults() {
        if (dataset.n == 0) dataset.n = scenario == Scenario::single ? 3200 : 32000;
        if (train.epochs == 0) train.epochs = scenario == Scenario::single ? 600 : 1000;
        if (train.learning_rate == 0.0)
            train.learning_rate = scenario == Scenario::single ? 1e-4 : 1e-3;
        if (mc.samples == 0) mc.samples = scenario == Scenario::single ? 1000000 : 300;
    }

    void validate() const {
        if (out_dir.empty()) throw ValidationError("config: out_dir is required");
        if (scenario == Scenario::mlp && dataset.kind == "gaussian")
            throw ValidationError("config: the mlp scenario needs an (x, y) shape dataset");
        if (scenario == Scenario::single && network.units < 1)
            throw ValidationError("config: network.units must be >= 1");
        DropoutSpec{network.drop_rate, network.scaling}.validate();
        adam_config().validate();
        TrainConfig{train.epochs, train.batch_size, 0}.validate();
        if (mc.samples < 2) throw ValidationError("config: mc.samples must be >= 2");
        if (mc.grid_points < 1) throw ValidationError("config: mc.grid_points must be >= 1");
    }

    AdamConfig adam_config() const {
        return AdamConfig{train.learning_rate, train.beta1, train.beta2, train.epsilon};
    }

    DropoutSpec dropout_spec() const { return DropoutSpec{network.drop_rate, network.scaling}; }

    std::string dataset_label() const {
        if (!dataset.label.empty()) return dataset.label;
        if (dataset.kind == "gaussian")
            return "N(" + format_double(dataset.mu) + "," + format_double(dataset.sigma) + ")";
        return dataset.kind;
    }

    // Stage streams, all children of the root seed.
    std::uint64_t data_seed() const { return RngStream(seed).split(1).key(); }
    std::uint64_t init_seed() const { return RngStream(seed).split(2).key(); }
    std::uint64_t shuffle_seed() const { return RngStream(seed).split(3).key(); }
    std::uint64_t train_mask_seed() const { return RngStream(seed).split(4).key(); }
    std::uint64_t mc_seed() const { return RngStream(seed).split(5).key(); }
};

inline Json to_json(const ExperimentConfig& cfg) {
    return Json{
        {"scenario", to_string(cfg.scenario)},
        {"seed", cfg.seed},
        {"out_dir", cfg.out_dir},
        {"dataset",
         {{"kind", cfg.dataset.kind},
          {"mu", cfg.dataset.mu},
          {"sigma", cfg.dataset.sigma},
          {"n", cfg.dataset.n},
          {"label", cfg.dataset_label()}}},
        {"network",
         {{"units", cfg.network.units},
          {"hidden", cfg.network.hidden},
          {"last_layer_bias", cfg.network.last_layer_bias},
          {"drop_rate", cfg.network.drop_rate},
          {"scaling", to_string(cfg.network.scaling)}}},
        {"train",
         {{"epochs", cfg.train.epochs},
          {"batch_size", cfg.train.batch_size},
          {"learning_rate", cfg.train.learning_rate},
          {"beta1", cfg.train.beta1},
          {"beta2", cfg.train.beta2},
          {"epsilon", cfg.train.epsilon}}},
        {"mc",
         {{"samples", cfg.mc.samples},
          {"grid_points", cfg.mc.grid_points},
          {"workers", cfg.mc.workers}}}};
}

/// FNV-1a over the canonical config JSON.
inline std::string config_hash(const ExperimentConfig& cfg) {
    const std::string s = to_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    static const char* hex = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = hex[h & 0xf];
        h >>= 4;
    }
    buf[16] = '\0';
    return std::string(buf);
}

inline ExperimentConfig config_from_toml(const TomlTable& t) {
    static const std::vector<std::string> known = {
        "scenario",        "seed",
        "out_dir",         "dataset.kind",
        "dataset.mu",      "dataset.sigma",
        "dataset.n",       "dataset.label",
        "network.units",   "network.hidden",
        "network.last_layer_bias", "network.drop_rate",
        "network.scaling", "train.epochs",
        "train.batch_size", "train.learning_rate",
        "train.beta1",     "train.beta2",
        "train.epsilon",   "mc.samples",
        "mc.grid_points",  "mc.workers"};
    for (const auto& key : t.keys()) {
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ValidationError("unknown config key '" + key + "'");
    }

    ExperimentConfig cfg;
    cfg.scenario = scenario_from_string(t.get_string("scenario"));
    cfg.seed = static_cast<std::uint64_t>(t.get_or<std::int64_t>("seed", 0));
    cfg.out_dir = t.get_or<std::string>("out_dir", "");
    cfg.dataset.kind = t.get_or<std::string>("dataset.kind", cfg.dataset.kind);
    cfg.dataset.mu = t.get_or<double>("dataset.mu", cfg.dataset.mu);
    cfg.dataset.sigma = t.get_or<double>("dataset.sigma", cfg.dataset.sigma);
    cfg.dataset.n = static_cast<std::size_t>(t.get_or<std::int64_t>("dataset.n", 0));
    cfg.dataset.label = t.get_or<std::string>("dataset.label", "");
    cfg.network.units = t.get_or<int>("network.units", cfg.network.units);
    if (t.contains("network.hidden")) {
        cfg.network.hidden.clear();
        for (auto h : t.get_int_array("network.hidden"))
            cfg.network.hidden.push_back(static_cast<int>(h));
    }
    cfg.network.last_layer_bias =
        t.get_or<bool>("network.last_layer_bias", cfg.network.last_layer_bias);
    cfg.network.drop_rate = t.get_or<double>("network.drop_rate", cfg.network.drop_rate);
    cfg.network.scaling =
        mask_scaling_from_string(t.get_or<std::string>("network.scaling", "none"));
    cfg.train.epochs = t.get_or<int>("train.epochs", 0);
    cfg.train.batch_size = t.get_or<int>("train.batch_size", cfg.train.batch_size);
    cfg.train.learning_rate = t.get_or<double>("train.learning_rate", 0.0);
    cfg.train.beta1 = t.get_or<double>("train.beta1", cfg.train.beta1);
    cfg.train.beta2 = t.get_or<double>("train.beta2", cfg.train.beta2);
    cfg.train.epsilon = t.get_or<double>("train.epsilon", cfg.train.epsilon);
    cfg.mc.samples = t.get_or<std::int64_t>("mc.samples", 0);
    cfg.mc.grid_points = t.get_or<int>("mc.grid_points", cfg.mc.grid_points);
    cfg.mc.workers = t.get_or<int>("mc.workers", 0);
    cfg.apply_defaults();
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    return config_from_toml(TomlTable::parse(read_text_file(path)));
}

/// Outcome of one experiment. Theoretical columns are present only for the
/// single scenario; band summaries only for the mlp scenario.
struct RunReport {
    std::string scenario;
    std::string dataset_label;
    double drop_rate = 0.0;
    bool success = false;
    std::string error;

    std::optional<double> w_theory;
    std::optional<double> var_theory;
    std::optional<double> w_exp;        // mean learned weight (single)
    std::optional<double> mc_variance;  // sample variance of f (single)

    std::optional<double> grid_mean_sigma;
    std::optional<double> sigma_cv;               // std(sigma)/mean(sigma) across the grid
    std::optional<double> sigma_mean_correlation; // pearson(sigma, |mean|)

    std::string loss_trace_file;
    std::string mc_file;
    double wall_seconds = 0.0;
    std::string config_hash;
};

inline Json to_json(const RunReport& r) {
    Json j{{"scenario", r.scenario},
           {"dataset", r.dataset_label},
           {"drop_rate", r.drop_rate},
           {"success", r.success},
           {"loss_trace_file", r.loss_trace_file},
           {"mc_file", r.mc_file},
           {"wall_seconds", r.wall_seconds},
           {"config_hash", r.config_hash}};
    if (!r.error.empty()) j["error"] = r.error;
    if (r.w_theory) j["w_theory"] = *r.w_theory;
    if (r.var_theory) j["var_theory"] = *r.var_theory;
    if (r.w_exp) j["w_exp"] = *r.w_exp;
    if (r.mc_variance) j["mc_variance"] = *r.mc_variance;
    if (r.grid_mean_sigma) j["grid_mean_sigma"] = *r.grid_mean_sigma;
    if (r.sigma_cv) j["sigma_cv"] = *r.sigma_cv;
    if (r.sigma_mean_correlation) j["sigma_mean_correlation"] = *r.sigma_mean_correlation;
    return j;
}

inline RunReport report_from_json(const Json& j) {
    RunReport r;
    r.scenario = j.at("scenario").get<std::string>();
    r.dataset_label = j.at("dataset").get<std::string>();
    r.drop_rate = j.at("drop_rate").get<double>();
    r.success = j.at("success").get<bool>();
    r.loss_trace_file = j.at("loss_trace_file").get<std::string>();
    r.mc_file = j.at("mc_file").get<std::string>();
    r.wall_seconds = j.at("wall_seconds").get<double>();
    r.config_hash = j.at("config_hash").get<std::string>();
    if (j.contains("error")) r.error = j.at("error").get<std::string>();
    const auto opt = [&](const char* key) -> std::optional<double> {
        if (j.contains(key)) return j.at(key).get<double>();
        return std::nullopt;
    };
    r.w_theory = opt("w_theory");
    r.var_theory = opt("var_theory");
    r.w_exp = opt("w_exp");
    r.mc_variance = opt("mc_variance");
    r.grid_mean_sigma = opt("grid_mean_sigma");
    r.sigma_cv = opt("sigma_cv");
    r.sigma_mean_correlation = opt("sigma_mean_correlation");
    return r;
}

namespace detail {

inline int resolve_workers(int configured) {
    if (configured > 0) return configured;
    const unsigned hc = std::thread::hardware_concurrency();
    return static_cast<int>(std::min<unsigned>(hc == 0 ? 1 : hc, 8));
}

inline Dataset make_dataset(const ExperimentConfig& cfg) {
    if (cfg.dataset.kind == "gaussian")
        return gen_gaussian(cfg.dataset.mu, cfg.dataset.sigma, cfg.dataset.n, cfg.data_seed());
    return gen_function(shape_from_string(cfg.dataset.kind), cfg.dataset.n, cfg.data_seed());
}

inline void write_run_metadata(const ExperimentConfig& cfg) {
    Json meta{{"config", to_json(cfg)},
              {"config_hash", config_hash(cfg)},
              {"derived_seeds",
               {{"data", cfg.data_seed()},
                {"init", cfg.init_seed()},
                {"shuffle", cfg.shuffle_seed()},
                {"train_masks", cfg.train_mask_seed()},
                {"mc", cfg.mc_seed()}}},
              {"version", kVersion}};
    write_text_file(std::filesystem::path(cfg.out_dir) / "run_meta.json", meta.dump(2) + "\n");
}

inline void write_report(const ExperimentConfig& cfg, const RunReport& report) {
    write_text_file(std::filesystem::path(cfg.out_dir) / "report.json",
                    to_json(report).dump(2) + "\n");
}

}  // namespace detail

/// Train the single-layer model on a constant-target dataset, then compare
/// the learned weights and the Monte-Carlo moments against the closed-form
/// prediction at the dataset's mean.
inline RunReport run_single(const ExperimentConfig& cfg) {
    if (cfg.scenario != Scenario::single)
        throw ValidationError("run_single: config scenario is not 'single'");
    cfg.validate();
    std::filesystem::create_directories(cfg.out_dir);
    detail::write_run_metadata(cfg);

    const auto t0 = std::chrono::steady_clock::now();
    RunReport report;
    report.scenario = "single";
    report.dataset_label = cfg.dataset_label();
    report.drop_rate = cfg.network.drop_rate;
    report.config_hash = config_hash(cfg);
    report.loss_trace_file = "loss.csv";
    report.mc_file = "mc.csv";

    Dataset data = detail::make_dataset(cfg);
    data.xs.reset();  // constant-input model: targets only

    const SingleLayerSpec spec{cfg.network.units, cfg.network.drop_rate, data.y_bar};
    const TheoryPrediction theory = predict_moments(spec);
    report.w_theory = theory.w_opt;
    report.var_theory = theory.var_f;

    const NetworkDef def = single_layer_def(cfg.network.units, cfg.dropout_spec());
    NetworkState state = init_network(def, cfg.init_seed());
    MaskSource train_masks(cfg.train_mask_seed());

    try {
        TrainResult tr = train(def, std::move(state), data,
                               TrainConfig{cfg.train.epochs, cfg.train.batch_size,
                                           cfg.shuffle_seed()},
                               cfg.adam_config(), train_masks);
        state = std::move(tr.state);
        write_text_file(std::filesystem::path(cfg.out_dir) / "loss.csv", to_csv(tr.trace));
    } catch (const TrainingDivergedError& e) {
        report.error = e.what();
        report.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        detail::write_report(cfg, report);
        throw;
    }

    const std::vector<double> ones(static_cast<std::size_t>(cfg.network.units), 1.0);
    const McPoint mc = mc_sample(def, state, ones, cfg.mc.samples, MaskSource(cfg.mc_seed()),
                                 detail::resolve_workers(cfg.mc.workers));
    MCResult mc_result;
    mc_result.points = {mc};
    mc_result.samples = cfg.mc.samples;
    mc_result.seed = cfg.mc_seed();

    report.w_exp = state.dense[0].weights.mean();
    report.mc_variance = mc.sample_variance;
    report.success = true;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    write_text_file(std::filesystem::path(cfg.out_dir) / "mc.csv", to_csv(mc_result));
    write_text_file(std::filesystem::path(cfg.out_dir) / "mc.json", to_json(mc_result).dump(2) + "\n");
    write_text_file(std::filesystem::path(cfg.out_dir) / "network.json",
                    Json{{"def", to_json(def)}, {"state", to_json(state)}}.dump() + "\n");
    detail::write_report(cfg, report);
    return report;
}

/// Train the non-linear network on a 1-d function dataset and trace the
/// Monte-Carlo mean and bands over an evaluation grid.
inline RunReport run_mlp(const ExperimentConfig& cfg) {
    if (cfg.scenario != Scenario::mlp)
        throw ValidationError("run_mlp: config scenario is not 'mlp'");
    cfg.validate();
    std::filesystem::create_directories(cfg.out_dir);
    detail::write_run_metadata(cfg);

    const auto t0 = std::chrono::steady_clock::now();
    RunReport report;
    report.scenario = "mlp";
    report.dataset_label = cfg.dataset_label();
    report.drop_rate = cfg.network.drop_rate;
    report.config_hash = config_hash(cfg);
    report.loss_trace_file = "loss.csv";
    report.mc_file = "mc.csv";

    const Dataset data = detail::make_dataset(cfg);
    const NetworkDef def =
        mlp_def(cfg.network.hidden, cfg.dropout_spec(), cfg.network.last_layer_bias);
    NetworkState state = init_network(def, cfg.init_seed());
    MaskSource train_masks(cfg.train_mask_seed());

    try {
        TrainResult tr = train(def, std::move(state), data,
                               TrainConfig{cfg.train.epochs, cfg.train.batch_size,
                                           cfg.shuffle_seed()},
                               cfg.adam_config(), train_masks);
        state = std::move(tr.state);
        write_text_file(std::filesystem::path(cfg.out_dir) / "loss.csv", to_csv(tr.trace));
    } catch (const TrainingDivergedError& e) {
        report.error = e.what();
        report.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        detail::write_report(cfg, report);
        throw;
    }

    const std::vector<double> grid = linspace(0.0, 1.0, cfg.mc.grid_points);
    MCResult mc = mc_curve(def, state, grid, cfg.mc.samples, MaskSource(cfg.mc_seed()),
                           detail::resolve_workers(cfg.mc.workers));
    mc.seed = cfg.mc_seed();

    std::vector<double> sigmas, abs_means;
    sigmas.reserve(mc.points.size());
    abs_means.reserve(mc.points.size());
    for (const auto& p : mc.points) {
        sigmas.push_back(p.sigma());
        abs_means.push_back(std::abs(p.sample_mean));
    }
    report.grid_mean_sigma = mean_of(sigmas);
    report.sigma_cv = sample_std(sigmas) / mean_of(sigmas);
    report.sigma_mean_correlation = pearson(sigmas, abs_means);
    report.success = true;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    write_text_file(std::filesystem::path(cfg.out_dir) / "mc.csv", to_csv(mc));
    write_text_file(std::filesystem::path(cfg.out_dir) / "mc.json", to_json(mc).dump(2) + "\n");
    write_text_file(std::filesystem::path(cfg.out_dir) / "network.json",
                    Json{{"def", to_json(def)}, {"state", to_json(state)}}.dump() + "\n");
    detail::write_report(cfg, report);
    return report;
}

inline RunReport run_experiment(const ExperimentConfig& cfg) {
    return cfg.scenario == Scenario::single ? run_single(cfg) : run_mlp(cfg);
}

/// Side-by-side table of single-layer runs, theoretical vs experimental.
struct ReportTable {
    std::string csv;
    std::string text;
};

inline ReportTable report_table(const std::vector<RunReport>& reports) {
    if (reports.empty()) throw ValidationError("report_table: no reports given");
    for (const auto& r : reports)
        if (r.scenario != "single")
            throw ValidationError(
                "report_table: mixed scenarios; the comparison table covers single-layer runs "
                "only");

    std::string csv = "p_d,dataset,w_theory,var_theory,w_exp,var_exp\n";
    for (const auto& r : reports) {
        csv += format_double(r.drop_rate) + "," + r.dataset_label + "," +
               format_double(r.w_theory.value_or(0.0)) + "," +
               format_double(r.var_theory.value_or(0.0)) + "," +
               format_double(r.w_exp.value_or(0.0)) + "," +
               format_double(r.mc_variance.value_or(0.0)) + "\n";
    }

    const auto fixed3 = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3f", v);
        return std::string(buf);
    };
    std::string text;
    char line[160];
    std::snprintf(line, sizeof(line), "%-6s %-14s %10s %12s %10s %12s\n", "p_d", "dataset",
                  "w_theory", "var_theory", "w_exp", "var_exp");
    text += line;
    for (const auto& r : reports) {
        std::snprintf(line, sizeof(line), "%-6s %-14s %10s %12s %10s %12s\n",
                      fixed3(r.drop_rate).c_str(), r.dataset_label.c_str(),
                      fixed3(r.w_theory.value_or(0.0)).c_str(),
                      fixed3(r.var_theory.value_or(0.0)).c_str(),
                      fixed3(r.w_exp.value_or(0.0)).c_str(),
                      fixed3(r.mc_variance.value_or(0.0)).c_str());
        text += line;
    }
    return ReportTable{csv, text};
}

}  // namespace mcdlab
