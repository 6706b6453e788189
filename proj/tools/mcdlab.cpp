// Command-line front end: dataset generation, closed-form queries, training,
// Monte-Carlo evaluation, whole-experiment runs and report tables.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "mcdlab/experiment.hpp"

namespace fs = std::filesystem;
using namespace mcdlab;

namespace {

int fail(const std::string& type, const std::string& message) {
    std::cerr << Json{{"error", {{"type", type}, {"message", message}}}}.dump() << "\n";
    return 1;
}

void apply_overrides(ExperimentConfig& cfg, const std::string& out_dir, std::int64_t seed,
                     std::int64_t samples) {
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (samples > 0) cfg.mc.samples = samples;
}

int cmd_gen_data(const std::string& kind, double mu, double sigma, std::int64_t n,
                 std::int64_t seed, const std::string& out_dir) {
    const auto dir = fs::path(out_dir);
    fs::create_directories(dir);
    const std::uint64_t s = seed < 0 ? 0 : static_cast<std::uint64_t>(seed);
    Dataset data;
    std::string stem;
    if (kind == "gaussian") {
        data = gen_gaussian(mu, sigma, static_cast<std::size_t>(n), s);
        stem = "gaussian";
    } else {
        data = gen_function(shape_from_string(kind), static_cast<std::size_t>(n), s);
        stem = kind;
    }
    write_text_file(dir / (stem + ".csv"), to_csv(data));
    write_text_file(dir / (stem + ".json"), provenance_json(data, kVersion).dump(2) + "\n");
    std::cout << (dir / (stem + ".csv")).string() << "\n";
    return 0;
}

int cmd_theory(int units, double drop_rate, double y_bar) {
    const TheoryPrediction p = predict_moments(SingleLayerSpec{units, drop_rate, y_bar});
    std::cout << to_json(p).dump(2) << "\n";
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& out_dir, std::int64_t seed) {
    ExperimentConfig cfg = load_config(config_path);
    apply_overrides(cfg, out_dir, seed, 0);
    cfg.validate();
    fs::create_directories(cfg.out_dir);

    Dataset data = cfg.scenario == Scenario::single
                       ? [&] {
                             Dataset d = gen_gaussian(cfg.dataset.mu, cfg.dataset.sigma,
                                                      cfg.dataset.n, cfg.data_seed());
                             if (cfg.dataset.kind != "gaussian")
                                 d = gen_function(shape_from_string(cfg.dataset.kind),
                                                  cfg.dataset.n, cfg.data_seed());
                             d.xs.reset();
                             return d;
                         }()
                       : gen_function(shape_from_string(cfg.dataset.kind), cfg.dataset.n,
                                      cfg.data_seed());

    const NetworkDef def =
        cfg.scenario == Scenario::single
            ? single_layer_def(cfg.network.units, cfg.dropout_spec())
            : mlp_def(cfg.network.hidden, cfg.dropout_spec(), cfg.network.last_layer_bias);
    NetworkState state = init_network(def, cfg.init_seed());
    MaskSource masks(cfg.train_mask_seed());
    TrainResult tr = train(def, std::move(state), data,
                           TrainConfig{cfg.train.epochs, cfg.train.batch_size, cfg.shuffle_seed()},
                           cfg.adam_config(), masks);

    const auto dir = fs::path(cfg.out_dir);
    write_text_file(dir / "loss.csv", to_csv(tr.trace));
    write_text_file(dir / "network.json",
                    Json{{"def", to_json(def)}, {"state", to_json(tr.state)}}.dump() + "\n");
    Json meta{{"config", to_json(cfg)}, {"config_hash", config_hash(cfg)}, {"version", kVersion}};
    write_text_file(dir / "run_meta.json", meta.dump(2) + "\n");
    std::cout << (dir / "network.json").string() << "\n";
    return 0;
}

int cmd_mc_eval(const std::string& network_path, std::int64_t samples, std::int64_t seed,
                const std::string& out_dir, int grid_points, int workers) {
    const Json doc = Json::parse(read_text_file(network_path));
    const NetworkDef def = network_def_from_json(doc.at("def"));
    const NetworkState state = network_state_from_json(doc.at("state"));

    const std::uint64_t s = seed < 0 ? 0 : static_cast<std::uint64_t>(seed);
    const std::int64_t n_samples = samples > 0 ? samples : (def.input_dim == 1 ? 300 : 1000000);
    MCResult result;
    if (def.input_dim == 1) {
        result = mc_curve(def, state, linspace(0.0, 1.0, grid_points), n_samples, MaskSource(s),
                          workers > 0 ? workers : 2);
    } else {
        const std::vector<double> ones(static_cast<std::size_t>(def.input_dim), 1.0);
        result.points = {mc_sample(def, state, ones, n_samples, MaskSource(s),
                                   workers > 0 ? workers : 2)};
        result.samples = n_samples;
    }
    result.seed = s;

    const auto dir = fs::path(out_dir.empty() ? "." : out_dir);
    fs::create_directories(dir);
    write_text_file(dir / "mc.csv", to_csv(result));
    write_text_file(dir / "mc.json", to_json(result).dump(2) + "\n");
    std::cout << (dir / "mc.csv").string() << "\n";
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, std::int64_t seed,
            std::int64_t samples) {
    ExperimentConfig cfg = load_config(config_path);
    apply_overrides(cfg, out_dir, seed, samples);
    const RunReport report = run_experiment(cfg);
    std::cout << to_json(report).dump(2) << "\n";
    return 0;
}

int cmd_report(const std::vector<std::string>& dirs, const std::string& out_csv) {
    std::vector<RunReport> reports;
    for (const auto& d : dirs)
        reports.push_back(report_from_json(Json::parse(read_text_file(fs::path(d) / "report.json"))));
    const ReportTable table = report_table(reports);
    std::cout << table.text;
    if (!out_csv.empty()) {
        write_text_file(out_csv, table.csv);
        std::cout << "wrote " << out_csv << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte-Carlo dropout laboratory"};
    app.require_subcommand(1);

    // gen-data
    std::string gd_kind = "diamond", gd_out = ".";
    double gd_mu = 10.0, gd_sigma = 1.0;
    std::int64_t gd_n = 32000, gd_seed = -1;
    auto* gen = app.add_subcommand("gen-data", "Generate a dataset as CSV plus provenance JSON");
    gen->add_option("--kind", gd_kind,
                    "gaussian | diamond | saw | triangle | line | square");
    gen->add_option("--mu", gd_mu, "gaussian mean");
    gen->add_option("--sigma", gd_sigma, "gaussian standard deviation");
    gen->add_option("--n", gd_n, "sample count");
    gen->add_option("--seed", gd_seed, "generator seed");
    gen->add_option("--out-dir", gd_out, "output directory");

    // theory
    int th_units = 500;
    double th_rate = 0.5, th_ybar = 10.0;
    auto* theory = app.add_subcommand("theory", "Closed-form optimum and predictive moments");
    theory->add_option("--units", th_units, "parallel unit count K")->required();
    theory->add_option("--drop-rate", th_rate, "drop probability in [0,1)")->required();
    theory->add_option("--y-bar", th_ybar, "ground-truth mean")->required();

    // train
    std::string tr_config, tr_out;
    std::int64_t tr_seed = -1;
    auto* trn = app.add_subcommand("train", "Train a network from a TOML config");
    trn->add_option("config", tr_config, "experiment config (TOML)")->required();
    trn->add_option("--out-dir", tr_out, "override config out_dir");
    trn->add_option("--seed", tr_seed, "override config seed");

    // mc-eval
    std::string mc_network, mc_out;
    std::int64_t mc_samples = -1, mc_seed = -1;
    int mc_grid = 101, mc_workers = 0;
    auto* mce = app.add_subcommand("mc-eval", "Monte-Carlo evaluation of a saved network");
    mce->add_option("--network", mc_network, "network.json written by train/run")->required();
    mce->add_option("--samples", mc_samples, "stochastic passes per point");
    mce->add_option("--seed", mc_seed, "sampling seed");
    mce->add_option("--out-dir", mc_out, "output directory");
    mce->add_option("--grid", mc_grid, "grid points over [0,1] for scalar-input networks");
    mce->add_option("--workers", mc_workers, "worker threads (results are worker-independent)");

    // run
    std::string run_config, run_out;
    std::int64_t run_seed = -1, run_samples = -1;
    auto* run = app.add_subcommand("run", "Run a full experiment from a TOML config");
    run->add_option("config", run_config, "experiment config (TOML)")->required();
    run->add_option("--out-dir", run_out, "override config out_dir");
    run->add_option("--seed", run_seed, "override config seed");
    run->add_option("--samples", run_samples, "override MC sample count");

    // report
    std::vector<std::string> rep_dirs;
    std::string rep_csv;
    auto* rep = app.add_subcommand("report", "Tabulate single-layer run reports");
    rep->add_option("dirs", rep_dirs, "run output directories")->required();
    rep->add_option("--out", rep_csv, "also write the table as CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_data(gd_kind, gd_mu, gd_sigma, gd_n, gd_seed, gd_out);
        if (theory->parsed()) return cmd_theory(th_units, th_rate, th_ybar);
        if (trn->parsed()) return cmd_train(tr_config, tr_out, tr_seed);
        if (mce->parsed())
            return cmd_mc_eval(mc_network, mc_samples, mc_seed, mc_out, mc_grid, mc_workers);
        if (run->parsed()) return cmd_run(run_config, run_out, run_seed, run_samples);
        if (rep->parsed()) return cmd_report(rep_dirs, rep_csv);
    } catch (const TrainingDivergedError& e) {
        return fail("training_diverged", e.what());
    } catch (const ValidationError& e) {
        return fail("validation", e.what());
    } catch (const NumericError& e) {
        return fail("numeric", e.what());
    } catch (const Error& e) {
        return fail("io", e.what());
    } catch (const std::exception& e) {
        return fail("internal", e.what());
    }
    return 0;
}
