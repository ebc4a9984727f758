// Command-line front end for the trust-management experiment pipeline.
//
//   gantrust train    --out-dir DIR [--config FILE] [--seed N]
//   gantrust simulate --out-dir DIR [--config FILE] [--seed N] [--malicious-pct X]
//   gantrust sweep    --out-dir DIR [--config FILE] [--seed N]
//   gantrust plot     --out-dir DIR
//
// Exit codes: 0 success, 2 configuration error, 3 training divergence,
// 1 any other failure.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gantrust/harness.hpp"
#include "gantrust/synthetic.hpp"

namespace {

using namespace gantrust;

ScenarioConfig assemble_config(const std::string& config_path,
                               const std::optional<std::uint64_t>& seed,
                               const std::optional<double>& malicious_pct) {
    ScenarioConfig cfg = config_path.empty() ? ScenarioConfig{} : load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (malicious_pct) cfg.malicious_pct = *malicious_pct;
    validate_config(cfg);
    return cfg;
}

void ensure_out_dir(const std::string& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory: " + out_dir);
}

// Desk-scale training run on the synthetic Higher/Medium mixture; its only
// artifact is the per-epoch curve table the chart step consumes.
void cmd_train(const ScenarioConfig& cfg, const std::string& out_dir) {
    Rng rng(derive_seed(cfg.seed, 0x73796e));
    const LabeledDataset data =
        synthetic_training_set(250, 250, static_cast<std::size_t>(cfg.vector_len), rng);
    AutoencoderModel model = build_model(ae_config_from(cfg), derive_seed(cfg.seed, 0x6d6f64));
    TrainStats stats = train(model, data, cfg.epochs_initial,
                             static_cast<std::size_t>(cfg.batch_size),
                             derive_seed(cfg.seed, 0x747261));
    calibrate_thresholds(model, data);
    ensure_out_dir(out_dir);
    write_training_csv(out_dir + "/training.csv", stats);
    const EpochStats& last = stats.epochs.empty() ? EpochStats{} : stats.epochs.back();
    std::printf("trained %d epochs on %zu vectors: score_real %.3f score_fake %.3f "
                "recon_loss %.4f tau_rec %.4f\n",
                cfg.epochs_initial, data.size(), last.score_real, last.score_fake,
                last.recon_loss, model.tau_rec);
    std::printf("wrote %s/training.csv\n", out_dir.c_str());
}

void cmd_simulate(const ScenarioConfig& cfg, const std::string& out_dir) {
    ScenarioResult res = run_scenario(cfg);
    ensure_out_dir(out_dir);
    write_metrics_csv(out_dir + "/metrics.csv", res.state);
    write_events_csv(out_dir + "/events.csv", res.state);
    write_summary_json(out_dir + "/summary.json", res.summary, cfg);
    if (res.summary.trained)
        write_training_csv(out_dir + "/training.csv", res.state.last_train_stats);
    std::printf("simulated %d rounds at %.0f%% malicious (seed %llu): security_rate %.4f "
                "attacks %lld fnd %d hnd %d throughput %lld\n",
                res.state.round, cfg.malicious_pct,
                static_cast<unsigned long long>(cfg.seed), res.summary.security_rate,
                res.summary.total_attacks, res.summary.fnd, res.summary.hnd,
                res.summary.throughput);
    std::printf("wrote %s/{metrics.csv,events.csv,summary.json%s}\n", out_dir.c_str(),
                res.summary.trained ? ",training.csv" : "");
}

void cmd_sweep(const ScenarioConfig& cfg, const std::string& out_dir) {
    SweepTable table = sweep_malicious(cfg);
    ensure_out_dir(out_dir);
    write_sweep_csv(out_dir + "/sweep.csv", table);
    for (const SweepAggregate& a : table.aggregates)
        std::printf("%2.0f%% malicious: security_rate %.4f±%.4f attacks %.1f±%.1f "
                    "hnd %.1f±%.1f throughput %.1f±%.1f\n",
                    a.malicious_pct, a.security_rate.mean, a.security_rate.stddev,
                    a.total_attacks.mean, a.total_attacks.stddev, a.hnd.mean, a.hnd.stddev,
                    a.throughput.mean, a.throughput.stddev);
    std::printf("wrote %s/sweep.csv\n", out_dir.c_str());
}

CsvTable read_if_present(const std::string& path) {
    if (!std::filesystem::exists(path)) return CsvTable{};
    return read_csv(path);
}

void cmd_plot(const std::string& out_dir) {
    const CsvTable training = read_if_present(out_dir + "/training.csv");
    const CsvTable sweep = read_if_present(out_dir + "/sweep.csv");
    ensure_out_dir(out_dir);
    emit_plots(training, sweep, out_dir);
    std::printf("wrote %s/{losses.svg,scores.svg,security.svg,performance.svg}\n",
                out_dir.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adversarially trained trust management: training, simulation, sweeps, charts"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<double> malicious_pct;

    auto add_common = [&](CLI::App* sub, bool with_malicious) {
        sub->add_option("--config", config_path, "flat key = value scenario file");
        sub->add_option("--seed", seed, "master random seed (overrides the config)");
        sub->add_option("--out-dir", out_dir, "artifact directory (created if missing)");
        if (with_malicious)
            sub->add_option("--malicious-pct", malicious_pct,
                            "malicious device percentage (overrides the config)");
    };
    CLI::App* train_cmd =
        app.add_subcommand("train", "train one model on the synthetic mixture");
    add_common(train_cmd, false);
    CLI::App* simulate_cmd = app.add_subcommand("simulate", "run one network scenario");
    add_common(simulate_cmd, true);
    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "run the 10..50% malicious sweep");
    add_common(sweep_cmd, false);
    CLI::App* plot_cmd =
        app.add_subcommand("plot", "render charts from tables in the artifact directory");
    plot_cmd->add_option("--out-dir", out_dir, "artifact directory holding the tables");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;  // bad usage is a configuration error
    }

    try {
        if (train_cmd->parsed())
            cmd_train(assemble_config(config_path, seed, std::nullopt), out_dir);
        else if (simulate_cmd->parsed())
            cmd_simulate(assemble_config(config_path, seed, malicious_pct), out_dir);
        else if (sweep_cmd->parsed())
            cmd_sweep(assemble_config(config_path, seed, std::nullopt), out_dir);
        else if (plot_cmd->parsed())
            cmd_plot(out_dir);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const TrainingDivergence& e) {
        std::fprintf(stderr, "training diverged: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
