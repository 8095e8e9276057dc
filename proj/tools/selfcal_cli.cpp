#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "selfcal/experiment.hpp"
#include "selfcal/serialization.hpp"

namespace fs = std::filesystem;
using namespace selfcal;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNotConverged = 3;

// Noiseless recoveries use this tolerance unless the config sets eta.
constexpr double kNoiselessEta = 1e-8;

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    std::optional<int> threads;
    bool no_reduce = false;
    std::optional<std::string> group_mode;
    bool no_timing = false;
};

void add_common(CLI::App *cmd, CommonFlags &flags) {
    cmd->add_option("--config", flags.config_path, "JSON experiment config");
    cmd->add_option("--seed", flags.seed, "Base RNG seed (overrides the config)");
    cmd->add_option("--out", flags.out_dir, "Output directory");
    cmd->add_option("--threads", flags.threads, "Worker threads for trials")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--no-reduce", flags.no_reduce, "Disable the SVD reduction stage");
    cmd->add_option("--group-mode", flags.group_mode, "Group structure")
        ->check(CLI::IsMember({"grid", "row", "l1"}));
    cmd->add_flag("--no-timing", flags.no_timing,
                  "Write zeros in timing columns so outputs are reproducible");
}

ExperimentConfig resolve_config(const CommonFlags &flags) {
    ExperimentConfig cfg =
        flags.config_path.empty() ? ExperimentConfig{} : load_config(flags.config_path);
    if (flags.seed)
        cfg.base_seed = *flags.seed;
    if (flags.threads)
        cfg.threads = *flags.threads;
    if (flags.no_reduce)
        cfg.recovery.reduce = false;
    if (flags.group_mode) {
        try {
            cfg.recovery.group_mode = parse_group_mode(*flags.group_mode);
        } catch (const std::exception &e) {
            throw ConfigError(e.what());
        }
    }
    if (flags.no_timing)
        cfg.record_timing = false;
    cfg.validate();
    return cfg;
}

fs::path output_path(const CommonFlags &flags, const std::string &name) {
    fs::create_directories(flags.out_dir);
    return fs::path(flags.out_dir) / name;
}

void write_json(const fs::path &path, const json &j) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

std::ofstream open_csv(const fs::path &path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write '" + path.string() + "'");
    return out;
}

int cmd_simulate(const CommonFlags &flags, bool noiseless) {
    ExperimentConfig cfg = resolve_config(flags);
    if (noiseless)
        cfg.noise_sigma = 0.0;
    const Scene scene = gen_scene(cfg.array, cfg.doas_deg, cfg.num_snapshots, cfg.snr_db,
                                  cfg.h_spec, cfg.base_seed, cfg.noise_sigma);
    const MeasurementSet ms = simulate(cfg.array, scene, cfg.base_seed);
    json j = measurement_to_json(ms);
    j["array"] = array_config_to_json(cfg.array);
    j["snr_db"] = cfg.snr_db;
    const fs::path path = output_path(flags, "dataset.json");
    write_json(path, j);
    std::cout << "wrote " << path.string() << '\n';
    return kExitOk;
}

int cmd_recover(const CommonFlags &flags, const std::string &dataset_path) {
    ExperimentConfig cfg = resolve_config(flags);
    std::ifstream in(dataset_path);
    if (!in)
        throw ConfigError("cannot open dataset '" + dataset_path + "'");
    MeasurementSet ms;
    try {
        json j;
        in >> j;
        ms = measurement_from_json(j);
    } catch (const std::exception &e) {
        throw ConfigError("invalid dataset '" + dataset_path + "': " + e.what());
    }
    if (ms.Y.rows() != cfg.array.num_sensors)
        throw ConfigError("dataset has " + std::to_string(ms.Y.rows()) +
                          " sensors but the config has " +
                          std::to_string(cfg.array.num_sensors));

    int num_sources = cfg.num_sources();
    RecoveryOptions opts = cfg.recovery;
    if (ms.scene) {
        num_sources = ms.scene->num_sources();
        opts.noise_sigma = ms.scene->noise_sigma;
    }
    if (opts.noise_sigma == 0.0 && !opts.eta)
        opts.eta = kNoiselessEta;

    const RecoveryResult result = recover(cfg.array, ms.Y, num_sources, opts);
    json report = recovery_result_to_json(result, cfg.array.grid_deg);
    if (ms.scene)
        report["true_doas_deg"] = ms.scene->true_doas_deg;
    write_json(output_path(flags, "recovery.json"), report);
    auto csv = open_csv(output_path(flags, "spectrum.csv"));
    write_spectrum_csv(csv, result.spectrum, cfg.array.grid_deg);

    std::cout << "doas_deg:";
    for (double d : result.doas_deg)
        std::cout << ' ' << d;
    std::cout << "\nconverged: " << (result.report.converged ? "yes" : "no")
              << " after " << result.report.iterations << " iterations\n";
    return result.report.converged ? kExitOk : kExitNotConverged;
}

int cmd_sweep(const CommonFlags &flags, bool over_snr) {
    const ExperimentConfig cfg = resolve_config(flags);
    const std::string tag = over_snr ? "snr" : "snapshots";
    for (Method method : cfg.methods) {
        const SweepResult result =
            over_snr ? sweep_snr(cfg, method) : sweep_snapshots(cfg, method);
        const std::string suffix = tag + "_" + to_string(method) + ".csv";
        {
            auto csv = open_csv(output_path(flags, "sweep_" + suffix));
            if (over_snr)
                write_snr_csv(csv, result);
            else
                write_snapshots_csv(csv, result);
        }
        {
            auto csv = open_csv(output_path(flags, "trials_" + suffix));
            write_trials_csv(csv, result);
        }
        std::cout << to_string(method) << ":\n";
        for (const auto &p : result.points)
            std::cout << "  " << result.axis_name << '=' << p.axis << " rmse_deg=" << p.rmse_deg
                      << " success_rate=" << p.success_rate << " failures=" << p.failures
                      << '\n';
    }
    return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Joint array self-calibration and sparse DoA estimation"};
    app.require_subcommand(1);

    CommonFlags flags;
    bool noiseless = false;
    std::string dataset_path;

    auto *simulate_cmd = app.add_subcommand("simulate", "Generate one dataset");
    add_common(simulate_cmd, flags);
    simulate_cmd->add_flag("--noiseless", noiseless, "Simulate with zero noise");

    auto *recover_cmd = app.add_subcommand("recover", "Recover DoAs from a dataset");
    add_common(recover_cmd, flags);
    recover_cmd->add_option("--dataset", dataset_path, "dataset.json from simulate")
        ->required();

    auto *snr_cmd = app.add_subcommand("sweep-snr", "Monte Carlo RMSE versus SNR");
    add_common(snr_cmd, flags);

    auto *snap_cmd =
        app.add_subcommand("sweep-snapshots", "Monte Carlo RMSE and time versus snapshots");
    add_common(snap_cmd, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (simulate_cmd->parsed())
            return cmd_simulate(flags, noiseless);
        if (recover_cmd->parsed())
            return cmd_recover(flags, dataset_path);
        if (snr_cmd->parsed())
            return cmd_sweep(flags, true);
        return cmd_sweep(flags, false);
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
}
