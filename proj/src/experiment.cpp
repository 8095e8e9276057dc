#include "selfcal/experiment.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

namespace selfcal {

std::string to_string(Method method) {
    return method == Method::mmv ? "mmv" : "smv-l1";
}

Method parse_method(const std::string &name) {
    if (name == "mmv")
        return Method::mmv;
    if (name == "smv-l1")
        return Method::smv_l1;
    throw ConfigError("unknown method '" + name + "'");
}

// ---------------------------------------------------------------- config

void ExperimentConfig::validate() const {
    try {
        array.validate();
    } catch (const std::exception &e) {
        throw ConfigError(std::string("array: ") + e.what());
    }
    if (doas_deg.empty())
        throw ConfigError("scene.doas_deg must not be empty");
    for (double d : doas_deg)
        if (!array.grid_index(d))
            throw ConfigError("DoA " + std::to_string(d) + " is not on the grid");
    if (num_snapshots < 1)
        throw ConfigError("scene.num_snapshots must be positive");
    if (snr_list_db.empty())
        throw ConfigError("scene.snr_list_db must not be empty");
    if (snapshot_list.empty())
        throw ConfigError("scene.snapshot_list must not be empty");
    for (int L : snapshot_list)
        if (L < 1)
            throw ConfigError("snapshot counts must be positive");
    if (h_spec.explicit_h && h_spec.explicit_h->size() != array.calib_dim)
        throw ConfigError("scene.h length must equal calib_dim");
    if (noise_sigma < 0.0)
        throw ConfigError("scene.noise_sigma must be nonnegative");
    if (trials < 1)
        throw ConfigError("trials must be at least 1");
    if (threads < 1)
        throw ConfigError("threads must be at least 1");
    if (methods.empty())
        throw ConfigError("methods must not be empty");
    if (recovery.reduce_rank && *recovery.reduce_rank < 1)
        throw ConfigError("reduction.rank must be positive");
    try {
        recovery.solver.validate();
    } catch (const std::exception &e) {
        throw ConfigError(std::string("solver: ") + e.what());
    }
}

ExperimentConfig ExperimentConfig::from_json(const json &j) {
    ExperimentConfig cfg;
    try {
        cfg.array = array_config_from_json(j.value("array", json::object()));

        const json scene = j.value("scene", json::object());
        cfg.doas_deg = scene.value("doas_deg", cfg.doas_deg);
        cfg.num_snapshots = scene.value("num_snapshots", cfg.num_snapshots);
        cfg.snr_db = scene.value("snr_db", cfg.snr_db);
        cfg.snr_list_db = scene.value("snr_list_db", cfg.snr_list_db);
        cfg.snapshot_list = scene.value("snapshot_list", cfg.snapshot_list);
        cfg.noise_sigma = scene.value("noise_sigma", cfg.noise_sigma);
        if (scene.contains("h") && scene.at("h").is_array())
            cfg.h_spec.explicit_h = vector_from_json(scene.at("h"));

        const json solver = j.value("solver", json::object());
        SolverOptions &so = cfg.recovery.solver;
        so.mode = solver.value("mode", std::string("constrained")) == "regularized"
                      ? SolveMode::regularized
                      : SolveMode::constrained;
        so.lambda = solver.value("lambda", so.lambda);
        so.rho = solver.value("rho", so.rho);
        so.relaxation = solver.value("relaxation", so.relaxation);
        so.adapt_rho = solver.value("adapt_rho", so.adapt_rho);
        so.max_iters = solver.value("max_iters", so.max_iters);
        so.tol_primal = solver.value("tol_primal", so.tol_primal);
        so.tol_dual = solver.value("tol_dual", so.tol_dual);
        so.backend = parse_backend(solver.value("backend", std::string("auto")));
        so.record_trace = solver.value("record_trace", so.record_trace);
        cfg.recovery.group_mode =
            parse_group_mode(solver.value("group_mode", std::string("grid")));
        if (solver.contains("eta") && !solver.at("eta").is_null())
            cfg.recovery.eta = solver.at("eta").get<double>();
        cfg.recovery.eta_slack = solver.value("eta_slack", cfg.recovery.eta_slack);

        const json reduction = j.value("reduction", json::object());
        cfg.recovery.reduce = reduction.value("enabled", cfg.recovery.reduce);
        if (reduction.contains("rank") && !reduction.at("rank").is_null())
            cfg.recovery.reduce_rank = reduction.at("rank").get<int>();

        cfg.trials = j.value("trials", cfg.trials);
        cfg.base_seed = j.value("base_seed", cfg.base_seed);
        cfg.threads = j.value("threads", cfg.threads);
        cfg.record_timing = j.value("record_timing", cfg.record_timing);
        if (j.contains("methods")) {
            cfg.methods.clear();
            for (const auto &name : j.at("methods").get<std::vector<std::string>>())
                cfg.methods.push_back(parse_method(name));
        }
    } catch (const ConfigError &) {
        throw;
    } catch (const std::exception &e) {
        throw ConfigError(e.what());
    }
    cfg.recovery.noise_sigma = cfg.noise_sigma;
    cfg.validate();
    return cfg;
}

json ExperimentConfig::to_json() const {
    const SolverOptions &so = recovery.solver;
    json scene = {{"doas_deg", doas_deg},
                  {"num_snapshots", num_snapshots},
                  {"snr_db", snr_db},
                  {"snr_list_db", snr_list_db},
                  {"snapshot_list", snapshot_list},
                  {"noise_sigma", noise_sigma}};
    scene["h"] = h_spec.explicit_h ? vector_to_json(*h_spec.explicit_h) : json("random");
    json solver = {{"mode", so.mode == SolveMode::regularized ? "regularized" : "constrained"},
                   {"lambda", so.lambda},
                   {"rho", so.rho},
                   {"relaxation", so.relaxation},
                   {"adapt_rho", so.adapt_rho},
                   {"max_iters", so.max_iters},
                   {"tol_primal", so.tol_primal},
                   {"tol_dual", so.tol_dual},
                   {"backend", to_string(so.backend)},
                   {"group_mode", to_string(recovery.group_mode)},
                   {"eta", recovery.eta ? json(*recovery.eta) : json(nullptr)},
                   {"eta_slack", recovery.eta_slack}};
    json reduction = {{"enabled", recovery.reduce},
                      {"rank", recovery.reduce_rank ? json(*recovery.reduce_rank)
                                                    : json(nullptr)}};
    std::vector<std::string> method_names;
    for (Method m : methods)
        method_names.push_back(to_string(m));
    return {{"array", array_config_to_json(array)},
            {"scene", scene},
            {"solver", solver},
            {"reduction", reduction},
            {"trials", trials},
            {"base_seed", base_seed},
            {"threads", threads},
            {"record_timing", record_timing},
            {"methods", method_names}};
}

ExperimentConfig load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const std::exception &e) {
        throw ConfigError("invalid JSON in '" + path + "': " + e.what());
    }
    return ExperimentConfig::from_json(j);
}

// ---------------------------------------------------------------- trials

TrialOutcome run_trial(const ExperimentConfig &cfg, Method method, double snr_db,
                       int num_snapshots, std::uint64_t seed) {
    TrialOutcome out;
    out.seed = seed;
    try {
        const Scene scene = gen_scene(cfg.array, cfg.doas_deg, num_snapshots, snr_db,
                                      cfg.h_spec, seed, cfg.noise_sigma);
        const MeasurementSet ms = simulate(cfg.array, scene, seed);

        RecoveryOptions opts = cfg.recovery;
        opts.noise_sigma = cfg.noise_sigma;
        CMatrix Y = ms.Y;
        if (method == Method::smv_l1) {
            Y = ms.Y.leftCols(1);
            opts.reduce = false;
            opts.group_mode = GroupMode::elementwise;
        }
        const RecoveryResult result = recover(cfg.array, Y, scene.num_sources(), opts);
        out.ok = true;
        out.converged = result.report.converged;
        out.iterations = result.report.iterations;
        out.doas_deg = result.doas_deg;
        out.mse = mean_square_error(out.doas_deg, scene.true_doas_deg);
        out.exact = out.mse == 0.0;
        out.times = result.times;
    } catch (const std::exception &e) {
        out.ok = false;
        out.error = e.what();
    }
    return out;
}

std::vector<TrialOutcome> run_trials(int count, int threads,
                                     const std::function<TrialOutcome(int)> &fn) {
    std::vector<TrialOutcome> results(static_cast<std::size_t>(std::max(count, 0)));
    const int workers = std::max(1, std::min(threads, count));
    if (workers == 1) {
        for (int i = 0; i < count; ++i)
            results[static_cast<std::size_t>(i)] = fn(i);
        return results;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++)
                results[static_cast<std::size_t>(i)] = fn(i);
        });
    for (auto &t : pool)
        t.join();
    return results;
}

SweepPoint aggregate(double axis, std::vector<TrialOutcome> trials, bool record_timing) {
    SweepPoint p;
    p.axis = axis;
    double sum = 0.0, sum_sq = 0.0, t_total = 0.0, t_svd = 0.0, t_solve = 0.0;
    int ok = 0, exact = 0;
    for (const auto &t : trials) {
        if (!t.ok) {
            ++p.failures;
            continue;
        }
        ++ok;
        exact += t.exact ? 1 : 0;
        sum += t.mse;
        sum_sq += t.mse * t.mse;
        t_total += t.times.total();
        t_svd += t.times.svd_s;
        t_solve += t.times.solve_s;
    }
    p.success_rate = trials.empty() ? 0.0 : static_cast<double>(exact) / trials.size();
    if (ok > 0) {
        const double mean = sum / ok;
        p.rmse_deg = std::sqrt(mean);
        if (ok > 1 && p.rmse_deg > 0.0) {
            const double var = std::max(0.0, (sum_sq - ok * mean * mean) / (ok - 1));
            p.rmse_stderr = std::sqrt(var / ok) / (2.0 * p.rmse_deg);
        }
        if (record_timing) {
            p.mean_time_s = t_total / ok;
            p.mean_svd_time_s = t_svd / ok;
            p.mean_solve_time_s = t_solve / ok;
        }
    } else {
        p.rmse_deg = std::numeric_limits<double>::quiet_NaN();
    }
    p.trials = std::move(trials);
    return p;
}

SweepResult sweep_snr(const ExperimentConfig &cfg, Method method) {
    cfg.validate();
    SweepResult result{"snr_db", method, {}};
    for (double snr : cfg.snr_list_db) {
        auto trials = run_trials(cfg.trials, cfg.threads, [&](int i) {
            return run_trial(cfg, method, snr, cfg.num_snapshots,
                             trial_seed(cfg.base_seed, i));
        });
        result.points.push_back(aggregate(snr, std::move(trials), cfg.record_timing));
    }
    return result;
}

SweepResult sweep_snapshots(const ExperimentConfig &cfg, Method method) {
    cfg.validate();
    SweepResult result{"num_snapshots", method, {}};
    for (int L : cfg.snapshot_list) {
        auto trials = run_trials(cfg.trials, cfg.threads, [&](int i) {
            return run_trial(cfg, method, cfg.snr_db, L, trial_seed(cfg.base_seed, i));
        });
        result.points.push_back(
            aggregate(static_cast<double>(L), std::move(trials), cfg.record_timing));
    }
    return result;
}

// ---------------------------------------------------------------- CSV

namespace {

std::string num(double v) {
    std::ostringstream os;
    os << std::setprecision(12) << v;
    return os.str();
}

} // namespace

void write_snr_csv(std::ostream &os, const SweepResult &result) {
    os << "snr_db,rmse_deg,mean_time_s,success_rate\n";
    for (const auto &p : result.points)
        os << num(p.axis) << ',' << num(p.rmse_deg) << ',' << num(p.mean_time_s) << ','
           << num(p.success_rate) << '\n';
}

void write_snapshots_csv(std::ostream &os, const SweepResult &result) {
    os << "num_snapshots,rmse_deg,mean_time_s,success_rate,svd_time_s,solve_time_s\n";
    for (const auto &p : result.points)
        os << num(p.axis) << ',' << num(p.rmse_deg) << ',' << num(p.mean_time_s) << ','
           << num(p.success_rate) << ',' << num(p.mean_svd_time_s) << ','
           << num(p.mean_solve_time_s) << '\n';
}

void write_trials_csv(std::ostream &os, const SweepResult &result) {
    os << result.axis_name
       << ",trial,seed,ok,converged,iterations,doas_deg,sq_error_deg2,exact\n";
    for (const auto &p : result.points)
        for (std::size_t i = 0; i < p.trials.size(); ++i) {
            const TrialOutcome &t = p.trials[i];
            std::string doas;
            for (std::size_t k = 0; k < t.doas_deg.size(); ++k)
                doas += (k ? ";" : "") + num(t.doas_deg[k]);
            os << num(p.axis) << ',' << i << ',' << t.seed << ',' << (t.ok ? 1 : 0) << ','
               << (t.converged ? 1 : 0) << ',' << t.iterations << ',' << doas << ','
               << num(t.mse) << ',' << (t.exact ? 1 : 0) << '\n';
        }
}

void write_spectrum_csv(std::ostream &os, const RVector &spectrum,
                        std::span<const double> grid_deg) {
    if (static_cast<std::size_t>(spectrum.size()) != grid_deg.size())
        throw DimensionError("spectrum and grid lengths differ");
    os << "angle_deg,amplitude\n";
    for (Index j = 0; j < spectrum.size(); ++j)
        os << num(grid_deg[static_cast<std::size_t>(j)]) << ',' << num(spectrum(j)) << '\n';
}

} // namespace selfcal
