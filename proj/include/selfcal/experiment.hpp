#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "selfcal/array_sim.hpp"
#include "selfcal/recovery.hpp"
#include "selfcal/serialization.hpp"

namespace selfcal {

/// `mmv` is the lifted multi-snapshot pipeline. `smv_l1` is the
/// single-snapshot baseline: first column of Y, elementwise l1, no reduction.
enum class Method { mmv, smv_l1 };

std::string to_string(Method method);
Method parse_method(const std::string &name);

/// Thrown for malformed or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Defaults reproduce the M=8 protocol: 1 degree grid over [-90, 89].
struct ExperimentConfig {
    ArrayConfig array{8, 0.5, ArrayConfig::uniform_grid(-90.0, 1.0, 180), 4};
    std::vector<double> doas_deg{-13.0, 28.0};
    int num_snapshots = 100;
    double snr_db = 25.0;
    std::vector<double> snr_list_db{0, 5, 10, 15, 20, 25, 30};
    std::vector<int> snapshot_list{1, 10, 50, 100, 300, 600, 1000};
    CalibrationSpec h_spec;
    double noise_sigma = 1.0;
    RecoveryOptions recovery;
    int trials = 100;
    std::uint64_t base_seed = 1;
    int threads = 1;
    std::vector<Method> methods{Method::mmv};
    bool record_timing = true;

    int num_sources() const { return static_cast<int>(doas_deg.size()); }

    /// Throws ConfigError.
    void validate() const;

    static ExperimentConfig from_json(const json &j);
    json to_json() const;
};

/// Reads and validates a JSON config file. Throws ConfigError.
ExperimentConfig load_config(const std::string &path);

/// Seed used by trial `index`.
inline std::uint64_t trial_seed(std::uint64_t base_seed, int index) {
    return base_seed + static_cast<std::uint64_t>(index);
}

struct TrialOutcome {
    std::uint64_t seed = 0;
    bool ok = false; // false when the trial threw
    std::string error;
    bool converged = false;
    int iterations = 0;
    std::vector<double> doas_deg;
    double mse = 0.0; // (1/K) sum of squared DoA errors, deg^2
    bool exact = false;
    StageTimes times;
};

/// One scene + measurement + recovery at the given SNR and snapshot count.
TrialOutcome run_trial(const ExperimentConfig &cfg, Method method, double snr_db,
                       int num_snapshots, std::uint64_t seed);

struct SweepPoint {
    double axis = 0.0;
    double rmse_deg = 0.0;
    double rmse_stderr = 0.0; // delta-method standard error of rmse_deg
    double success_rate = 0.0;
    double mean_time_s = 0.0;
    double mean_svd_time_s = 0.0;
    double mean_solve_time_s = 0.0;
    int failures = 0;
    std::vector<TrialOutcome> trials;
};

struct SweepResult {
    std::string axis_name; // "snr_db" or "num_snapshots"
    Method method = Method::mmv;
    std::vector<SweepPoint> points;
};

/// Aggregates trials; failed trials are excluded from the RMSE and count as
/// unsuccessful.
SweepPoint aggregate(double axis, std::vector<TrialOutcome> trials, bool record_timing);

/// Runs `count` trials of `fn(index)` on `threads` workers; results are
/// ordered by index.
std::vector<TrialOutcome> run_trials(int count, int threads,
                                     const std::function<TrialOutcome(int)> &fn);

SweepResult sweep_snr(const ExperimentConfig &cfg, Method method);
SweepResult sweep_snapshots(const ExperimentConfig &cfg, Method method);

/// snr_db,rmse_deg,mean_time_s,success_rate
void write_snr_csv(std::ostream &os, const SweepResult &result);
/// num_snapshots,rmse_deg,mean_time_s,success_rate,svd_time_s,solve_time_s
void write_snapshots_csv(std::ostream &os, const SweepResult &result);
/// One row per trial; contains no timing so it is reproducible.
void write_trials_csv(std::ostream &os, const SweepResult &result);
/// angle_deg,amplitude
void write_spectrum_csv(std::ostream &os, const RVector &spectrum,
                        std::span<const double> grid_deg);

} // namespace selfcal
