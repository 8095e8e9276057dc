#pragma once

#include <optional>
#include <span>
#include <vector>

#include "selfcal/array_sim.hpp"
#include "selfcal/lifting.hpp"
#include "selfcal/solver.hpp"

namespace selfcal {

/// Y_sv = Y V E_K: the first K columns of Y V, where Y = U S V^H.
struct ReducedMeasurement {
    CMatrix Y_sv;           // M x K
    CMatrix V;              // L x r leading right singular vectors, r = min(M, L)
    RVector singular_values; // non-increasing
    int K = 0;
};

ReducedMeasurement svd_reduce(const CMatrix &Y, int K);

struct Rank1Factors {
    CVector h;      // unit norm, largest-modulus entry real positive
    CVector s;      // h * s^T is the best rank-1 approximation
    double sigma1 = 0.0;
    double sigma2 = 0.0;
};

Rank1Factors rank1_factor(const CMatrix &lifted);

/// Per-grid amplitude: Euclidean norm of each grid group of X~.
RVector spectrum_from_lift(const LiftedMatrix &lifted, const GroupStructure &groups);
RVector spectrum_from_lift(const LiftedMatrix &lifted);

/// Angles of the K largest bins (ties to the smaller index), ascending.
std::vector<double> pick_doas(const RVector &spectrum, int K,
                              std::span<const double> grid_deg);

/// sqrt(mean over trials of (1/K) sum_k (est_k - truth_k)^2); each estimate
/// and the truth are sorted before pairing.
double rmse(std::span<const std::vector<double>> estimates,
            std::span<const double> truth);

/// (1/K) sum_k (est_k - truth_k)^2 after sort-and-pair.
double mean_square_error(std::span<const double> estimate,
                         std::span<const double> truth);

struct RecoveryOptions {
    bool reduce = true;
    std::optional<int> reduce_rank; // defaults to the source count
    GroupMode group_mode = GroupMode::grid;
    SolverOptions solver;
    std::optional<double> eta;      // overrides the discrepancy rule
    double eta_slack = 0.1;
    double noise_sigma = 1.0;
};

/// eta = sigma * sqrt(M * L_eff) * (1 + slack).
double discrepancy_eta(double noise_sigma, int num_sensors, int effective_snapshots,
                       double slack);

struct StageTimes {
    double svd_s = 0.0;
    double setup_s = 0.0;
    double solve_s = 0.0;
    double total() const { return svd_s + setup_s + solve_s; }
};

struct RecoveryResult {
    LiftedMatrix lifted;
    CVector h_hat;
    CVector s_hat;
    RVector spectrum;
    std::vector<double> doas_deg;
    double rank1_ratio = 0.0;
    int effective_snapshots = 0;
    double eta = 0.0;
    SolveReport report;
    StageTimes times;
};

/// Full pipeline: optional svd_reduce, lifted problem, solve, rank-1
/// factorization, spectrum and peak picking.
RecoveryResult recover(const ArrayConfig &cfg, const CMatrix &Y, int num_sources,
                       const RecoveryOptions &opts);

} // namespace selfcal
