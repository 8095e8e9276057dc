#include "selfcal/recovery.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <Eigen/SVD>

namespace selfcal {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

} // namespace

ReducedMeasurement svd_reduce(const CMatrix &Y, int K) {
    const auto max_rank = std::min(Y.rows(), Y.cols());
    if (K < 1 || K > max_rank)
        throw DimensionError("reduction rank must satisfy 1 <= K <= min(M, L)");
    Eigen::BDCSVD<CMatrix> svd(Y, Eigen::ComputeThinU | Eigen::ComputeThinV);
    ReducedMeasurement out;
    out.K = K;
    out.V = svd.matrixV();
    out.singular_values = svd.singularValues();
    out.Y_sv = Y * out.V.leftCols(K);
    return out;
}

Rank1Factors rank1_factor(const CMatrix &lifted) {
    if (lifted.size() == 0 || lifted.cwiseAbs().maxCoeff() == 0.0)
        throw std::invalid_argument("rank1_factor needs a nonzero matrix");
    Eigen::BDCSVD<CMatrix> svd(lifted, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RVector &sv = svd.singularValues();
    CVector u = svd.matrixU().col(0);
    CVector v = svd.matrixV().col(0);

    Index pivot = 0;
    u.cwiseAbs().maxCoeff(&pivot);
    const cplx phase = u(pivot) / std::abs(u(pivot));

    Rank1Factors out;
    out.sigma1 = sv(0);
    out.sigma2 = sv.size() > 1 ? sv(1) : 0.0;
    out.h = u / phase;
    out.h(pivot) = std::abs(out.h(pivot));
    // lifted ~ sigma u v^H = (u / phase) (sigma phase conj(v))^T
    out.s = sv(0) * phase * v.conjugate();
    return out;
}

RVector spectrum_from_lift(const LiftedMatrix &lifted, const GroupStructure &groups) {
    if (groups.mode() != GroupMode::grid)
        throw std::invalid_argument("spectrum needs grid groups");
    return groups.group_norms(vec(lifted.data));
}

RVector spectrum_from_lift(const LiftedMatrix &lifted) {
    return spectrum_from_lift(lifted,
                              GroupStructure::make(GroupMode::grid, lifted.m, lifted.L,
                                                   lifted.N));
}

std::vector<double> pick_doas(const RVector &spectrum, int K,
                              std::span<const double> grid_deg) {
    if (static_cast<std::size_t>(spectrum.size()) != grid_deg.size())
        throw DimensionError("spectrum and grid lengths differ");
    if (K < 0 || K > spectrum.size())
        throw DimensionError("cannot pick more peaks than grid points");
    std::vector<Index> order(static_cast<std::size_t>(spectrum.size()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return spectrum(a) > spectrum(b); });
    std::vector<double> out;
    for (int k = 0; k < K; ++k)
        out.push_back(grid_deg[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])]);
    std::sort(out.begin(), out.end());
    return out;
}

double mean_square_error(std::span<const double> estimate,
                         std::span<const double> truth) {
    if (estimate.size() != truth.size() || truth.empty())
        throw DimensionError("estimate and truth must have the same nonzero length");
    std::vector<double> est(estimate.begin(), estimate.end());
    std::vector<double> tru(truth.begin(), truth.end());
    std::sort(est.begin(), est.end());
    std::sort(tru.begin(), tru.end());
    double sq = 0.0;
    for (std::size_t k = 0; k < est.size(); ++k)
        sq += (est[k] - tru[k]) * (est[k] - tru[k]);
    return sq / static_cast<double>(est.size());
}

double rmse(std::span<const std::vector<double>> estimates,
            std::span<const double> truth) {
    if (estimates.empty())
        throw DimensionError("rmse needs at least one trial");
    double total = 0.0;
    for (const auto &est : estimates)
        total += mean_square_error(est, truth);
    return std::sqrt(total / static_cast<double>(estimates.size()));
}

double discrepancy_eta(double noise_sigma, int num_sensors, int effective_snapshots,
                       double slack) {
    return noise_sigma * std::sqrt(static_cast<double>(num_sensors) * effective_snapshots) *
           (1.0 + slack);
}

RecoveryResult recover(const ArrayConfig &cfg, const CMatrix &Y, int num_sources,
                       const RecoveryOptions &opts) {
    cfg.validate();
    if (Y.rows() != cfg.num_sensors)
        throw DimensionError("measurement rows must equal num_sensors");
    if (Y.cols() < 1)
        throw DimensionError("measurement needs at least one snapshot");
    if (num_sources < 1 || num_sources > cfg.grid_size())
        throw DimensionError("source count out of range");

    RecoveryResult out;
    auto start = Clock::now();
    CMatrix Y_eff;
    if (opts.reduce) {
        const auto limit = static_cast<int>(std::min(Y.rows(), Y.cols()));
        const int rank = std::min(opts.reduce_rank.value_or(num_sources), limit);
        Y_eff = svd_reduce(Y, rank).Y_sv;
    } else {
        Y_eff = Y;
    }
    out.times.svd_s = seconds_since(start);
    out.effective_snapshots = static_cast<int>(Y_eff.cols());

    start = Clock::now();
    const LiftedOperator op(build_dft_basis(cfg.num_sensors, cfg.calib_dim),
                            build_grid_matrix(cfg), out.effective_snapshots);
    out.eta = opts.eta.value_or(discrepancy_eta(opts.noise_sigma, cfg.num_sensors,
                                                out.effective_snapshots, opts.eta_slack));
    const LiftedProblem problem = make_problem(op, Y_eff, out.eta, opts.group_mode);
    out.times.setup_s = seconds_since(start);

    start = Clock::now();
    out.report = solve(problem, opts.solver);
    out.times.solve_s = seconds_since(start);

    out.lifted = out.report.lifted(problem);
    out.spectrum = spectrum_from_lift(out.lifted);
    out.doas_deg = pick_doas(out.spectrum, num_sources, cfg.grid_deg);
    if (out.lifted.data.cwiseAbs().maxCoeff() > 0.0) {
        const Rank1Factors f = rank1_factor(out.lifted.data);
        out.h_hat = f.h;
        out.s_hat = f.s;
        out.rank1_ratio = f.sigma1 > 0.0 ? f.sigma2 / f.sigma1 : 0.0;
    } else {
        out.h_hat = CVector::Zero(cfg.calib_dim);
        out.s_hat = CVector::Zero(out.lifted.data.cols());
    }
    return out;
}

} // namespace selfcal
