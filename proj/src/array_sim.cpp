#include "selfcal/array_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace selfcal {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kGridMatchTol = 1e-9;
constexpr double kDeadSensorTol = 1e-8;

enum class Stream : std::uint32_t { sources = 0, noise = 1, calibration = 2 };

std::mt19937_64 make_rng(std::uint64_t seed, Stream stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    return std::mt19937_64(seq);
}

void check_angle(double deg) {
    if (!(deg >= -90.0 && deg <= 90.0)) {
        std::ostringstream msg;
        msg << "angle " << deg << " deg outside [-90, 90]";
        throw DomainError(msg.str());
    }
}

} // namespace

void ArrayConfig::validate() const {
    if (num_sensors < 1)
        throw DimensionError("num_sensors must be positive");
    if (calib_dim < 1)
        throw DimensionError("calib_dim must be positive");
    if (calib_dim >= num_sensors)
        throw DimensionError("calib_dim must be smaller than num_sensors");
    if (grid_size() <= num_sensors)
        throw DimensionError("grid must have more points than sensors");
    if (!(spacing_ratio > 0.0) || !std::isfinite(spacing_ratio))
        throw DomainError("spacing_ratio must be positive");
    for (std::size_t i = 0; i < grid_deg.size(); ++i) {
        check_angle(grid_deg[i]);
        if (i > 0 && !(grid_deg[i] > grid_deg[i - 1]))
            throw DomainError("grid angles must be strictly increasing");
    }
}

std::optional<int> ArrayConfig::grid_index(double deg) const {
    auto it = std::lower_bound(grid_deg.begin(), grid_deg.end(),
                               deg - kGridMatchTol);
    if (it != grid_deg.end() && std::abs(*it - deg) <= kGridMatchTol)
        return static_cast<int>(it - grid_deg.begin());
    return std::nullopt;
}

std::vector<double> ArrayConfig::uniform_grid(double start_deg, double step_deg,
                                              int count) {
    std::vector<double> grid(static_cast<std::size_t>(std::max(count, 0)));
    for (int i = 0; i < count; ++i)
        grid[static_cast<std::size_t>(i)] = start_deg + i * step_deg;
    return grid;
}

CVector steering_vector(const ArrayConfig &cfg, double angle_deg) {
    check_angle(angle_deg);
    const int M = cfg.num_sensors;
    const double phase_step =
        2.0 * std::numbers::pi * cfg.spacing_ratio * std::sin(angle_deg * kDegToRad);
    const double centre = (M - 1) / 2.0;
    CVector g(M);
    for (int k = 0; k < M; ++k)
        g(k) = std::polar(1.0, -(k - centre) * phase_step);
    return g;
}

CMatrix build_grid_matrix(const ArrayConfig &cfg) {
    cfg.validate();
    CMatrix G(cfg.num_sensors, cfg.grid_size());
    for (int j = 0; j < cfg.grid_size(); ++j)
        G.col(j) = steering_vector(cfg, cfg.grid_deg[static_cast<std::size_t>(j)]);
    return G;
}

CMatrix build_dft_basis(int num_sensors, int calib_dim) {
    if (num_sensors < 1 || calib_dim < 1)
        throw DimensionError("DFT basis dimensions must be positive");
    if (calib_dim >= num_sensors)
        throw DimensionError("DFT basis needs calib_dim < num_sensors");
    const double scale = 1.0 / std::sqrt(static_cast<double>(num_sensors));
    CMatrix B(num_sensors, calib_dim);
    for (int k = 0; k < num_sensors; ++k)
        for (int l = 0; l < calib_dim; ++l) {
            // Reduce k*l mod M first so the phase argument stays small.
            const int r = (k * l) % num_sensors;
            B(k, l) = std::polar(scale, -2.0 * std::numbers::pi * r / num_sensors);
        }
    return B;
}

double source_variance(double snr_db, double noise_sigma) {
    return noise_sigma * noise_sigma * std::pow(10.0, snr_db / 10.0);
}

MeasurementSet simulate(const ArrayConfig &cfg, const Scene &scene,
                        std::uint64_t seed) {
    cfg.validate();
    const int N = cfg.grid_size();
    if (scene.source.rows() != N)
        throw DimensionError("source matrix rows must equal grid size");
    if (scene.source.cols() != scene.num_snapshots || scene.num_snapshots < 1)
        throw DimensionError("source matrix columns must equal num_snapshots");
    if (scene.calib_coeffs.size() != cfg.calib_dim)
        throw DimensionError("calib_coeffs length must equal calib_dim");
    for (int idx : scene.support)
        if (idx < 0 || idx >= N)
            throw DomainError("support index out of grid range");
    if (scene.noise_sigma < 0.0)
        throw DomainError("noise_sigma must be nonnegative");

    const CMatrix B = build_dft_basis(cfg.num_sensors, cfg.calib_dim);
    const CMatrix G = build_grid_matrix(cfg);
    const CVector gains = B * scene.calib_coeffs;

    MeasurementSet out;
    out.rng_seed = seed;
    out.Y = gains.asDiagonal() * (G * scene.source);
    if (scene.noise_sigma > 0.0) {
        auto rng = make_rng(seed, Stream::noise);
        out.Y += complex_gaussian(rng, cfg.num_sensors, scene.num_snapshots,
                                  scene.noise_sigma * scene.noise_sigma);
    }
    out.scene = scene;
    return out;
}

Scene gen_scene(const ArrayConfig &cfg, std::span<const double> doas_deg,
                int num_snapshots, double snr_db, const CalibrationSpec &h_spec,
                std::uint64_t seed, double noise_sigma) {
    cfg.validate();
    if (num_snapshots < 1)
        throw DimensionError("num_snapshots must be positive");
    if (doas_deg.empty())
        throw DomainError("at least one DoA is required");
    if (noise_sigma < 0.0)
        throw DomainError("noise_sigma must be nonnegative");

    std::vector<std::pair<double, int>> located;
    for (double doa : doas_deg) {
        check_angle(doa);
        auto idx = cfg.grid_index(doa);
        if (!idx)
            throw DomainError("DoA " + std::to_string(doa) + " deg is not on the grid");
        located.emplace_back(cfg.grid_deg[static_cast<std::size_t>(*idx)], *idx);
    }
    std::sort(located.begin(), located.end());
    for (std::size_t i = 1; i < located.size(); ++i)
        if (located[i].second == located[i - 1].second)
            throw DomainError("duplicate DoAs");

    Scene scene;
    scene.num_snapshots = num_snapshots;
    scene.noise_sigma = noise_sigma;
    for (const auto &[deg, idx] : located) {
        scene.true_doas_deg.push_back(deg);
        scene.support.push_back(idx);
    }

    const CMatrix B = build_dft_basis(cfg.num_sensors, cfg.calib_dim);
    if (h_spec.explicit_h) {
        if (h_spec.explicit_h->size() != cfg.calib_dim)
            throw DimensionError("explicit h length must equal calib_dim");
        scene.calib_coeffs = *h_spec.explicit_h;
        if ((B * scene.calib_coeffs).cwiseAbs().minCoeff() < kDeadSensorTol)
            throw DomainError("calibration vector leaves a sensor with zero gain");
    } else {
        auto rng = make_rng(seed, Stream::calibration);
        do {
            CVector h = complex_gaussian(rng, cfg.calib_dim, 1, 1.0).col(0);
            scene.calib_coeffs = h / h.norm();
        } while ((B * scene.calib_coeffs).cwiseAbs().minCoeff() < kDeadSensorTol);
    }

    const double var = source_variance(snr_db, noise_sigma > 0.0 ? noise_sigma : 1.0);
    auto rng = make_rng(seed, Stream::sources);
    const CMatrix rows =
        complex_gaussian(rng, scene.num_sources(), num_snapshots, var);
    scene.source = CMatrix::Zero(cfg.grid_size(), num_snapshots);
    for (int k = 0; k < scene.num_sources(); ++k)
        scene.source.row(scene.support[static_cast<std::size_t>(k)]) = rows.row(k);
    return scene;
}

} // namespace selfcal
