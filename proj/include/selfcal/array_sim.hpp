#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "selfcal/types.hpp"

namespace selfcal {

/// Uniform linear array with a discretized DoA search grid and the
/// dimension of the calibration subspace.
struct ArrayConfig {
    int num_sensors = 8;
    double spacing_ratio = 0.5; // d / lambda
    std::vector<double> grid_deg;
    int calib_dim = 4;

    int grid_size() const { return static_cast<int>(grid_deg.size()); }

    /// Throws DimensionError / DomainError when an invariant is violated:
    /// calib_dim < num_sensors < grid_size, grid strictly increasing and
    /// inside [-90, 90] degrees.
    void validate() const;

    /// Index of the grid point equal to `deg` (to 1e-9 degrees).
    std::optional<int> grid_index(double deg) const;

    /// `count` angles start, start + step, ...
    static std::vector<double> uniform_grid(double start_deg, double step_deg,
                                            int count);
};

struct Scene {
    std::vector<double> true_doas_deg; // ascending
    std::vector<int> support;          // grid indices, same order as doas
    int num_snapshots = 0;
    CMatrix source;                    // N x L, zero outside `support`
    CVector calib_coeffs;              // h, length m
    double noise_sigma = 1.0;

    int num_sources() const { return static_cast<int>(support.size()); }
};

struct MeasurementSet {
    CMatrix Y; // M x L
    std::uint64_t rng_seed = 0;
    std::optional<Scene> scene;
};

/// How gen_scene chooses the calibration vector h.
struct CalibrationSpec {
    /// Used verbatim when present; otherwise h is drawn i.i.d. circular
    /// complex Gaussian and normalized to unit norm.
    std::optional<CVector> explicit_h;
};

CVector steering_vector(const ArrayConfig &cfg, double angle_deg);

/// G, one steering vector per grid angle.
CMatrix build_grid_matrix(const ArrayConfig &cfg);

/// First m columns of the unitary M-point DFT matrix.
CMatrix build_dft_basis(int num_sensors, int calib_dim);

/// Y = diag(B h) G X + N with circular complex Gaussian N of per-entry
/// variance noise_sigma^2.
MeasurementSet simulate(const ArrayConfig &cfg, const Scene &scene,
                        std::uint64_t seed);

/// Draws a scene with on-grid sources. Source rows are circular complex
/// Gaussian with variance noise_sigma^2 * 10^(snr_db / 10).
Scene gen_scene(const ArrayConfig &cfg, std::span<const double> doas_deg,
                int num_snapshots, double snr_db, const CalibrationSpec &h_spec,
                std::uint64_t seed, double noise_sigma = 1.0);

/// Source variance implied by an SNR in dB relative to `noise_sigma`^2.
double source_variance(double snr_db, double noise_sigma = 1.0);

/// n x k matrix of i.i.d. CN(0, variance) draws.
template <class Rng>
CMatrix complex_gaussian(Rng &rng, Index rows, Index cols, double variance);

} // namespace selfcal

#include "selfcal/detail/complex_gaussian.ipp"
