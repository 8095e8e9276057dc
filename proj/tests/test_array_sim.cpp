#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "selfcal/array_sim.hpp"
#include "test_util.hpp"

using namespace selfcal;

namespace {

constexpr double kPi = std::numbers::pi;

ArrayConfig protocol_config() {
    return {8, 0.5, ArrayConfig::uniform_grid(-90.0, 1.0, 180), 4};
}

ArrayConfig small_config(int M, int N, int m) {
    return {M, 0.5, ArrayConfig::uniform_grid(-80.0, 160.0 / (N - 1), N), m};
}

// Independent scalar evaluation of one steering-vector entry.
cplx steering_entry(int M, double d, double deg, int k) {
    const double s = std::sin(deg * kPi / 180.0);
    const double phase = -(k - (M - 1) / 2.0) * 2.0 * kPi * d * s;
    return {std::cos(phase), std::sin(phase)};
}

} // namespace

TEST(SteeringVector, BroadsideIsAllOnes) {
    for (int M : {1, 4, 8, 64}) {
        ArrayConfig cfg{M, 0.5, {}, 1};
        const CVector g = steering_vector(cfg, 0.0);
        ASSERT_EQ(g.size(), M);
        EXPECT_LT((g - CVector::Ones(M)).cwiseAbs().maxCoeff(), 1e-15);
    }
    ArrayConfig wide{5, 1.7, {}, 1};
    EXPECT_LT((steering_vector(wide, 0.0) - CVector::Ones(5)).norm(), 1e-15);
}

TEST(SteeringVector, EndfireTwoElements) {
    ArrayConfig cfg{2, 0.5, {}, 1};
    const CVector g = steering_vector(cfg, 90.0);
    EXPECT_NEAR(std::abs(g(0) - cplx(0, 1)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(g(1) - cplx(0, -1)), 0.0, 1e-15);
}

TEST(SteeringVector, ProtocolAngleMatchesScalarFormula) {
    const ArrayConfig cfg = protocol_config();
    for (double deg : {-13.0, 28.0, -90.0, 45.5}) {
        const CVector g = steering_vector(cfg, deg);
        for (int k = 0; k < 8; ++k)
            EXPECT_NEAR(std::abs(g(k) - steering_entry(8, 0.5, deg, k)), 0.0, 1e-13);
    }
}

TEST(SteeringVector, UnitModulus) {
    ArrayConfig cfg{16, 0.37, {}, 1};
    for (double deg = -90.0; deg <= 90.0; deg += 7.3) {
        const CVector g = steering_vector(cfg, deg);
        EXPECT_LT((g.cwiseAbs().array() - 1.0).abs().maxCoeff(), 1e-12);
    }
}

TEST(SteeringVector, RejectsAnglesOutsideRange) {
    ArrayConfig cfg{4, 0.5, {}, 1};
    EXPECT_THROW(steering_vector(cfg, 90.001), DomainError);
    EXPECT_THROW(steering_vector(cfg, -95.0), DomainError);
    EXPECT_THROW(steering_vector(cfg, std::nan("")), DomainError);
}

TEST(GridMatrix, ProtocolGridIndexing) {
    const ArrayConfig cfg = protocol_config();
    const CMatrix G = build_grid_matrix(cfg);
    ASSERT_EQ(G.rows(), 8);
    ASSERT_EQ(G.cols(), 180);
    EXPECT_EQ(cfg.grid_index(-13.0), 77);
    EXPECT_EQ(cfg.grid_index(28.0), 118);
    EXPECT_LT((G.col(77) - steering_vector(cfg, -13.0)).norm(), 1e-15);
    EXPECT_LT((G.col(118) - steering_vector(cfg, 28.0)).norm(), 1e-15);
    EXPECT_LT((G.cwiseAbs().array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(GridMatrix, BroadsideColumnIsAllOnes) {
    ArrayConfig cfg{4, 0.5, {-60.0, -30.0, 0.0, 30.0, 60.0}, 1};
    const CMatrix G = build_grid_matrix(cfg);
    EXPECT_LT((G.col(2) - CVector::Ones(4)).norm(), 1e-15);
}

TEST(ArrayConfigTest, ValidationErrors) {
    ArrayConfig ok = small_config(4, 10, 2);
    EXPECT_NO_THROW(ok.validate());

    ArrayConfig tall = ok;
    tall.calib_dim = 4;
    EXPECT_THROW(tall.validate(), DimensionError);

    ArrayConfig thin_grid = ok;
    thin_grid.grid_deg = {-10.0, 0.0, 10.0};
    EXPECT_THROW(thin_grid.validate(), DimensionError);

    ArrayConfig unsorted = ok;
    std::swap(unsorted.grid_deg[2], unsorted.grid_deg[3]);
    EXPECT_THROW(unsorted.validate(), DomainError);

    ArrayConfig outside = ok;
    outside.grid_deg.back() = 91.0;
    EXPECT_THROW(outside.validate(), DomainError);

    EXPECT_FALSE(ok.grid_index(1.234).has_value());
}

TEST(DftBasis, ConstantZerothColumn) {
    const CMatrix B = build_dft_basis(4, 1);
    ASSERT_EQ(B.rows(), 4);
    ASSERT_EQ(B.cols(), 1);
    EXPECT_LT((B.col(0) - CVector::Constant(4, 0.5)).norm(), 1e-15);
}

TEST(DftBasis, EntryFormula) {
    const CMatrix B = build_dft_basis(4, 2);
    EXPECT_NEAR(std::abs(B(1, 1) - cplx(0.0, -0.5)), 0.0, 1e-15);
    const CMatrix B8 = build_dft_basis(8, 4);
    for (int k = 0; k < 8; ++k)
        for (int l = 0; l < 4; ++l) {
            const cplx expected = std::exp(cplx(0.0, -2.0 * kPi * k * l / 8.0)) / std::sqrt(8.0);
            EXPECT_NEAR(std::abs(B8(k, l) - expected), 0.0, 1e-14);
        }
}

TEST(DftBasis, OrthonormalColumns) {
    for (auto [M, m] : std::vector<std::pair<int, int>>{{8, 4}, {64, 4}, {7, 6}, {3, 1}}) {
        const CMatrix B = build_dft_basis(M, m);
        EXPECT_LT((B.adjoint() * B - CMatrix::Identity(m, m)).norm(), 1e-12);
    }
}

TEST(DftBasis, RejectsSquareOrWide) {
    EXPECT_THROW(build_dft_basis(4, 4), DimensionError);
    EXPECT_THROW(build_dft_basis(4, 5), DimensionError);
    EXPECT_THROW(build_dft_basis(4, 0), DimensionError);
}

TEST(SourceVariance, DecibelDefinition) {
    EXPECT_DOUBLE_EQ(source_variance(0.0), 1.0);
    EXPECT_NEAR(source_variance(20.0), 100.0, 1e-12);
    EXPECT_NEAR(source_variance(10.0, 2.0), 40.0, 1e-12);
}

TEST(GenScene, ProtocolSupport) {
    const ArrayConfig cfg = protocol_config();
    const std::vector<double> doas{28.0, -13.0};
    const Scene s = gen_scene(cfg, doas, 100, 25.0, {}, 11);
    EXPECT_EQ(s.support, (std::vector<int>{77, 118}));
    EXPECT_EQ(s.true_doas_deg, (std::vector<double>{-13.0, 28.0}));
    ASSERT_EQ(s.source.rows(), 180);
    ASSERT_EQ(s.source.cols(), 100);
    for (int j = 0; j < 180; ++j) {
        const bool active = j == 77 || j == 118;
        EXPECT_EQ(s.source.row(j).norm() > 0.0, active) << "row " << j;
    }
    EXPECT_NEAR(s.calib_coeffs.norm(), 1.0, 1e-12);
}

TEST(GenScene, ExplicitCalibrationGivesUnitGains) {
    const ArrayConfig cfg = protocol_config();
    CVector h = CVector::Zero(4);
    h(0) = std::sqrt(8.0);
    const std::vector<double> doas{-13.0};
    const Scene s = gen_scene(cfg, doas, 3, 0.0, {h}, 2);
    const CVector gains = build_dft_basis(8, 4) * s.calib_coeffs;
    EXPECT_LT((gains - CVector::Ones(8)).norm(), 1e-12);
}

TEST(GenScene, Errors) {
    const ArrayConfig cfg = protocol_config();
    const std::vector<double> dup{10.0, 10.0};
    EXPECT_THROW(gen_scene(cfg, dup, 5, 0.0, {}, 1), DomainError);
    const std::vector<double> off{10.5};
    EXPECT_THROW(gen_scene(cfg, off, 5, 0.0, {}, 1), DomainError);
    const std::vector<double> ok{10.0};
    CVector dead = CVector::Zero(4);
    EXPECT_THROW(gen_scene(cfg, ok, 5, 0.0, {dead}, 1), DomainError);
    EXPECT_THROW(gen_scene(cfg, ok, 0, 0.0, {}, 1), DimensionError);
}

TEST(GenScene, SourcePowerMatchesSnr) {
    const ArrayConfig cfg = protocol_config();
    const std::vector<double> doas{-13.0, 28.0};
    const Scene s = gen_scene(cfg, doas, 20000, 20.0, {}, 3);
    const double power = s.source.squaredNorm() / (2.0 * 20000.0);
    EXPECT_NEAR(power / 100.0, 1.0, 0.02);
}

TEST(Simulate, NoiselessUnitGainsEqualsGX) {
    const ArrayConfig cfg = protocol_config();
    CVector h = CVector::Zero(4);
    h(0) = std::sqrt(8.0);
    const std::vector<double> doas{-13.0, 28.0};
    const Scene s = gen_scene(cfg, doas, 100, 25.0, {h}, 5, 0.0);
    const MeasurementSet ms = simulate(cfg, s, 5);
    ASSERT_EQ(ms.Y.rows(), 8);
    ASSERT_EQ(ms.Y.cols(), 100);
    const CMatrix GX = build_grid_matrix(cfg) * s.source;
    EXPECT_LT((ms.Y - GX).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Simulate, SingleSpikeIsScaledSteeringVector) {
    const ArrayConfig cfg = small_config(6, 12, 2);
    Scene s;
    s.num_snapshots = 1;
    s.noise_sigma = 0.0;
    s.support = {5};
    s.true_doas_deg = {cfg.grid_deg[5]};
    s.source = CMatrix::Zero(12, 1);
    s.source(5, 0) = 1.0;
    s.calib_coeffs = CVector(2);
    s.calib_coeffs << cplx(0.3, -0.2), cplx(-0.5, 0.8);
    const MeasurementSet ms = simulate(cfg, s, 0);
    const CVector g = steering_vector(cfg, cfg.grid_deg[5]);
    const CMatrix B = build_dft_basis(6, 2);
    for (int k = 0; k < 6; ++k) {
        const cplx gain = B(k, 0) * s.calib_coeffs(0) + B(k, 1) * s.calib_coeffs(1);
        EXPECT_NEAR(std::abs(ms.Y(k, 0) - gain * g(k)), 0.0, 1e-14);
    }
}

TEST(Simulate, ProtocolShapeAndDeterminism) {
    const ArrayConfig cfg = protocol_config();
    const std::vector<double> doas{-13.0, 28.0};
    const Scene s = gen_scene(cfg, doas, 100, 25.0, {}, 42);
    const MeasurementSet a = simulate(cfg, s, 42);
    const MeasurementSet b = simulate(cfg, s, 42);
    const MeasurementSet c = simulate(cfg, s, 43);
    EXPECT_EQ(a.Y.rows(), 8);
    EXPECT_EQ(a.Y.cols(), 100);
    EXPECT_TRUE((a.Y.array() == b.Y.array()).all());
    EXPECT_FALSE((a.Y.array() == c.Y.array()).all());
    const Scene s2 = gen_scene(cfg, doas, 100, 25.0, {}, 42);
    EXPECT_TRUE((s.source.array() == s2.source.array()).all());
    EXPECT_TRUE((s.calib_coeffs.array() == s2.calib_coeffs.array()).all());
}

TEST(Simulate, EmpiricalNoiseVariance) {
    // 10 sensors x 100000 snapshots = 1e6 noise samples, zero signal.
    const ArrayConfig cfg = small_config(10, 12, 2);
    Scene s;
    s.num_snapshots = 100000;
    s.noise_sigma = 1.5;
    s.support = {};
    s.source = CMatrix::Zero(12, s.num_snapshots);
    s.calib_coeffs = CVector::Ones(2);
    const MeasurementSet ms = simulate(cfg, s, 9);
    const double n = static_cast<double>(ms.Y.size());
    const double var = ms.Y.squaredNorm() / n;
    EXPECT_NEAR(var / (1.5 * 1.5), 1.0, 0.01);
    // Circular: real and imaginary parts share the variance equally.
    const double re = ms.Y.real().squaredNorm() / n;
    EXPECT_NEAR(re / var, 0.5, 0.01);
    EXPECT_LT(std::abs(ms.Y.mean()), 0.01);
}

TEST(Simulate, RejectsBadSupport) {
    const ArrayConfig cfg = small_config(4, 8, 2);
    Scene s;
    s.num_snapshots = 1;
    s.support = {8};
    s.source = CMatrix::Zero(8, 1);
    s.calib_coeffs = CVector::Ones(2);
    EXPECT_THROW(simulate(cfg, s, 0), DomainError);
    s.support = {1};
    s.source = CMatrix::Zero(7, 1);
    EXPECT_THROW(simulate(cfg, s, 0), DimensionError);
}
