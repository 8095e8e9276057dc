#include <random>

#include <Eigen/SVD>
#include <gtest/gtest.h>

#include "selfcal/array_sim.hpp"
#include "selfcal/lifting.hpp"
#include "test_util.hpp"

using namespace selfcal;
using selfcal::testing::random_matrix;
using selfcal::testing::random_vector;
using selfcal::testing::rel_diff;

namespace {

LiftedOperator random_operator(std::mt19937_64 &rng, int M, int m, int N, int L) {
    return LiftedOperator(random_matrix(rng, M, m), random_matrix(rng, M, N), L);
}

LiftedMatrix random_lift(std::mt19937_64 &rng, int m, int L, int N) {
    return {random_matrix(rng, m, static_cast<Index>(L) * N), m, L, N};
}

// Row i of the output is b_i^H X~ G~_i, evaluated with explicit G~_i.
CMatrix forward_by_blocks(const LiftedOperator &op, const LiftedMatrix &x) {
    CMatrix out(op.sensors(), op.snapshots());
    for (int i = 0; i < op.sensors(); ++i)
        out.row(i) = op.b(i).adjoint() * x.data * make_gtilde(op.g(i), op.snapshots());
    return out;
}

// Phi(iL + l, (lN + j) m + k) = B(i, k) G(i, j), zero elsewhere.
CMatrix phi_by_entries(const LiftedOperator &op) {
    const int M = op.sensors(), m = op.calib_dim(), N = op.grid_size(), L = op.snapshots();
    CMatrix phi = CMatrix::Zero(static_cast<Index>(M) * L, static_cast<Index>(m) * L * N);
    for (int i = 0; i < M; ++i)
        for (int l = 0; l < L; ++l)
            for (int j = 0; j < N; ++j)
                for (int k = 0; k < m; ++k)
                    phi(static_cast<Index>(i) * L + l,
                        (static_cast<Index>(l) * N + j) * m + k) =
                        op.basis()(i, k) * op.grid()(i, j);
    return phi;
}

} // namespace

TEST(Gtilde, SingleSnapshotIsColumn) {
    std::mt19937_64 rng(1);
    const CVector g = random_vector(rng, 5);
    const CMatrix gt = make_gtilde(g, 1);
    ASSERT_EQ(gt.rows(), 5);
    ASSERT_EQ(gt.cols(), 1);
    EXPECT_EQ(rel_diff(gt, g), 0.0);
}

TEST(Gtilde, TwoSnapshotsBlockDiagonal) {
    std::mt19937_64 rng(2);
    const CVector g = random_vector(rng, 4);
    const CMatrix gt = make_gtilde(g, 2);
    CMatrix expected = CMatrix::Zero(8, 2);
    expected.block(0, 0, 4, 1) = g;
    expected.block(4, 1, 4, 1) = g;
    EXPECT_EQ(rel_diff(gt, expected), 0.0);
}

TEST(Gtilde, UnitSpikeThreeSnapshots) {
    CVector e = CVector::Zero(3);
    e(0) = 1.0;
    const CMatrix gt = make_gtilde(e, 3);
    ASSERT_EQ(gt.rows(), 9);
    ASSERT_EQ(gt.cols(), 3);
    CMatrix expected = CMatrix::Zero(9, 3);
    expected(0, 0) = expected(3, 1) = expected(6, 2) = 1.0;
    EXPECT_EQ(rel_diff(gt, expected), 0.0);
}

TEST(Forward, ZeroMapsToZero) {
    std::mt19937_64 rng(3);
    const LiftedOperator op = random_operator(rng, 5, 2, 7, 3);
    EXPECT_EQ(apply_forward(op, LiftedMatrix::zeros(2, 3, 7)).norm(), 0.0);
    EXPECT_EQ(apply_adjoint(op, CMatrix::Zero(5, 3)).data.norm(), 0.0);
}

TEST(Forward, MatchesBlockDefinition) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        const LiftedOperator op = random_operator(rng, 6, 3, 9, 4);
        const LiftedMatrix x = random_lift(rng, 3, 4, 9);
        EXPECT_LT(rel_diff(apply_forward(op, x), forward_by_blocks(op, x)), 1e-13);
    }
}

TEST(Forward, ScalarCalibrationReducesToGridProduct) {
    std::mt19937_64 rng(5);
    const cplx c(0.6, -0.3);
    const CMatrix B = CMatrix::Constant(5, 1, c);
    const CMatrix G = random_matrix(rng, 5, 8);
    const LiftedOperator op(B, G, 1);
    const LiftedMatrix x = random_lift(rng, 1, 1, 8);
    const CMatrix expected = c * (G * x.data.transpose());
    EXPECT_LT(rel_diff(apply_forward(op, x), expected), 1e-14);
}

TEST(Forward, ExactLiftReproducesModel) {
    ArrayConfig cfg{8, 0.5, ArrayConfig::uniform_grid(-90.0, 1.0, 180), 4};
    const LiftedOperator op(build_dft_basis(8, 4), build_grid_matrix(cfg), 20);
    const std::vector<double> doas{-13.0, 28.0};
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Scene s = gen_scene(cfg, doas, 20, 10.0, {}, seed, 0.0);
        const MeasurementSet ms = simulate(cfg, s, seed);
        const LiftedMatrix x = LiftedMatrix::from_factors(s.calib_coeffs, s.source);
        EXPECT_LT(rel_diff(apply_forward(op, x), ms.Y), 1e-12);
    }
}

TEST(Forward, RejectsMismatchedShapes) {
    std::mt19937_64 rng(6);
    const LiftedOperator op = random_operator(rng, 4, 2, 6, 2);
    EXPECT_THROW(apply_forward(op, LiftedMatrix::zeros(2, 3, 6)), DimensionError);
    EXPECT_THROW(apply_forward(op, LiftedMatrix::zeros(3, 2, 6)), DimensionError);
    EXPECT_THROW(apply_adjoint(op, CMatrix::Zero(4, 3)), DimensionError);
    EXPECT_THROW(LiftedOperator(random_matrix(rng, 4, 2), random_matrix(rng, 5, 6), 2),
                 DimensionError);
}

TEST(Adjoint, InnerProductIdentitySmall) {
    std::mt19937_64 rng(7);
    const LiftedOperator op = random_operator(rng, 3, 2, 4, 2);
    const LiftedMatrix x = random_lift(rng, 2, 2, 4);
    const CMatrix U = random_matrix(rng, 3, 2);
    const cplx lhs = (apply_forward(op, x).conjugate().cwiseProduct(U)).sum();
    const cplx rhs = (x.data.conjugate().cwiseProduct(apply_adjoint(op, U).data)).sum();
    EXPECT_LT(std::abs(lhs - rhs), 1e-12 * x.data.norm() * U.norm());
}

TEST(Adjoint, InnerProductIdentityRandomSizes) {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> pick(1, 8);
    for (int trial = 0; trial < 20; ++trial) {
        const int M = std::max(2, pick(rng));
        const int m = std::uniform_int_distribution<int>(1, M - 1)(rng);
        const int N = std::uniform_int_distribution<int>(M + 1, 16)(rng);
        const int L = std::uniform_int_distribution<int>(1, 4)(rng);
        const LiftedOperator op = random_operator(rng, M, m, N, L);
        const LiftedMatrix x = random_lift(rng, m, L, N);
        const CMatrix U = random_matrix(rng, M, L);
        const cplx lhs = (apply_forward(op, x).conjugate().cwiseProduct(U)).sum();
        const cplx rhs = (x.data.conjugate().cwiseProduct(apply_adjoint(op, U).data)).sum();
        EXPECT_LE(std::abs(lhs - rhs), 1e-10 * x.data.norm() * U.norm());
    }
}

TEST(Adjoint, NormalOperatorMatchesSumOfBlocks) {
    std::mt19937_64 rng(9);
    const LiftedOperator op = random_operator(rng, 5, 2, 7, 3);
    const LiftedMatrix x = random_lift(rng, 2, 3, 7);
    CMatrix expected = CMatrix::Zero(2, 21);
    for (int i = 0; i < 5; ++i) {
        const CMatrix gt = make_gtilde(op.g(i), 3);
        expected += op.b(i) * op.b(i).adjoint() * x.data * gt * gt.adjoint();
    }
    const LiftedMatrix got = apply_adjoint(op, apply_forward(op, x));
    EXPECT_LT(rel_diff(got.data, expected), 1e-13);
}

TEST(Adjoint, SnapshotGramActsColumnwise) {
    std::mt19937_64 rng(10);
    const LiftedOperator op = random_operator(rng, 5, 3, 9, 4);
    const CMatrix U = random_matrix(rng, 5, 4);
    const CMatrix AAt = apply_forward(op, apply_adjoint(op, U));
    EXPECT_LT(rel_diff(AAt, op.snapshot_gram() * U), 1e-13);
}

TEST(Phi, EntryFormulaAndShape) {
    std::mt19937_64 rng(11);
    const LiftedOperator op = random_operator(rng, 3, 2, 4, 2);
    const CMatrix phi = build_phi(op);
    ASSERT_EQ(phi.rows(), 6);
    ASSERT_EQ(phi.cols(), 16);
    EXPECT_EQ(phi_entries(op), 96u);
    EXPECT_LT(rel_diff(phi, phi_by_entries(op)), 1e-15);
}

TEST(Phi, AgreesWithOperatorOnRandomInputs) {
    std::mt19937_64 rng(12);
    const LiftedOperator op = random_operator(rng, 3, 2, 4, 2);
    const CMatrix phi = build_phi(op);
    for (int trial = 0; trial < 100; ++trial) {
        const LiftedMatrix x = random_lift(rng, 2, 2, 4);
        const CVector lhs = phi * vec(x.data);
        const CVector rhs = vec(apply_forward(op, x).transpose());
        EXPECT_LE((lhs - rhs).norm(), 1e-12 * x.data.norm());
    }
}

TEST(Phi, KroneckerColumnBlocks) {
    std::mt19937_64 rng(13);
    const LiftedOperator op = random_operator(rng, 4, 2, 5, 3);
    const CMatrix phi = build_phi(op);
    for (int i = 0; i < 4; ++i) {
        const CMatrix block = kron(make_gtilde(op.g(i), 3).conjugate(), op.b(i));
        EXPECT_LT(rel_diff(phi.middleRows(static_cast<Index>(i) * 3, 3).adjoint(), block),
                  1e-15);
    }
}

TEST(Phi, SingleSnapshotHasOneRowPerSensor) {
    std::mt19937_64 rng(14);
    const LiftedOperator op = random_operator(rng, 4, 2, 6, 1);
    const CMatrix phi = build_phi(op);
    ASSERT_EQ(phi.rows(), 4);
    ASSERT_EQ(phi.cols(), 12);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 6; ++j)
            for (int k = 0; k < 2; ++k)
                EXPECT_EQ(phi(i, j * 2 + k), op.basis()(i, k) * op.grid()(i, j));
}

TEST(Phi, BudgetExceededThrowsResourceError) {
    std::mt19937_64 rng(15);
    const LiftedOperator op = random_operator(rng, 4, 2, 6, 3);
    EXPECT_THROW(build_phi(op, phi_entries(op) - 1), ResourceError);
    EXPECT_NO_THROW(build_phi(op, phi_entries(op)));
}

TEST(Vec, ColumnMajorDefinition) {
    CMatrix x(2, 2);
    x << cplx(1), cplx(3), cplx(2), cplx(4); // [[a, c], [b, d]] with a..d = 1..4
    const CVector v = vec(x);
    ASSERT_EQ(v.size(), 4);
    for (int i = 0; i < 4; ++i)
        EXPECT_EQ(v(i), cplx(i + 1));
}

TEST(Vec, RoundTripAndErrors) {
    std::mt19937_64 rng(16);
    const CMatrix x = random_matrix(rng, 3, 7);
    EXPECT_TRUE((unvec(vec(x), 3, 7).array() == x.array()).all());
    EXPECT_THROW(unvec(vec(x), 4, 5), DimensionError);
}

TEST(Vec, TransposedMeasurementRowsAreContiguous) {
    std::mt19937_64 rng(17);
    const CMatrix Y = random_matrix(rng, 4, 3);
    const CVector v = vec(Y.transpose());
    for (int i = 0; i < 4; ++i)
        for (int l = 0; l < 3; ++l)
            EXPECT_EQ(v(i * 3 + l), Y(i, l));
}

TEST(Kron, VecIdentity) {
    std::mt19937_64 rng(18);
    for (int trial = 0; trial < 10; ++trial) {
        const CMatrix A = random_matrix(rng, 3, 4);
        const CMatrix C = random_matrix(rng, 4, 5);
        const CMatrix B = random_matrix(rng, 5, 2);
        const CVector lhs = kron(B.transpose(), A) * vec(C);
        const CVector rhs = vec(A * C * B);
        EXPECT_LE((lhs - rhs).norm(), 1e-12 * rhs.norm());
    }
}

TEST(LiftedMatrixTest, ExactLiftIsRankOne) {
    std::mt19937_64 rng(19);
    const CVector h = random_vector(rng, 4);
    const CMatrix X = random_matrix(rng, 10, 5);
    const LiftedMatrix x = LiftedMatrix::from_factors(h, X);
    ASSERT_EQ(x.data.rows(), 4);
    ASSERT_EQ(x.data.cols(), 50);
    for (int l = 0; l < 5; ++l)
        EXPECT_LT(rel_diff(x.block(l), h * X.col(l).transpose()), 1e-15);
    Eigen::JacobiSVD<CMatrix> svd(x.data);
    EXPECT_LE(svd.singularValues()(1), 1e-10 * svd.singularValues()(0));
}
