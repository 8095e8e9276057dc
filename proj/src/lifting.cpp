#include "selfcal/lifting.hpp"

#include <sstream>

namespace selfcal {

LiftedMatrix::LiftedMatrix(CMatrix data_, int m_, int L_, int N_)
    : data(std::move(data_)), m(m_), L(L_), N(N_) {
    if (data.rows() != m || data.cols() != static_cast<Index>(L) * N)
        throw DimensionError("lifted matrix must be m x (L*N)");
}

LiftedMatrix LiftedMatrix::zeros(int m, int L, int N) {
    return {CMatrix::Zero(m, static_cast<Index>(L) * N), m, L, N};
}

LiftedMatrix LiftedMatrix::from_factors(const CVector &h, const CMatrix &X) {
    const int m = static_cast<int>(h.size());
    const int N = static_cast<int>(X.rows());
    const int L = static_cast<int>(X.cols());
    LiftedMatrix out = zeros(m, L, N);
    for (int l = 0; l < L; ++l)
        out.block(l) = h * X.col(l).transpose();
    return out;
}

LiftedOperator::LiftedOperator(CMatrix basis, CMatrix grid, int num_snapshots)
    : basis_(std::move(basis)), grid_(std::move(grid)), snapshots_(num_snapshots) {
    if (basis_.rows() != grid_.rows())
        throw DimensionError("B and G must have the same number of rows");
    if (num_snapshots < 1)
        throw DimensionError("snapshot count must be positive");
}

LiftedOperator LiftedOperator::with_snapshots(int num_snapshots) const {
    return {basis_, grid_, num_snapshots};
}

CMatrix LiftedOperator::snapshot_gram() const {
    return (basis_ * basis_.adjoint()).cwiseProduct(grid_ * grid_.adjoint());
}

CMatrix make_gtilde(const CVector &g, int num_snapshots) {
    if (num_snapshots < 1)
        throw DimensionError("snapshot count must be positive");
    const Index N = g.size();
    CMatrix out = CMatrix::Zero(N * num_snapshots, num_snapshots);
    for (int l = 0; l < num_snapshots; ++l)
        out.block(l * N, l, N, 1) = g;
    return out;
}

namespace {

void check_shape(const LiftedOperator &op, const LiftedMatrix &x) {
    if (x.m != op.calib_dim() || x.N != op.grid_size() || x.L != op.snapshots()) {
        std::ostringstream msg;
        msg << "lifted matrix shape (m=" << x.m << ", L=" << x.L << ", N=" << x.N
            << ") does not match operator (m=" << op.calib_dim()
            << ", L=" << op.snapshots() << ", N=" << op.grid_size() << ")";
        throw DimensionError(msg.str());
    }
}

} // namespace

CMatrix apply_forward(const LiftedOperator &op, const LiftedMatrix &x) {
    check_shape(op, x);
    const CMatrix &B = op.basis();
    const CMatrix &G = op.grid();
    CMatrix out(op.sensors(), op.snapshots());
    for (int l = 0; l < op.snapshots(); ++l)
        out.col(l) = (B * x.block(l)).cwiseProduct(G).rowwise().sum();
    return out;
}

LiftedMatrix apply_adjoint(const LiftedOperator &op, const CMatrix &U) {
    if (U.rows() != op.sensors() || U.cols() != op.snapshots())
        throw DimensionError("adjoint input must be M x L");
    const CMatrix Bh = op.basis().adjoint();
    const CMatrix Gc = op.grid().conjugate();
    LiftedMatrix out = LiftedMatrix::zeros(op.calib_dim(), op.snapshots(), op.grid_size());
    for (int l = 0; l < op.snapshots(); ++l)
        out.block(l) = Bh * (U.col(l).asDiagonal() * Gc);
    return out;
}

std::size_t phi_entries(const LiftedOperator &op) {
    const auto rows = static_cast<std::size_t>(op.sensors()) * op.snapshots();
    const auto cols = static_cast<std::size_t>(op.calib_dim()) * op.snapshots() *
                      op.grid_size();
    return rows * cols;
}

CMatrix build_phi(const LiftedOperator &op, std::size_t budget) {
    const std::size_t entries = phi_entries(op);
    if (entries > budget) {
        std::ostringstream msg;
        msg << "dense Phi needs " << entries << " entries, budget is " << budget
            << "; use the operator-form solver backend";
        throw ResourceError(msg.str());
    }
    const int M = op.sensors();
    const int L = op.snapshots();
    const Index cols = static_cast<Index>(op.calib_dim()) * L * op.grid_size();
    CMatrix phi_h(cols, static_cast<Index>(M) * L);
    for (int i = 0; i < M; ++i)
        phi_h.middleCols(static_cast<Index>(i) * L, L) =
            kron(make_gtilde(op.g(i), L).conjugate(), op.b(i));
    return phi_h.adjoint();
}

CVector vec(const CMatrix &x) {
    return Eigen::Map<const CVector>(x.data(), x.size());
}

CMatrix unvec(const CVector &v, Index rows, Index cols) {
    if (rows < 0 || cols < 0 || v.size() != rows * cols)
        throw DimensionError("vector length does not match rows * cols");
    return Eigen::Map<const CMatrix>(v.data(), rows, cols);
}

CMatrix kron(const CMatrix &a, const CMatrix &b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

} // namespace selfcal
