#pragma once

#include <cstddef>

#include "selfcal/types.hpp"

namespace selfcal {

/// Lifted unknown X~ = h [x_1^T, ..., x_L^T], stored m x (L*N).
/// Column c = l*N + j (0-based) holds snapshot l at grid point j.
struct LiftedMatrix {
    CMatrix data;
    int m = 0;
    int L = 0;
    int N = 0;

    LiftedMatrix() = default;
    LiftedMatrix(CMatrix data, int m, int L, int N);

    static LiftedMatrix zeros(int m, int L, int N);
    /// h * [x_1^T, ..., x_L^T] for the N x L source matrix X.
    static LiftedMatrix from_factors(const CVector &h, const CMatrix &X);

    /// m x N block belonging to snapshot l.
    auto block(int l) const { return data.middleCols(static_cast<Index>(l) * N, N); }
    auto block(int l) { return data.middleCols(static_cast<Index>(l) * N, N); }
};

/// Holds B (M x m), G (M x N) and the snapshot count; b_i is column i of
/// B^H and g_i^T is row i of G.
class LiftedOperator {
  public:
    LiftedOperator(CMatrix basis, CMatrix grid, int num_snapshots);

    int sensors() const { return static_cast<int>(basis_.rows()); }
    int calib_dim() const { return static_cast<int>(basis_.cols()); }
    int grid_size() const { return static_cast<int>(grid_.cols()); }
    int snapshots() const { return snapshots_; }

    const CMatrix &basis() const { return basis_; }
    const CMatrix &grid() const { return grid_; }

    CVector b(int i) const { return basis_.row(i).adjoint(); }
    CVector g(int i) const { return grid_.row(i).transpose(); }

    /// Same B and G with a different snapshot count.
    LiftedOperator with_snapshots(int num_snapshots) const;

    /// M x M matrix (B B^H) .* (G G^H). A A^* acts on every snapshot
    /// column of U by this matrix.
    CMatrix snapshot_gram() const;

  private:
    CMatrix basis_;
    CMatrix grid_;
    int snapshots_;
};

/// Block-diagonal (L*N) x L matrix with g on every diagonal block.
CMatrix make_gtilde(const CVector &g, int num_snapshots);

/// Row i of the result is b_i^H X~ G~_i.
CMatrix apply_forward(const LiftedOperator &op, const LiftedMatrix &x);

/// sum_i b_i u_i G~_i^H, u_i being row i of U.
LiftedMatrix apply_adjoint(const LiftedOperator &op, const CMatrix &U);

/// Default cap on the number of complex entries of a dense Phi.
inline constexpr std::size_t kDefaultDenseBudget = 200'000'000;

/// Dense (M*L) x (m*L*N) matrix of the lifted operator, assembled from
/// Phi^H = [conj(G~_1) (x) b_1, ..., conj(G~_M) (x) b_M]. Satisfies
/// Phi vec(X~) = vec(A(X~)^T) with column-major vec.
CMatrix build_phi(const LiftedOperator &op,
                  std::size_t budget = kDefaultDenseBudget);

/// Number of entries build_phi would allocate.
std::size_t phi_entries(const LiftedOperator &op);

/// Column-major stacking.
CVector vec(const CMatrix &x);
CMatrix unvec(const CVector &v, Index rows, Index cols);

/// Kronecker product a (x) b.
CMatrix kron(const CMatrix &a, const CMatrix &b);

} // namespace selfcal
