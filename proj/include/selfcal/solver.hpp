#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "selfcal/lifting.hpp"
#include "selfcal/types.hpp"

namespace selfcal {

enum class GroupMode {
    grid,        // one group per grid point: all m*L coordinates of that point
    row,         // one group per row of X~
    elementwise, // plain l1
};

std::string to_string(GroupMode mode);
GroupMode parse_group_mode(const std::string &name);

/// Partition of the m*L*N coordinates of vec(X~) into groups.
class GroupStructure {
  public:
    GroupStructure() = default;
    GroupStructure(GroupMode mode, std::vector<std::vector<Index>> groups,
                   Index num_coords);

    static GroupStructure make(GroupMode mode, int m, int L, int N);

    GroupMode mode() const { return mode_; }
    const std::vector<std::vector<Index>> &groups() const { return groups_; }
    std::size_t size() const { return groups_.size(); }
    Index num_coords() const { return num_coords_; }

    /// Euclidean norm of every group.
    RVector group_norms(const CVector &v) const;

  private:
    GroupMode mode_ = GroupMode::grid;
    std::vector<std::vector<Index>> groups_;
    Index num_coords_ = 0;
};

/// Sum over groups of the Euclidean norm of the group's coordinates.
double group_norm(const CVector &v, const GroupStructure &groups);
double group_norm(const LiftedMatrix &x, const GroupStructure &groups);

/// Block soft-thresholding: v_g * max(0, 1 - tau / |v_g|).
CVector prox_group_l21(const CVector &v, const GroupStructure &groups, double tau);

/// Euclidean projection of r onto the ball of radius eta around center.
CVector project_ball(const CVector &r, const CVector &center, double eta);

/// Linear map from lifted coordinates vec(X~) to measurements vec(Y^T).
class LinearMap {
  public:
    virtual ~LinearMap() = default;
    virtual Index rows() const = 0;
    virtual Index cols() const = 0;
    virtual CVector forward(const CVector &x) const = 0;
    virtual CVector adjoint(const CVector &y) const = 0;
    /// Dense matrix, when the map has one or can build one within budget.
    virtual std::optional<CMatrix> dense(std::size_t budget) const = 0;
};

class DenseMap final : public LinearMap {
  public:
    explicit DenseMap(CMatrix matrix) : matrix_(std::move(matrix)) {}
    Index rows() const override { return matrix_.rows(); }
    Index cols() const override { return matrix_.cols(); }
    CVector forward(const CVector &x) const override { return matrix_ * x; }
    CVector adjoint(const CVector &y) const override { return matrix_.adjoint() * y; }
    std::optional<CMatrix> dense(std::size_t) const override { return matrix_; }
    const CMatrix &matrix() const { return matrix_; }

  private:
    CMatrix matrix_;
};

/// Operator-form map backed by apply_forward / apply_adjoint.
class LiftedMap final : public LinearMap {
  public:
    explicit LiftedMap(LiftedOperator op) : op_(std::move(op)) {}
    Index rows() const override;
    Index cols() const override;
    CVector forward(const CVector &x) const override;
    CVector adjoint(const CVector &y) const override;
    std::optional<CMatrix> dense(std::size_t budget) const override;
    const LiftedOperator &op() const { return op_; }

  private:
    LiftedOperator op_;
};

struct LiftedProblem {
    std::shared_ptr<const LinearMap> map;
    CVector b;    // vec(Y^T)
    double eta = 0.0;
    GroupStructure groups;
    int m = 1, L = 1, N = 1; // shape of X~ for reporting

    void validate() const;
};

/// min ||X~||_{2,1} s.t. ||A(X~) - Y|| <= eta for the lifted operator.
LiftedProblem make_problem(const LiftedOperator &op, const CMatrix &Y, double eta,
                           GroupMode mode);

enum class SolveMode { constrained, regularized };
enum class Backend { automatic, dense_factorized, operator_iterative };

std::string to_string(Backend backend);
Backend parse_backend(const std::string &name);

struct SolverOptions {
    SolveMode mode = SolveMode::constrained;
    double lambda = 0.0; // regularized mode weight
    double rho = 1.0;
    double relaxation = 1.6; // over-relaxation factor in [1, 2)
    bool adapt_rho = true;
    int rho_check_every = 50;
    int max_iters = 20000;
    double tol_primal = 1e-7;
    double tol_dual = 1e-7;
    Backend backend = Backend::automatic;
    /// Hard cap on dense Phi entries.
    std::size_t dense_budget = kDefaultDenseBudget;
    /// The automatic backend only goes dense below this size.
    std::size_t auto_dense_limit = 4'000'000;
    double cg_tol = 1e-10;
    bool record_trace = true;

    void validate() const;
};

struct SolveReport {
    CVector solution;
    double objective = 0.0;
    double residual_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    bool infeasible_tolerance = false;
    Backend backend = Backend::automatic;
    std::vector<double> primal_trace;
    std::vector<double> dual_trace;
    std::vector<double> objective_trace;

    LiftedMatrix lifted(const LiftedProblem &problem) const;
};

/// ADMM on the splitting w = v (group norm), z = A v (eta-ball).
SolveReport solve_constrained(const LiftedProblem &problem, const SolverOptions &opts);

/// Accelerated proximal gradient with monotone restarts on
/// 0.5 ||A v - b||^2 + lambda ||v||_{2,1}. Reported objective is the full
/// Lagrangian objective.
SolveReport solve_regularized(const LiftedProblem &problem, double lambda,
                              const SolverOptions &opts);

/// Dispatches on opts.mode.
SolveReport solve(const LiftedProblem &problem, const SolverOptions &opts);

/// Smallest lambda for which the regularized solution is zero.
double lambda_max(const LiftedProblem &problem);

/// Largest singular value of the map by power iteration.
double estimate_operator_norm(const LinearMap &map, int iters = 200);

struct OracleOptions {
    int iterations = 200000;
    double step0 = 0.0; // 0 picks a scale from the problem
};

/// Projected subgradient descent from zero with steps step0 / sqrt(k+1),
/// restarted from the best iterate in epochs with a halved step0.
/// Exact projection onto {v : ||A v - b|| <= eta} through the spectral
/// decomposition of A A^H. Restricted to m*L*N <= 2000.
SolveReport slow_oracle(const LiftedProblem &problem, const OracleOptions &opts = {});

inline constexpr Index kOracleMaxCoords = 2000;

} // namespace selfcal
