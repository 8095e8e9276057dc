#include "selfcal/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace selfcal {

namespace {

constexpr double kTiny = 1e-300;
// Absolute floor on the feasibility check, relative to |b|. Needed when
// eta is zero or below what double precision can resolve.
constexpr double kFeasibilityFloor = 1e-9;
constexpr double kFeasibilityRel = 1e-6;

double feasibility_slack(double eta, double b_norm) {
    return std::max(kFeasibilityRel * eta, kFeasibilityFloor * b_norm);
}

} // namespace

// ---------------------------------------------------------------- groups

std::string to_string(GroupMode mode) {
    switch (mode) {
    case GroupMode::grid:
        return "grid";
    case GroupMode::row:
        return "row";
    case GroupMode::elementwise:
        return "l1";
    }
    return "grid";
}

GroupMode parse_group_mode(const std::string &name) {
    if (name == "grid")
        return GroupMode::grid;
    if (name == "row")
        return GroupMode::row;
    if (name == "l1" || name == "elementwise")
        return GroupMode::elementwise;
    throw std::invalid_argument("unknown group mode '" + name + "'");
}

GroupStructure::GroupStructure(GroupMode mode, std::vector<std::vector<Index>> groups,
                               Index num_coords)
    : mode_(mode), groups_(std::move(groups)), num_coords_(num_coords) {
    std::vector<char> seen(static_cast<std::size_t>(num_coords), 0);
    Index covered = 0;
    for (const auto &g : groups_)
        for (Index c : g) {
            if (c < 0 || c >= num_coords)
                throw DimensionError("group index out of range");
            if (seen[static_cast<std::size_t>(c)]++)
                throw std::invalid_argument("groups overlap");
            ++covered;
        }
    if (covered != num_coords)
        throw std::invalid_argument("groups do not cover every coordinate");
}

GroupStructure GroupStructure::make(GroupMode mode, int m, int L, int N) {
    if (m < 1 || L < 1 || N < 1)
        throw DimensionError("group dimensions must be positive");
    const Index n = static_cast<Index>(m) * L * N;
    // vec(X~) index of (row k, snapshot l, grid j) is (l*N + j)*m + k.
    auto coord = [&](int k, int l, int j) {
        return (static_cast<Index>(l) * N + j) * m + k;
    };
    std::vector<std::vector<Index>> groups;
    switch (mode) {
    case GroupMode::grid:
        groups.resize(static_cast<std::size_t>(N));
        for (int j = 0; j < N; ++j)
            for (int l = 0; l < L; ++l)
                for (int k = 0; k < m; ++k)
                    groups[static_cast<std::size_t>(j)].push_back(coord(k, l, j));
        break;
    case GroupMode::row:
        groups.resize(static_cast<std::size_t>(m));
        for (int k = 0; k < m; ++k)
            for (int l = 0; l < L; ++l)
                for (int j = 0; j < N; ++j)
                    groups[static_cast<std::size_t>(k)].push_back(coord(k, l, j));
        break;
    case GroupMode::elementwise:
        groups.resize(static_cast<std::size_t>(n));
        for (Index c = 0; c < n; ++c)
            groups[static_cast<std::size_t>(c)].push_back(c);
        break;
    }
    return {mode, std::move(groups), n};
}

RVector GroupStructure::group_norms(const CVector &v) const {
    if (v.size() != num_coords_)
        throw DimensionError("vector length does not match group structure");
    RVector norms(static_cast<Index>(groups_.size()));
    for (std::size_t g = 0; g < groups_.size(); ++g) {
        double sq = 0.0;
        for (Index c : groups_[g])
            sq += std::norm(v(c));
        norms(static_cast<Index>(g)) = std::sqrt(sq);
    }
    return norms;
}

double group_norm(const CVector &v, const GroupStructure &groups) {
    return groups.group_norms(v).sum();
}

double group_norm(const LiftedMatrix &x, const GroupStructure &groups) {
    return group_norm(vec(x.data), groups);
}

CVector prox_group_l21(const CVector &v, const GroupStructure &groups, double tau) {
    if (!(tau >= 0.0))
        throw std::invalid_argument("prox threshold must be nonnegative");
    const RVector norms = groups.group_norms(v);
    CVector out(v.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const double nrm = norms(static_cast<Index>(g));
        const double scale = nrm > tau ? 1.0 - tau / nrm : 0.0;
        for (Index c : groups.groups()[g])
            out(c) = scale * v(c);
    }
    return out;
}

CVector project_ball(const CVector &r, const CVector &center, double eta) {
    if (!(eta >= 0.0))
        throw std::invalid_argument("ball radius must be nonnegative");
    if (r.size() != center.size())
        throw DimensionError("ball projection operands differ in length");
    const CVector d = r - center;
    const double dist = d.norm();
    if (dist <= eta)
        return r;
    return center + (eta / dist) * d;
}

// ---------------------------------------------------------------- maps

Index LiftedMap::rows() const {
    return static_cast<Index>(op_.sensors()) * op_.snapshots();
}

Index LiftedMap::cols() const {
    return static_cast<Index>(op_.calib_dim()) * op_.snapshots() * op_.grid_size();
}

CVector LiftedMap::forward(const CVector &x) const {
    const int m = op_.calib_dim();
    const int L = op_.snapshots();
    const int N = op_.grid_size();
    LiftedMatrix lifted(unvec(x, m, static_cast<Index>(L) * N), m, L, N);
    return vec(apply_forward(op_, lifted).transpose());
}

CVector LiftedMap::adjoint(const CVector &y) const {
    const CMatrix U = unvec(y, op_.snapshots(), op_.sensors()).transpose();
    return vec(apply_adjoint(op_, U).data);
}

std::optional<CMatrix> LiftedMap::dense(std::size_t budget) const {
    if (phi_entries(op_) > budget)
        return std::nullopt;
    return build_phi(op_, budget);
}

void LiftedProblem::validate() const {
    if (!map)
        throw std::invalid_argument("problem has no linear map");
    if (b.size() != map->rows())
        throw DimensionError("measurement length does not match the map");
    if (groups.num_coords() != map->cols())
        throw DimensionError("group structure does not match the map");
    if (!(eta >= 0.0))
        throw std::invalid_argument("eta must be nonnegative");
}

LiftedProblem make_problem(const LiftedOperator &op, const CMatrix &Y, double eta,
                           GroupMode mode) {
    if (Y.rows() != op.sensors() || Y.cols() != op.snapshots())
        throw DimensionError("measurement matrix must be M x L");
    LiftedProblem p;
    p.map = std::make_shared<LiftedMap>(op);
    p.b = vec(Y.transpose());
    p.eta = eta;
    p.m = op.calib_dim();
    p.L = op.snapshots();
    p.N = op.grid_size();
    p.groups = GroupStructure::make(mode, p.m, p.L, p.N);
    p.validate();
    return p;
}

// ---------------------------------------------------------------- options

std::string to_string(Backend backend) {
    switch (backend) {
    case Backend::automatic:
        return "auto";
    case Backend::dense_factorized:
        return "dense";
    case Backend::operator_iterative:
        return "operator";
    }
    return "auto";
}

Backend parse_backend(const std::string &name) {
    if (name == "auto")
        return Backend::automatic;
    if (name == "dense")
        return Backend::dense_factorized;
    if (name == "operator")
        return Backend::operator_iterative;
    throw std::invalid_argument("unknown backend '" + name + "'");
}

void SolverOptions::validate() const {
    if (!(rho > 0.0))
        throw std::invalid_argument("rho must be positive");
    if (max_iters < 1)
        throw std::invalid_argument("max_iters must be at least 1");
    if (!(tol_primal > 0.0) || !(tol_dual > 0.0))
        throw std::invalid_argument("tolerances must be positive");
    if (rho_check_every < 1)
        throw std::invalid_argument("rho_check_every must be positive");
    if (!(relaxation > 0.0 && relaxation < 2.0))
        throw std::invalid_argument("relaxation must lie in (0, 2)");
    if (mode == SolveMode::regularized && !(lambda > 0.0))
        throw std::invalid_argument("regularized mode needs lambda > 0");
}

LiftedMatrix SolveReport::lifted(const LiftedProblem &problem) const {
    return {unvec(solution, problem.m, static_cast<Index>(problem.L) * problem.N),
            problem.m, problem.L, problem.N};
}

// ---------------------------------------------------------------- helpers

namespace {

/// Solves (I + A^H A) v = rhs by the identity
/// (I + A^H A)^{-1} = I - A^H (I + A A^H)^{-1} A, or directly when A is tall.
class NormalSolver {
  public:
    virtual ~NormalSolver() = default;
    virtual CVector solve(const CVector &rhs) = 0;
};

class DenseNormalSolver final : public NormalSolver {
  public:
    explicit DenseNormalSolver(CMatrix phi) : phi_(std::move(phi)) {
        tall_ = phi_.rows() > phi_.cols();
        if (tall_) {
            CMatrix s = phi_.adjoint() * phi_;
            s.diagonal().array() += 1.0;
            llt_.compute(s);
        } else {
            CMatrix s = phi_ * phi_.adjoint();
            s.diagonal().array() += 1.0;
            llt_.compute(s);
        }
    }

    CVector solve(const CVector &rhs) override {
        if (tall_)
            return llt_.solve(rhs);
        return rhs - phi_.adjoint() * llt_.solve(phi_ * rhs);
    }

  private:
    CMatrix phi_;
    bool tall_ = false;
    Eigen::LLT<CMatrix> llt_;
};

class IterativeNormalSolver final : public NormalSolver {
  public:
    IterativeNormalSolver(const LinearMap &map, double tol)
        : map_(map), tol_(tol), warm_(CVector::Zero(map.rows())) {}

    // Conjugate gradient on (I + A A^H) s = A rhs, warm started.
    CVector solve(const CVector &rhs) override {
        const CVector target = map_.forward(rhs);
        CVector s = warm_;
        CVector r = target - apply(s);
        CVector p = r;
        double rr = r.squaredNorm();
        const double stop = tol_ * tol_ * std::max(target.squaredNorm(), kTiny);
        for (int it = 0; it < 1000 && rr > stop; ++it) {
            const CVector Ap = apply(p);
            const double alpha = rr / std::real(p.dot(Ap));
            s += alpha * p;
            r -= alpha * Ap;
            const double rr_new = r.squaredNorm();
            p = r + (rr_new / rr) * p;
            rr = rr_new;
        }
        warm_ = s;
        return rhs - map_.adjoint(s);
    }

  private:
    CVector apply(const CVector &s) const { return s + map_.forward(map_.adjoint(s)); }

    const LinearMap &map_;
    double tol_;
    CVector warm_;
};

Backend resolve_backend(const LinearMap &map, const SolverOptions &opts) {
    if (opts.backend != Backend::automatic)
        return opts.backend;
    const auto entries = static_cast<std::size_t>(map.rows()) *
                         static_cast<std::size_t>(map.cols());
    return entries <= std::min(opts.auto_dense_limit, opts.dense_budget)
               ? Backend::dense_factorized
               : Backend::operator_iterative;
}

std::unique_ptr<NormalSolver> make_normal_solver(const LinearMap &map,
                                                 Backend backend,
                                                 const SolverOptions &opts) {
    if (backend == Backend::dense_factorized) {
        auto dense = map.dense(opts.dense_budget);
        if (!dense)
            throw ResourceError("dense backend requested but Phi exceeds the budget");
        return std::make_unique<DenseNormalSolver>(std::move(*dense));
    }
    return std::make_unique<IterativeNormalSolver>(map, opts.cg_tol);
}

/// min_v ||A v - b||.
double min_residual(const LinearMap &map, const CVector &b) {
    if (const auto *lifted = dynamic_cast<const LiftedMap *>(&map)) {
        // A A^H = I_L (x) K; its null space is that of K on every snapshot.
        Eigen::SelfAdjointEigenSolver<CMatrix> eig(lifted->op().snapshot_gram());
        const RVector &ev = eig.eigenvalues();
        const double cutoff = 1e-12 * std::max(ev.cwiseAbs().maxCoeff(), kTiny);
        const int M = lifted->op().sensors();
        const int L = lifted->op().snapshots();
        // b = vec(Y^T): entry i*L + l is Y(i, l).
        const CMatrix Y = unvec(b, L, M).transpose();
        const CMatrix coeffs = eig.eigenvectors().adjoint() * Y;
        double sq = 0.0;
        for (Index k = 0; k < ev.size(); ++k)
            if (ev(k) <= cutoff)
                sq += coeffs.row(k).squaredNorm();
        return std::sqrt(sq);
    }
    auto dense = map.dense(std::numeric_limits<std::size_t>::max());
    if (!dense)
        return 0.0;
    Eigen::CompleteOrthogonalDecomposition<CMatrix> cod(*dense);
    const CVector x = cod.solve(b);
    return (*dense * x - b).norm();
}

} // namespace

// ---------------------------------------------------------------- ADMM

SolveReport solve_constrained(const LiftedProblem &problem, const SolverOptions &opts) {
    problem.validate();
    opts.validate();
    const LinearMap &A = *problem.map;
    const CVector &b = problem.b;
    const double eta = problem.eta;
    const double b_norm = b.norm();
    const double slack = feasibility_slack(eta, b_norm);

    SolveReport report;
    report.backend = resolve_backend(A, opts);
    const Index n = A.cols();
    const Index p = A.rows();

    // The origin is optimal whenever it is feasible.
    if (b_norm <= eta) {
        report.solution = CVector::Zero(n);
        report.residual_norm = b_norm;
        report.converged = true;
        return report;
    }

    const double floor_residual = min_residual(A, b);
    report.infeasible_tolerance = floor_residual > eta + slack;

    auto normal = make_normal_solver(A, report.backend, opts);

    CVector v = CVector::Zero(n);
    CVector w = CVector::Zero(n);
    CVector z = project_ball(CVector::Zero(p), b, eta);
    CVector u1 = CVector::Zero(n);
    CVector u2 = CVector::Zero(p);
    double rho = opts.rho;
    const double alpha = opts.relaxation;
    double prev_obj = 0.0;

    for (int it = 1; it <= opts.max_iters; ++it) {
        v = normal->solve((w - u1) + A.adjoint(z - u2));
        const CVector Av = A.forward(v);

        const CVector w_old = w;
        const CVector z_old = z;
        // Over-relaxed copies of v and A v.
        const CVector v_hat = alpha * v + (1.0 - alpha) * w_old;
        const CVector Av_hat = alpha * Av + (1.0 - alpha) * z_old;
        w = prox_group_l21(v_hat + u1, problem.groups, 1.0 / rho);
        z = project_ball(Av_hat + u2, b, eta);
        u1 += v_hat - w;
        u2 += Av_hat - z;

        const double r_norm = std::sqrt((v - w).squaredNorm() + (Av - z).squaredNorm());
        const double s_norm = rho * ((w - w_old) + A.adjoint(z - z_old)).norm();
        const double primal_scale =
            std::max(std::sqrt(v.squaredNorm() + Av.squaredNorm()),
                     std::sqrt(w.squaredNorm() + z.squaredNorm()));
        // C^H y vanishes identically after the v-step, so scale by |y| itself.
        const double dual_scale = rho * std::sqrt(u1.squaredNorm() + u2.squaredNorm());
        const double eps_pri = opts.tol_primal * std::max(primal_scale, kTiny);
        const double eps_dual = opts.tol_dual * std::max(dual_scale, kTiny);
        const double obj = group_norm(w, problem.groups);

        if (opts.record_trace) {
            report.primal_trace.push_back(r_norm);
            report.dual_trace.push_back(s_norm);
            report.objective_trace.push_back(obj);
        }
        report.iterations = it;

        const bool obj_settled =
            std::abs(obj - prev_obj) <= opts.tol_primal * std::max(obj, kTiny);
        prev_obj = obj;
        if (r_norm <= eps_pri && s_norm <= eps_dual && obj_settled) {
            const double residual = (A.forward(w) - b).norm();
            if (residual <= eta + slack) {
                report.converged = !report.infeasible_tolerance;
                break;
            }
        }

        if (opts.adapt_rho && it % opts.rho_check_every == 0) {
            const double r_rel = r_norm / std::max(primal_scale, kTiny);
            const double s_rel = s_norm / std::max(dual_scale, kTiny);
            if (r_rel > 10.0 * s_rel) {
                rho *= 2.0;
                u1 /= 2.0;
                u2 /= 2.0;
            } else if (s_rel > 10.0 * r_rel) {
                rho /= 2.0;
                u1 *= 2.0;
                u2 *= 2.0;
            }
        }
    }

    report.solution = std::move(w);
    report.objective = group_norm(report.solution, problem.groups);
    report.residual_norm = (A.forward(report.solution) - b).norm();
    return report;
}

// ---------------------------------------------------------------- FISTA

double estimate_operator_norm(const LinearMap &map, int iters) {
    // Deterministic start vector with no special structure.
    CVector x(map.cols());
    for (Index i = 0; i < x.size(); ++i)
        x(i) = cplx(1.0 + 0.37 * std::sin(1.3 * static_cast<double>(i)),
                    0.21 * std::cos(0.7 * static_cast<double>(i)));
    x.normalize();
    double sigma_sq = 0.0;
    for (int k = 0; k < iters; ++k) {
        CVector y = map.adjoint(map.forward(x));
        const double nrm = y.norm();
        if (nrm <= kTiny)
            return 0.0;
        const double next = nrm;
        x = y / nrm;
        if (k > 10 && std::abs(next - sigma_sq) <= 1e-12 * next) {
            sigma_sq = next;
            break;
        }
        sigma_sq = next;
    }
    return std::sqrt(sigma_sq);
}

double lambda_max(const LiftedProblem &problem) {
    problem.validate();
    return problem.groups.group_norms(problem.map->adjoint(problem.b)).maxCoeff();
}

SolveReport solve_regularized(const LiftedProblem &problem, double lambda,
                              const SolverOptions &opts) {
    problem.validate();
    if (!(lambda > 0.0))
        throw std::invalid_argument("lambda must be positive");
    SolverOptions checked = opts;
    checked.mode = SolveMode::regularized;
    checked.lambda = lambda;
    checked.validate();

    const LinearMap &A = *problem.map;
    const CVector &b = problem.b;
    const Index n = A.cols();

    // Power iteration approaches the top singular value from below; the
    // 1% margin keeps 1/sigma^2 a valid descent step.
    const double sigma = estimate_operator_norm(A) * 1.01;
    SolveReport report;
    report.backend = Backend::operator_iterative;
    // Zero satisfies the optimality condition exactly once lambda reaches
    // the largest group norm of A^* b.
    if (sigma <= kTiny || lambda >= lambda_max(problem)) {
        report.solution = CVector::Zero(n);
        report.residual_norm = b.norm();
        report.objective = 0.5 * b.squaredNorm();
        report.converged = true;
        return report;
    }
    const double step = 1.0 / (sigma * sigma);

    auto objective = [&](const CVector &x, double &residual) {
        residual = (A.forward(x) - b).norm();
        return 0.5 * residual * residual + lambda * group_norm(x, problem.groups);
    };
    auto prox_grad = [&](const CVector &y) {
        const CVector grad = A.adjoint(A.forward(y) - b);
        return prox_group_l21(y - step * grad, problem.groups, lambda * step);
    };

    CVector x = CVector::Zero(n);
    CVector y = x;
    double t = 1.0;
    double res = 0.0;
    double fx = objective(x, res);

    for (int it = 1; it <= checked.max_iters; ++it) {
        CVector x_new = prox_grad(y);
        double res_new = 0.0;
        double f_new = objective(x_new, res_new);
        if (f_new > fx) {
            // Restart from the last iterate with a plain proximal step.
            t = 1.0;
            y = x;
            x_new = prox_grad(x);
            f_new = objective(x_new, res_new);
        }
        const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double step_size = (x_new - y).norm();
        const CVector y_next = x_new + ((t - 1.0) / t_new) * (x_new - x);
        const double scale = std::max(x_new.norm(), kTiny);

        if (checked.record_trace) {
            report.primal_trace.push_back(step_size / step);
            report.dual_trace.push_back((x_new - x).norm());
            report.objective_trace.push_back(f_new);
        }
        report.iterations = it;

        const bool done = step_size <= checked.tol_primal * scale &&
                          std::abs(fx - f_new) <= checked.tol_dual * std::max(f_new, kTiny);
        x = std::move(x_new);
        fx = f_new;
        res = res_new;
        y = y_next;
        t = t_new;
        if (done || (x.norm() == 0.0 && step_size == 0.0)) {
            report.converged = true;
            break;
        }
    }

    report.solution = std::move(x);
    report.objective = group_norm(report.solution, problem.groups);
    report.residual_norm = res;
    return report;
}

SolveReport solve(const LiftedProblem &problem, const SolverOptions &opts) {
    if (opts.mode == SolveMode::regularized)
        return solve_regularized(problem, opts.lambda, opts);
    return solve_constrained(problem, opts);
}

// ---------------------------------------------------------------- oracle

namespace {

/// Exact Euclidean projection onto {v : ||Phi v - b|| <= eta}.
class BallPreimageProjector {
  public:
    BallPreimageProjector(const CMatrix &phi, const CVector &b, double eta)
        : phi_(phi), b_(b), eta_(eta) {
        Eigen::SelfAdjointEigenSolver<CMatrix> eig(phi_ * phi_.adjoint());
        q_ = eig.eigenvectors();
        lambdas_ = eig.eigenvalues().cwiseMax(0.0);
        const double cutoff = 1e-12 * std::max(lambdas_.maxCoeff(), kTiny);
        for (Index k = 0; k < lambdas_.size(); ++k)
            if (lambdas_(k) <= cutoff)
                lambdas_(k) = 0.0;
    }

    CVector project(const CVector &point) const {
        const CVector r = phi_ * point - b_;
        if (r.norm() <= eta_)
            return point;
        const CVector c = q_.adjoint() * r;
        const RVector c_sq = c.cwiseAbs2();
        auto resid_sq = [&](double mu) {
            return (c_sq.array() / (1.0 + mu * lambdas_.array()).square()).sum();
        };
        const double target = eta_ * eta_;
        double lo = 0.0;
        double hi = 1.0 / std::max(lambdas_.maxCoeff(), kTiny);
        int grow = 0;
        while (resid_sq(hi) > target && grow++ < 2000)
            hi *= 2.0;
        for (int k = 0; k < 200 && hi - lo > 1e-15 * hi; ++k) {
            const double mid = 0.5 * (lo + hi);
            (resid_sq(mid) > target ? lo : hi) = mid;
        }
        const double mu = hi;
        const CVector s = q_ * (c.array() / (1.0 + mu * lambdas_.array())).matrix();
        return point - mu * (phi_.adjoint() * s);
    }

  private:
    const CMatrix &phi_;
    const CVector &b_;
    double eta_;
    CMatrix q_;
    RVector lambdas_;
};

CVector group_subgradient(const CVector &v, const GroupStructure &groups) {
    const RVector norms = groups.group_norms(v);
    CVector g = CVector::Zero(v.size());
    for (std::size_t k = 0; k < groups.size(); ++k) {
        const double nrm = norms(static_cast<Index>(k));
        if (nrm > 0.0)
            for (Index c : groups.groups()[k])
                g(c) = v(c) / nrm;
    }
    return g;
}

} // namespace

namespace {
constexpr int kOracleEpochs = 10;
constexpr double kOracleStepDecay = 0.5;
} // namespace

SolveReport slow_oracle(const LiftedProblem &problem, const OracleOptions &opts) {
    problem.validate();
    if (problem.map->cols() > kOracleMaxCoords)
        throw ResourceError("slow_oracle is limited to m*L*N <= 2000 coordinates");
    if (opts.iterations < 1)
        throw std::invalid_argument("oracle needs at least one iteration");

    const CVector &b = problem.b;
    const Index n = problem.map->cols();
    SolveReport report;
    report.backend = Backend::dense_factorized;
    if (b.norm() <= problem.eta) {
        report.solution = CVector::Zero(n);
        report.residual_norm = b.norm();
        report.converged = true;
        return report;
    }

    if (min_residual(*problem.map, b) > problem.eta + feasibility_slack(problem.eta, b.norm())) {
        report.solution = CVector::Zero(n);
        report.residual_norm = b.norm();
        report.infeasible_tolerance = true;
        return report;
    }

    const auto dense = problem.map->dense(std::numeric_limits<std::size_t>::max());
    const CMatrix &phi = *dense;
    const BallPreimageProjector projector(phi, b, problem.eta);

    CVector x = projector.project(CVector::Zero(n));
    double step0 = opts.step0;
    if (step0 <= 0.0)
        step0 = std::max(x.norm(), kTiny) /
                std::sqrt(static_cast<double>(problem.groups.size()));

    // Epochs restart from the best point so far with a smaller base step;
    // within an epoch the step decays as 1/sqrt(k+1).
    CVector best = x;
    double best_obj = group_norm(x, problem.groups);
    const int epochs = std::max(1, std::min(kOracleEpochs, opts.iterations));
    int done = 0;
    for (int e = 0; e < epochs; ++e) {
        const int count = (opts.iterations - done) / (epochs - e);
        x = best;
        for (int k = 0; k < count; ++k) {
            const double alpha = step0 / std::sqrt(static_cast<double>(k) + 1.0);
            x = projector.project(x - alpha * group_subgradient(x, problem.groups));
            const double obj = group_norm(x, problem.groups);
            if (obj < best_obj) {
                best_obj = obj;
                best = x;
            }
        }
        done += count;
        step0 *= kOracleStepDecay;
    }
    report.iterations = opts.iterations;
    report.solution = std::move(best);
    report.objective = best_obj;
    report.residual_norm = (phi * report.solution - b).norm();
    report.converged = true;
    return report;
}

} // namespace selfcal
