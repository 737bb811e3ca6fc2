#include "mgtopo/solver.hpp"

#include <chrono>
#include <cmath>

namespace mgtopo {

const char* to_string(PreconditionerKind k) noexcept {
    switch (k) {
        case PreconditionerKind::multigrid: return "multigrid";
        case PreconditionerKind::jacobi: return "jacobi";
        case PreconditionerKind::none: return "none";
    }
    return "?";
}

PreconditionerKind parse_preconditioner(const std::string& s) {
    if (s == "multigrid" || s == "mg") return PreconditionerKind::multigrid;
    if (s == "jacobi") return PreconditionerKind::jacobi;
    if (s == "none") return PreconditionerKind::none;
    throw std::invalid_argument("unknown preconditioner '" + s + "' (expected multigrid, jacobi or none)");
}

void SolverConfig::validate() const {
    if (!(tolerance > 0.0)) throw std::invalid_argument("solver: tolerance must be > 0");
    if (max_iterations < 1) throw std::invalid_argument("solver: max_iterations must be >= 1");
    if (residual_refresh < 1) throw std::invalid_argument("solver: residual_refresh must be >= 1");
}

NumericalBreakdown::NumericalBreakdown(int iteration, const std::string& what)
    : std::runtime_error("numerical breakdown at CG iteration " + std::to_string(iteration) + ": " + what),
      iteration_(iteration) {}

JacobiPreconditioner::JacobiPreconditioner(const StiffnessOperator& op) : inv_diag_(op.diagonal()) {
    for (double& d : inv_diag_) d = 1.0 / d;
}

void JacobiPreconditioner::apply(std::span<const double> r, std::span<double> z) {
    for (std::size_t i = 0; i < r.size(); ++i) z[i] = inv_diag_[i] * r[i];
}

namespace {

// r = f - A u
void true_residual(const LinearOperator& A, std::span<const double> f, std::span<const double> u,
                   std::span<double> r) {
    A.apply(u, r);
    const std::ptrdiff_t n = std::ptrdiff_t(r.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) r[i] = f[i] - r[i];
}

}  // namespace

SolveReport pcg(const LinearOperator& A, Preconditioner& M, std::span<const double> f, std::span<double> u,
                const SolverConfig& cfg) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t n = A.size();
    check_size(f, n, "pcg rhs");
    check_size(u, n, "pcg iterate");
    if (!all_finite(f)) throw NumericalBreakdown(0, "right-hand side is not finite");
    if (!all_finite(u)) throw NumericalBreakdown(0, "initial iterate is not finite");

    SolveReport rep;
    rep.aux_scalars = 4 * n + M.workspace_scalars();
    auto finish = [&] {
        rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return rep;
    };

    const double fnorm = norm2(f);
    if (fnorm == 0.0) {
        rep.converged = true;
        return finish();
    }

    Vector r(n), z(n), p(n), q(n);
    true_residual(A, f, u, r);
    double rel = norm2(r) / fnorm;
    rep.recursive_residual = rep.relative_residual = rel;
    if (rel <= cfg.tolerance) {
        rep.converged = true;
        return finish();
    }

    auto precondition = [&](int it) {
        M.apply(r, z);
        ++rep.preconditioner_applications;
        const double rz = dot(r, z);
        if (!std::isfinite(rz)) throw NumericalBreakdown(it, "preconditioned residual is not finite");
        if (rz <= 0.0) throw NumericalBreakdown(it, "preconditioner is not positive definite");
        return rz;
    };

    double rz = precondition(0);
    copy(z, p);
    for (int it = 1; it <= cfg.max_iterations; ++it) {
        rep.iterations = it;
        A.apply(p, q);
        const double pq = dot(p, q);
        if (!std::isfinite(pq)) throw NumericalBreakdown(it, "<p, Kp> is not finite");
        if (pq <= 0.0) throw NumericalBreakdown(it, "<p, Kp> <= 0, operator is not positive definite");
        const double alpha = rz / pq;
        axpy(alpha, p, u);
        axpy(-alpha, q, r);
        if (it % cfg.residual_refresh == 0) true_residual(A, f, u, r);
        rel = norm2(r) / fnorm;
        if (!std::isfinite(rel)) throw NumericalBreakdown(it, "residual is not finite");
        rep.recursive_residual = rel;

        if (rel <= cfg.tolerance) {
            true_residual(A, f, u, r);
            rel = norm2(r) / fnorm;
            rep.relative_residual = rel;
            if (rel <= cfg.tolerance) {
                rep.converged = true;
                return finish();
            }
            // Recursion drifted: restart from the true residual.
            rz = precondition(it);
            copy(z, p);
            continue;
        }
        const double rz_new = precondition(it);
        const double beta = rz_new / rz;
        rz = rz_new;
        xpby(z, beta, p);
    }
    true_residual(A, f, u, r);
    rep.relative_residual = norm2(r) / fnorm;
    rep.converged = rep.relative_residual <= cfg.tolerance;
    return finish();
}

SolveReport mgcg_solve(const StiffnessOperator& A, MgHierarchy& hier, std::span<const double> f,
                       std::span<double> u, const SolverConfig& cfg) {
    MultigridPreconditioner M(hier);
    check_size(u, A.size(), "mgcg iterate");
    if (!cfg.warm_start) fill(u, 0.0);
    for (auto d : A.fixed_dofs()) u[d] = 0.0;
    return pcg(A, M, f, u, cfg);
}

SolveReport solve_state(const StiffnessOperator& A, MgHierarchy* hier, std::span<const double> f,
                        std::span<double> u, const SolverConfig& cfg) {
    switch (cfg.preconditioner) {
        case PreconditionerKind::multigrid:
            if (!hier) throw std::invalid_argument("solve_state: multigrid preconditioner needs a hierarchy");
            return mgcg_solve(A, *hier, f, u, cfg);
        case PreconditionerKind::jacobi: {
            JacobiPreconditioner M(A);
            if (!cfg.warm_start) fill(u, 0.0);
            for (auto d : A.fixed_dofs()) u[d] = 0.0;
            return pcg(A, M, f, u, cfg);
        }
        case PreconditionerKind::none: {
            IdentityPreconditioner M;
            if (!cfg.warm_start) fill(u, 0.0);
            for (auto d : A.fixed_dofs()) u[d] = 0.0;
            return pcg(A, M, f, u, cfg);
        }
    }
    throw std::logic_error("solve_state: unreachable");
}

}  // namespace mgtopo
