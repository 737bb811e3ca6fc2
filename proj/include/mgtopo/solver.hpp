/// @file solver.hpp
/// @brief Preconditioned conjugate gradients with multigrid, Jacobi or no
/// preconditioning.
#pragma once

#include "mgtopo/linalg.hpp"
#include "mgtopo/multigrid.hpp"
#include "mgtopo/operator.hpp"

#include <memory>
#include <span>
#include <stdexcept>
#include <string>

namespace mgtopo {

enum class PreconditionerKind { multigrid, jacobi, none };

const char* to_string(PreconditionerKind k) noexcept;
PreconditionerKind parse_preconditioner(const std::string& s);

struct SolverConfig {
    /// Target for ||f - K u||_2 / ||f||_2.
    double tolerance = 1e-5;
    int max_iterations = 200;
    PreconditionerKind preconditioner = PreconditionerKind::multigrid;
    bool warm_start = true;
    /// Period of true-residual recomputation.
    int residual_refresh = 50;

    void validate() const;
};

struct SolveReport {
    int iterations = 0;
    /// True relative residual of the returned iterate.
    double relative_residual = 0.0;
    /// Recursively updated relative residual at exit.
    double recursive_residual = 0.0;
    int preconditioner_applications = 0;
    double wall_seconds = 0.0;
    bool converged = false;
    /// Auxiliary vector scalars: 4 CG vectors plus preconditioner workspace.
    std::size_t aux_scalars = 0;
};

/// Raised on NaN/Inf or a non-positive curvature <p, Kp>.
class NumericalBreakdown : public std::runtime_error {
public:
    NumericalBreakdown(int iteration, const std::string& what);
    int iteration() const noexcept { return iteration_; }

private:
    int iteration_;
};

class Preconditioner {
public:
    virtual ~Preconditioner() = default;
    /// z = M^{-1} r
    virtual void apply(std::span<const double> r, std::span<double> z) = 0;
    virtual std::size_t workspace_scalars() const { return 0; }
};

class IdentityPreconditioner final : public Preconditioner {
public:
    void apply(std::span<const double> r, std::span<double> z) override { copy(r, z); }
};

class JacobiPreconditioner final : public Preconditioner {
public:
    explicit JacobiPreconditioner(const StiffnessOperator& op);
    void apply(std::span<const double> r, std::span<double> z) override;
    std::size_t workspace_scalars() const override { return inv_diag_.size(); }

private:
    Vector inv_diag_;
};

/// One V-cycle per application.
class MultigridPreconditioner final : public Preconditioner {
public:
    explicit MultigridPreconditioner(MgHierarchy& hier) : hier_(hier) {}
    void apply(std::span<const double> r, std::span<double> z) override { hier_.v_cycle(r, z); }
    std::size_t workspace_scalars() const override { return hier_.vcycle_vector_scalars(); }

private:
    MgHierarchy& hier_;
};

/// Solves A u = f starting from the incoming u.
SolveReport pcg(const LinearOperator& A, Preconditioner& M, std::span<const double> f, std::span<double> u,
                const SolverConfig& cfg);

/// PCG with one V-cycle as preconditioner. On entry u holds the previous
/// solution, used as the initial iterate when warm starting.
SolveReport mgcg_solve(const StiffnessOperator& A, MgHierarchy& hier, std::span<const double> f,
                       std::span<double> u, const SolverConfig& cfg);

/// Dispatches on cfg.preconditioner; `hier` is required for multigrid.
SolveReport solve_state(const StiffnessOperator& A, MgHierarchy* hier, std::span<const double> f,
                        std::span<double> u, const SolverConfig& cfg);

}  // namespace mgtopo
