/// @file multigrid.hpp
/// @brief Geometric multigrid hierarchy with trilinear transfers, damped
/// Jacobi smoothing and a direct solve on the coarsest level.
///
/// Levels are indexed from 0 (finest) to num_levels()-1 (coarsest). Each
/// coarser grid halves every element count. A coarse DOF is constrained when
/// the fine DOF at the coincident node is constrained.
#pragma once

#include "mgtopo/grid.hpp"
#include "mgtopo/linalg.hpp"
#include "mgtopo/operator.hpp"
#include "mgtopo/stencil.hpp"

#include <Eigen/SparseCholesky>

#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mgtopo {

enum class CoarseScheme { galerkin, homogenized };

const char* to_string(CoarseScheme s) noexcept;
CoarseScheme parse_coarse_scheme(const std::string& s);

struct MgOptions {
    int max_levels = 4;
    CoarseScheme scheme = CoarseScheme::galerkin;
    /// Jacobi damping in (0,1]; 0 selects safe_jacobi_omega() of the fine element.
    double omega = 0.0;
    int nu_pre = 1;
    int nu_post = 1;
    /// Largest coarsest-level system accepted for factorization.
    std::size_t coarse_guard = kDenseGuard;

    void validate() const;
};

/// Raised when the hierarchy cannot be set up (oversized or indefinite
/// coarsest system).
class SetupError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// min(0.6, 1.9 / lambda_max(D0^-1 K0)). Since lambda_max(D^-1 K) never
/// exceeds the element value for any density field, this keeps the smoother
/// convergent and the V-cycle positive definite.
double safe_jacobi_omega(const ElementStiffness& ke);

/// Number of levels obtainable for `grid` when at most `max_levels` are requested.
int feasible_levels(const StructuredGrid& grid, int max_levels);

class MgHierarchy {
public:
    /// Builds all levels over `fine`, which must outlive the hierarchy.
    /// `fine_densities` drives the homogenized scheme.
    MgHierarchy(const StiffnessOperator& fine, std::span<const double> fine_densities, const MgOptions& opts);

    MgHierarchy(const MgHierarchy&) = delete;
    MgHierarchy& operator=(const MgHierarchy&) = delete;
    MgHierarchy(MgHierarchy&&) noexcept;
    MgHierarchy& operator=(MgHierarchy&&) noexcept;
    ~MgHierarchy();

    /// Rebuilds coarse operators and the factorization for new densities on
    /// the same grid and constraints.
    void refresh(const StiffnessOperator& fine, std::span<const double> fine_densities);

    int num_levels() const noexcept { return int(levels_.size()); }
    const MgOptions& options() const noexcept { return opts_; }
    double omega() const noexcept { return opts_.omega; }
    const StructuredGrid& grid(int l) const;
    std::span<const std::uint8_t> fixed_mask(int l) const;
    const LinearOperator& level_operator(int l) const;
    /// Coarse element densities (homogenized scheme, l >= 1).
    std::span<const double> coarse_densities(int l) const;

    /// Fine vector at level l from coarse vector at level l+1.
    void prolongate(int l, std::span<const double> coarse, std::span<double> fine) const;
    /// Coarse vector at level l+1 from fine vector at level l (transpose of prolongate).
    void restrict(int l, std::span<const double> fine, std::span<double> coarse) const;
    /// Operator of level l >= 1 applied to u.
    void coarse_apply(int l, std::span<const double> u, std::span<double> v) const;
    /// Damped Jacobi sweeps at level l; constrained entries keep their values.
    void jacobi_smooth(int l, std::span<double> u, std::span<const double> f, int sweeps);
    /// One V-cycle from a zero initial iterate.
    void v_cycle(std::span<const double> f, std::span<double> u);
    /// Direct solve with the coarsest-level operator.
    void coarse_solve(std::span<const double> f, std::span<double> u) const;

    /// Scalars held in level-resident V-cycle vectors (5 per level).
    std::size_t vcycle_vector_scalars() const;
    /// Scalars held by coarse-level operators (stencils or densities).
    std::size_t coarse_operator_scalars() const;
    /// Nonzeros of the coarsest Cholesky factor.
    std::size_t factor_scalars() const;

private:
    struct Level;

    void build_levels(const StructuredGrid& fine_grid, std::span<const std::uint8_t> fine_fixed);
    void build_operators(const StiffnessOperator& fine, std::span<const double> fine_densities);
    void factorize();
    void check_level(int l, int lo) const;
    void smooth(int l, int sweeps, bool zero_start);
    void cycle(int l);

    MgOptions opts_;
    std::vector<std::unique_ptr<Level>> levels_;
    std::unique_ptr<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>> factor_;
};

}  // namespace mgtopo
