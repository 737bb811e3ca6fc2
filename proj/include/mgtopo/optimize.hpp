/// @file optimize.hpp
/// @brief SIMP compliance minimization with a sensitivity filter and the
/// optimality-criteria update.
#pragma once

#include "mgtopo/element.hpp"
#include "mgtopo/filter.hpp"
#include "mgtopo/grid.hpp"
#include "mgtopo/multigrid.hpp"
#include "mgtopo/operator.hpp"
#include "mgtopo/solver.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace mgtopo {

/// Discretized problem: grid, supports and loads, passive regions, material.
struct Problem {
    StructuredGrid grid;
    BoundarySpec bc;
    RegionMask regions;
    MaterialModel material;
    double nu = 0.3;

    void validate() const;
};

struct OptConfig {
    /// Target mean density over active elements.
    double volfrac = 0.12;
    /// Filter radius in length units; <= 0 selects 2.5 h.
    double filter_radius = 0.0;
    double move = 0.2;
    double eta = 0.5;
    double q = 1.0;
    double gamma = 1e-3;
    double ch_tol = 0.01;
    int max_iterations = 200;
    /// Lower density bound (also the density of passive voids).
    double rho_min = 0.0;
    /// Tolerance on |mean(rho_active) - volfrac| for the multiplier search.
    double volume_tol = 1e-6;
    /// Optional stop on relative compliance change; 0 disables it.
    double objective_tol = 0.0;

    void validate(double h) const;
    double radius(double h) const noexcept { return filter_radius > 0.0 ? filter_radius : 2.5 * h; }
};

/// Raised when no multiplier meets the volume target.
class InfeasibleVolume : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OptState {
    std::vector<double> densities;
    std::vector<double> u;
    int iteration = 0;
    std::vector<double> compliance_history;
    std::vector<double> change_history;
};

struct IterationRecord {
    int iter = 0;
    double compliance = 0.0;
    double volume = 0.0;
    double change = 0.0;
    int cg_iters = 0;
    double cg_residual = 0.0;
    bool cg_converged = false;
    double wall_s = 0.0;
    std::size_t aux_scalars = 0;
    double lambda = 0.0;
};

struct OptResult {
    OptState state;
    std::vector<IterationRecord> history;
    bool converged = false;
};

double compliance(std::span<const double> f, std::span<const double> u);

/// dc/drho_e = -youngs * ds(rho_e) * u_e^T K0 u_e, plus 2 u_e^T df_e/drho_e under gravity.
void sensitivities(const StiffnessOperator& op, std::span<const double> densities, std::span<const double> u,
                   const std::optional<GravitySpec>& gravity, std::span<double> dc);

/// Mean density over active elements.
double active_mean(std::span<const double> rho, const RegionMask& regions);

/// Density produced by the update rule for multiplier lambda.
void oc_candidate(std::span<const double> rho, std::span<const double> dc, std::span<const double> dv,
                  const RegionMask& regions, const OptConfig& cfg, double lambda, std::span<double> out);

/// Updates active densities so that their mean meets cfg.volfrac; returns
/// the multiplier. Inactive entries of `out` are copied from `rho`.
double oc_update(std::span<const double> rho, std::span<const double> dc, std::span<const double> dv,
                 const RegionMask& regions, const OptConfig& cfg, std::span<double> out);

/// External loads plus self-weight of the current design, constrained DOFs zeroed.
std::vector<double> update_gravity_load(const StructuredGrid& grid, std::span<const double> rho,
                                        const GravitySpec& gravity, std::span<const double> external,
                                        std::span<const std::uint8_t> fixed);

class Optimizer {
public:
    using Callback = std::function<void(const IterationRecord&, const OptState&)>;

    Optimizer(Problem problem, OptConfig opt, SolverConfig solver, MgOptions mg);

    /// Active elements at volfrac, passive solids at 1, passive voids at rho_min.
    OptState initial_state() const;
    /// One design iteration: load update, state solve, sensitivities, filter, update.
    IterationRecord step(OptState& state);
    /// Iterates until the change criterion or the iteration limit is met.
    OptResult run(OptState state, const Callback& on_iteration = {});

    const Problem& problem() const noexcept { return problem_; }
    const OptConfig& config() const noexcept { return opt_; }
    const FilterWeights& filter() const noexcept { return filter_; }
    /// Operator and hierarchy of the most recent step.
    const StiffnessOperator* last_operator() const noexcept { return op_ ? &*op_ : nullptr; }
    const MgHierarchy* hierarchy() const noexcept { return hier_.get(); }

private:
    Problem problem_;
    OptConfig opt_;
    SolverConfig solver_;
    MgOptions mg_;
    ElementStiffness ke_;
    FilterWeights filter_;
    std::vector<std::uint8_t> fixed_;
    std::vector<double> external_;
    std::optional<StiffnessOperator> op_;
    std::unique_ptr<MgHierarchy> hier_;
};

}  // namespace mgtopo
