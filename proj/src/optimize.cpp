#include "mgtopo/optimize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

namespace mgtopo {

void Problem::validate() const {
    bc.validate(grid);
    material.validate();
    if (regions.size() != grid.num_elements()) throw std::invalid_argument("problem: region mask size mismatch");
    if (!(nu >= 0.0 && nu < 0.5)) throw std::invalid_argument("problem: Poisson ratio must lie in [0, 0.5)");
    if (regions.count(RegionClass::active) == 0) throw std::invalid_argument("problem: no active elements");
}

void OptConfig::validate(double h) const {
    if (!(volfrac > 0.0 && volfrac <= 1.0)) throw std::invalid_argument("optimizer: volfrac must lie in (0,1]");
    if (!(move > 0.0 && move < 1.0)) throw std::invalid_argument("optimizer: move limit must lie in (0,1)");
    if (!(eta > 0.0)) throw std::invalid_argument("optimizer: eta must be > 0");
    if (!(q > 0.0)) throw std::invalid_argument("optimizer: q must be > 0");
    if (!(gamma > 0.0)) throw std::invalid_argument("optimizer: gamma must be > 0");
    if (!(ch_tol > 0.0)) throw std::invalid_argument("optimizer: ch_tol must be > 0");
    if (max_iterations < 1) throw std::invalid_argument("optimizer: max_iterations must be >= 1");
    if (!(rho_min >= 0.0 && rho_min < volfrac)) throw std::invalid_argument("optimizer: rho_min must lie in [0, volfrac)");
    if (!(volume_tol > 0.0)) throw std::invalid_argument("optimizer: volume_tol must be > 0");
    if (objective_tol < 0.0) throw std::invalid_argument("optimizer: objective_tol must be >= 0");
    if (radius(h) < h * (1.0 - 1e-12)) throw std::invalid_argument("optimizer: filter radius must be >= h");
}

double compliance(std::span<const double> f, std::span<const double> u) {
    if (f.size() != u.size()) throw std::invalid_argument("compliance: length mismatch");
    return dot(f, u);
}

void sensitivities(const StiffnessOperator& op, std::span<const double> densities, std::span<const double> u,
                   const std::optional<GravitySpec>& gravity, std::span<double> dc) {
    const StructuredGrid& g = op.grid();
    const std::size_t nel = g.num_elements();
    if (densities.size() != nel || dc.size() != nel)
        throw std::invalid_argument("sensitivities: per-element vectors must match the element count");
    check_size(u, op.size(), "sensitivities displacement");
    const MaterialModel& m = op.model();
    std::array<double, 24> dfe{};
    if (gravity) dfe = element_gravity_load(1.0, gravity->acceleration, g.h(), gravity->unit_weight, gravity->axis);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t e = 0; e < std::ptrdiff_t(nel); ++e) {
        double v = -m.youngs * simp_scale_derivative_unchecked(densities[e], m) * op.element_energy(std::size_t(e), u);
        if (gravity) {
            const auto dofs = g.element_dofs(std::size_t(e));
            double s = 0.0;
            for (int a = 0; a < 24; ++a) s += u[dofs[a]] * dfe[a];
            v += 2.0 * s;
        }
        dc[e] = v;
    }
}

double active_mean(std::span<const double> rho, const RegionMask& regions) {
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t e = 0; e < rho.size(); ++e)
        if (regions.is_active(e)) {
            s += rho[e];
            ++n;
        }
    return n ? s / double(n) : 0.0;
}

void oc_candidate(std::span<const double> rho, std::span<const double> dc, std::span<const double> dv,
                  const RegionMask& regions, const OptConfig& cfg, double lambda, std::span<double> out) {
    const std::ptrdiff_t nel = std::ptrdiff_t(rho.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t e = 0; e < nel; ++e) {
        if (!regions.is_active(std::size_t(e))) {
            out[e] = rho[e];
            continue;
        }
        const double B = std::max(0.0, -dc[e]) / (lambda * dv[e]);
        double cand = rho[e] * (cfg.eta == 0.5 ? std::sqrt(B) : std::pow(B, cfg.eta));
        if (cfg.q != 1.0) cand = std::pow(cand, cfg.q);
        const double lo = std::max(cfg.rho_min, rho[e] - cfg.move);
        const double hi = std::min(1.0, rho[e] + cfg.move);
        out[e] = std::clamp(cand, lo, hi);
    }
}

double oc_update(std::span<const double> rho, std::span<const double> dc, std::span<const double> dv,
                 const RegionMask& regions, const OptConfig& cfg, std::span<double> out) {
    const std::size_t nel = rho.size();
    if (dc.size() != nel || dv.size() != nel || out.size() != nel || regions.size() != nel)
        throw std::invalid_argument("oc_update: vector lengths must equal the element count");
    double scale = 0.0;
    for (std::size_t e = 0; e < nel; ++e) {
        if (!(dv[e] > 0.0)) throw std::invalid_argument("oc_update: volume gradient must be positive");
        if (regions.is_active(e)) scale = std::max(scale, std::max(0.0, -dc[e]) / dv[e]);
    }
    if (scale == 0.0) scale = 1.0;

    // Search on log(lambda): the active mean decreases monotonically in lambda.
    double lo = std::log(scale) - 70.0, hi = std::log(scale) + 70.0;
    for (int it = 0; it < 200; ++it) {
        const double lambda = std::exp(0.5 * (lo + hi));
        oc_candidate(rho, dc, dv, regions, cfg, lambda, out);
        const double mean = active_mean(out, regions);
        if (std::abs(mean - cfg.volfrac) <= cfg.volume_tol) return lambda;
        if (mean > cfg.volfrac)
            lo = 0.5 * (lo + hi);
        else
            hi = 0.5 * (lo + hi);
    }
    throw InfeasibleVolume("oc_update: no multiplier reaches volume fraction " + std::to_string(cfg.volfrac) +
                           " within the move limits (last mean " + std::to_string(active_mean(out, regions)) + ")");
}

std::vector<double> update_gravity_load(const StructuredGrid& grid, std::span<const double> rho,
                                        const GravitySpec& gravity, std::span<const double> external,
                                        std::span<const std::uint8_t> fixed) {
    if (rho.size() != grid.num_elements()) throw std::invalid_argument("gravity load: density count mismatch");
    if (external.size() != grid.num_dofs() || fixed.size() != grid.num_dofs())
        throw std::invalid_argument("gravity load: DOF vector length mismatch");
    std::vector<double> f(external.begin(), external.end());
    const double per_node = -gravity.unit_weight * gravity.acceleration * grid.h() * grid.h() * grid.h() / 8.0;
    const int axis = int(gravity.axis);
    const int nx = grid.nelx(), ny = grid.nely(), nz = grid.nelz();

#pragma omp parallel for schedule(static)
    for (int k = 0; k <= nz; ++k)
        for (int j = 0; j <= ny; ++j)
            for (int i = 0; i <= nx; ++i) {
                double s = 0.0;
                for (int c = 0; c < 8; ++c) {
                    const int ei = i - (c & 1), ej = j - ((c >> 1) & 1), ek = k - ((c >> 2) & 1);
                    if (ei < 0 || ej < 0 || ek < 0 || ei >= nx || ej >= ny || ek >= nz) continue;
                    s += rho[grid.element_index(ei, ej, ek)];
                }
                f[3 * grid.node_index(i, j, k) + axis] += per_node * s;
            }
    for (std::size_t d = 0; d < f.size(); ++d)
        if (fixed[d]) f[d] = 0.0;
    return f;
}

Optimizer::Optimizer(Problem problem, OptConfig opt, SolverConfig solver, MgOptions mg)
    : problem_(std::move(problem)), opt_(opt), solver_(solver), mg_(mg),
      ke_(unit_stiffness(problem_.nu, problem_.grid.h())),
      filter_(problem_.grid, opt_.radius(problem_.grid.h())) {
    problem_.validate();
    opt_.validate(problem_.grid.h());
    solver_.validate();
    mg_.validate();
    fixed_ = problem_.bc.fixed_mask(problem_.grid);
    external_ = problem_.bc.load_vector(problem_.grid);
    for (std::size_t d = 0; d < external_.size(); ++d)
        if (fixed_[d]) external_[d] = 0.0;
}

OptState Optimizer::initial_state() const {
    OptState s;
    const std::size_t nel = problem_.grid.num_elements();
    s.densities.resize(nel);
    for (std::size_t e = 0; e < nel; ++e) {
        switch (problem_.regions.cls[e]) {
            case RegionClass::active: s.densities[e] = opt_.volfrac; break;
            case RegionClass::passive_solid: s.densities[e] = 1.0; break;
            case RegionClass::passive_void: s.densities[e] = opt_.rho_min; break;
        }
    }
    s.u.assign(problem_.grid.num_dofs(), 0.0);
    return s;
}

IterationRecord Optimizer::step(OptState& state) {
    const auto t0 = std::chrono::steady_clock::now();
    const StructuredGrid& g = problem_.grid;
    const std::size_t nel = g.num_elements();
    if (state.densities.size() != nel || state.u.size() != g.num_dofs())
        throw std::invalid_argument("optimizer: state does not match the problem grid");
    const int iter = state.iteration + 1;

    const std::vector<double> f =
        problem_.bc.gravity ? update_gravity_load(g, state.densities, *problem_.bc.gravity, external_, fixed_)
                            : external_;

    op_.emplace(g, std::span<const double>(state.densities), problem_.material, std::span<const std::uint8_t>(fixed_),
                ke_);
    SolveReport rep;
    try {
        if (solver_.preconditioner == PreconditionerKind::multigrid) {
            if (!hier_)
                hier_ = std::make_unique<MgHierarchy>(*op_, state.densities, mg_);
            else
                hier_->refresh(*op_, state.densities);
        }
        rep = solve_state(*op_, hier_.get(), f, state.u, solver_);
    } catch (const NumericalBreakdown& e) {
        throw NumericalBreakdown(e.iteration(), "design iteration " + std::to_string(iter) + ": " + e.what());
    }

    IterationRecord rec;
    rec.iter = iter;
    rec.compliance = compliance(f, state.u);
    rec.cg_iters = rep.iterations;
    rec.cg_residual = rep.relative_residual;
    rec.cg_converged = rep.converged;
    rec.aux_scalars = rep.aux_scalars;

    std::vector<double> dc(nel), dcf(nel), next(nel);
    const std::vector<double> dv(nel, 1.0);
    sensitivities(*op_, state.densities, state.u, problem_.bc.gravity, dc);
    filter_sensitivities(dc, state.densities, filter_, opt_.gamma, dcf, &problem_.regions);
    rec.lambda = oc_update(state.densities, dcf, dv, problem_.regions, opt_, next);

    double ch = 0.0;
    for (std::size_t e = 0; e < nel; ++e) ch = std::max(ch, std::abs(next[e] - state.densities[e]));
    rec.volume = active_mean(next, problem_.regions);
    if (std::abs(rec.volume - opt_.volfrac) > opt_.volume_tol)
        throw InfeasibleVolume("design iteration " + std::to_string(iter) + ": active mean " +
                               std::to_string(rec.volume) + " violates the volume target");
    rec.change = ch;

    state.densities.swap(next);
    state.iteration = iter;
    state.compliance_history.push_back(rec.compliance);
    state.change_history.push_back(ch);
    rec.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

OptResult Optimizer::run(OptState state, const Callback& on_iteration) {
    OptResult res;
    while (state.iteration < opt_.max_iterations) {
        const IterationRecord rec = step(state);
        res.history.push_back(rec);
        if (on_iteration) on_iteration(rec, state);
        bool done = rec.change <= opt_.ch_tol;
        const auto& ch = state.compliance_history;
        if (!done && opt_.objective_tol > 0.0 && ch.size() >= 2) {
            const double c1 = ch[ch.size() - 1], c0 = ch[ch.size() - 2];
            done = std::abs(c1 - c0) <= opt_.objective_tol * std::abs(c1);
        }
        if (done) {
            res.converged = true;
            break;
        }
    }
    res.state = std::move(state);
    return res;
}

}  // namespace mgtopo
