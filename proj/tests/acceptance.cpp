// Acceptance run: one PASS/FAIL line per criterion on stdout, progress on stderr.

#include "mgtopo/app/driver.hpp"
#include "oracles.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace mgtopo;
using namespace mgtopo::app;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kApplyTol = 1e-12;
constexpr double kApplyBudget = 10.0;
constexpr double kSolveTol = 1e-10;
constexpr double kSolveMatch = 1e-8;
constexpr double kSolveBudget = 30.0;
constexpr double kVcycleTol = 1e-12;
constexpr double kScalingTol = 1e-6;
constexpr double kMgGrowthMax = 2.0;
constexpr double kCgGrowthFactor = 1.5;
constexpr double kScalingBudget = 120.0;
constexpr double kGradientTol = 1e-4;
constexpr double kGradientBudget = 60.0;
constexpr double kVolumeTol = 1e-6;
constexpr int kCantileverMaxIters = 150;
constexpr double kStableSpread = 0.01;
constexpr double kCantileverBudget = 600.0;
constexpr int kLongMaxIters = 120;
constexpr double kCoarseRatioMax = 0.60;
constexpr double kComplianceAgreement = 0.01;
constexpr double kWorkingSetMax = 10.5;
constexpr double kResumeTol = 1e-12;
constexpr double kSymmetryTol = 1e-6;
constexpr double kBelowDeckMin = 0.70;
constexpr double kBridgeBudget = 600.0;

struct Verdict {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const fs::path& workdir() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "mgtopo_acceptance";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

// Every design iteration of every run made here is audited against the volume target.
struct VolumeAudit {
    double worst = 0.0;
    int iterations = 0;
    int runs = 0;
    void add(const RunOutcome& o) {
        ++runs;
        for (const auto& h : o.result.history) {
            worst = std::max(worst, std::abs(h.volume - o.run.volfrac));
            ++iterations;
        }
    }
} audit;

RunOutcome run(const std::string& settings, const std::string& label) {
    RunConfig cfg = parse_config_text(settings);
    cfg.out = workdir() / label;
    std::cerr << "  run " << label << " ..." << std::flush;
    const auto t0 = std::chrono::steady_clock::now();
    RunOutcome o = run_design(cfg);
    std::cerr << " " << o.result.state.iteration << " iterations, " << fmt("%.1f", seconds_since(t0)) << " s\n";
    audit.add(o);
    return o;
}

double final_compliance(const RunOutcome& o) {
    return o.result.history.empty() ? 0.0 : o.result.history.back().compliance;
}

// Relative spread of the compliance over the last n iterations.
double tail_spread(const RunOutcome& o, std::size_t n) {
    const auto& h = o.result.history;
    if (h.size() < n) return INFINITY;
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = h.size() - n; i < h.size(); ++i) {
        lo = std::min(lo, h[i].compliance);
        hi = std::max(hi, h[i].compliance);
    }
    return (hi - lo) / lo;
}

std::vector<std::uint8_t> random_fixed(std::size_t n, std::mt19937_64& rng) {
    std::bernoulli_distribution coin(0.2);
    std::vector<std::uint8_t> fixed(n);
    for (auto& f : fixed) f = coin(rng);
    return fixed;
}

Verdict oracle_equivalence() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(101);
    double worst = 0.0;
    int cases = 0;
    for (auto d : {std::array{2, 1, 1}, std::array{2, 2, 2}, std::array{4, 2, 2}, std::array{4, 4, 4}}) {
        const auto g = build_grid(d[0], d[1], d[2], 0.5);
        const auto ke = unit_stiffness(0.3, g.h());
        for (int trial = 0; trial < 5; ++trial) {
            const auto rho = oracle::random_vector(g.num_elements(), rng, 0.0, 1.0);
            const auto fixed = random_fixed(g.num_dofs(), rng);
            const StiffnessOperator op(g, rho, MaterialModel{}, fixed, ke);
            const Eigen::MatrixXd K = oracle::dense_stiffness(g, rho, MaterialModel{}, fixed);
            for (int v = 0; v < 3; ++v) {
                const auto u = oracle::random_vector(g.num_dofs(), rng);
                std::vector<double> Ku(u.size());
                op.apply(u, Ku);
                worst = std::max(worst, oracle::rel_err(oracle::view(Ku), K * oracle::view(u)));
            }
            ++cases;
        }
    }
    const double t = seconds_since(t0);
    return {worst <= kApplyTol && t < kApplyBudget,
            fmt("%d fields, max rel err %.2e (<= %.0e), %.2f s (< %.0f s)", cases, worst, kApplyTol, t, kApplyBudget)};
}

Verdict solver_correctness() {
    const auto t0 = std::chrono::steady_clock::now();
    const Problem p = instantiate_preset("cantilever", {16, 8, 8});
    const auto fixed = p.bc.fixed_mask(p.grid);
    std::mt19937_64 rng(202);
    const auto rho = oracle::random_vector(p.grid.num_elements(), rng, 0.05, 1.0);
    const auto f = p.bc.load_vector(p.grid);
    const StiffnessOperator op(p.grid, rho, p.material, fixed, unit_stiffness(p.nu, p.grid.h()));
    const Eigen::VectorXd ref = oracle::dense_stiffness(p.grid, rho, p.material, fixed).llt().solve(oracle::view(f));

    SolverConfig sc;
    sc.tolerance = kSolveTol;
    sc.max_iterations = 500;
    sc.warm_start = false;
    bool ok = true;
    std::string detail;
    for (auto scheme : {CoarseScheme::galerkin, CoarseScheme::homogenized}) {
        MgOptions mo;
        mo.scheme = scheme;
        MgHierarchy hier(op, rho, mo);
        std::vector<double> u(f.size(), 0.0);
        const SolveReport rep = mgcg_solve(op, hier, f, u, sc);
        const double err = oracle::rel_err(oracle::view(u), ref);
        ok = ok && rep.converged && err <= kSolveMatch;
        detail += fmt("%s %d its rel err %.2e%s; ", to_string(scheme), rep.iterations, err,
                      rep.converged ? "" : " NOT CONVERGED");
    }
    const double t = seconds_since(t0);
    return {ok && t < kSolveBudget, detail + fmt("bound %.0e, %.2f s (< %.0f s)", kSolveMatch, t, kSolveBudget)};
}

Verdict preconditioner_validity() {
    const auto g = build_grid(8, 8, 8, 0.125);
    BoundarySpec bc;
    for (int k = 0; k < g.nn(2); ++k)
        for (int j = 0; j < g.nn(1); ++j)
            for (int d = 0; d < 3; ++d) bc.fixed_dofs.push_back(3 * g.node_index(0, j, k) + d);
    const auto fixed = bc.fixed_mask(g);
    std::mt19937_64 rng(303);
    const auto rho = oracle::random_vector(g.num_elements(), rng, 0.01, 1.0);
    const StiffnessOperator op(g, rho, MaterialModel{}, fixed, unit_stiffness(0.3, g.h()));
    auto free_random = [&] {
        auto v = oracle::random_vector(g.num_dofs(), rng);
        for (std::size_t i = 0; i < v.size(); ++i)
            if (fixed[i]) v[i] = 0.0;
        return v;
    };
    double lin = 0.0, sym = 0.0, min_energy = INFINITY;
    for (auto scheme : {CoarseScheme::galerkin, CoarseScheme::homogenized}) {
        MgOptions mo;
        mo.scheme = scheme;
        MgHierarchy hier(op, rho, mo);
        auto V = [&](const std::vector<double>& r) {
            std::vector<double> z(r.size(), 0.0);
            hier.v_cycle(r, z);
            return z;
        };
        for (int trial = 0; trial < 5; ++trial) {
            const auto a = free_random(), b = free_random();
            const double alpha = 0.7, beta = -1.3;
            std::vector<double> comb(a.size());
            for (std::size_t i = 0; i < a.size(); ++i) comb[i] = alpha * a[i] + beta * b[i];
            const auto Va = V(a), Vb = V(b), Vc = V(comb);
            Eigen::VectorXd lhs = oracle::view(Vc), rhs = alpha * oracle::view(Va) + beta * oracle::view(Vb);
            lin = std::max(lin, oracle::rel_err(lhs, rhs));
            const double ab = oracle::view(Va).dot(oracle::view(b)), ba = oracle::view(a).dot(oracle::view(Vb));
            sym = std::max(sym, std::abs(ab - ba) / std::max(std::abs(ab), std::abs(ba)));
            const double ea = oracle::view(Va).dot(oracle::view(a));
            min_energy = std::min(min_energy, ea / oracle::view(a).squaredNorm());
        }
    }
    return {lin <= kVcycleTol && sym <= kVcycleTol && min_energy > 0.0,
            fmt("linearity %.2e, symmetry %.2e (<= %.0e), min <Vr,r>/<r,r> %.3e (> 0)", lin, sym, kVcycleTol,
                min_energy)};
}

struct CubeIterations {
    int mgcg = 0;
    int cg = 0;
};

CubeIterations cube_iterations(int n) {
    const auto g = build_grid(n, n, n, 1.0 / n);
    BoundarySpec bc;
    for (int k = 0; k < g.nn(2); ++k)
        for (int j = 0; j < g.nn(1); ++j)
            for (int d = 0; d < 3; ++d) bc.fixed_dofs.push_back(3 * g.node_index(0, j, k) + d);
    add_surface_load(bc, g, Axis::x, n, {0, 0}, {n, n}, Axis::z, -1.0);
    const auto fixed = bc.fixed_mask(g);
    const std::vector<double> rho(g.num_elements(), 1.0);
    const auto f = bc.load_vector(g);
    const StiffnessOperator op(g, rho, MaterialModel{}, fixed, unit_stiffness(0.3, g.h()));

    SolverConfig sc;
    sc.tolerance = kScalingTol;
    sc.warm_start = false;
    sc.max_iterations = 100000;
    CubeIterations out;
    MgHierarchy hier(op, rho, MgOptions{});
    std::vector<double> u(f.size(), 0.0);
    SolveReport rep = solve_state(op, &hier, f, u, sc);
    out.mgcg = rep.converged ? rep.iterations : -1;
    sc.preconditioner = PreconditionerKind::none;
    std::fill(u.begin(), u.end(), 0.0);
    rep = solve_state(op, nullptr, f, u, sc);
    out.cg = rep.converged ? rep.iterations : -1;
    return out;
}

Verdict multigrid_efficiency() {
    const auto t0 = std::chrono::steady_clock::now();
    const CubeIterations a = cube_iterations(16), b = cube_iterations(32);
    const double t = seconds_since(t0);
    if (a.mgcg < 0 || b.mgcg < 0 || a.cg < 0 || b.cg < 0) return {false, "a solve did not converge"};
    const double mg_growth = double(b.mgcg) / a.mgcg, cg_growth = double(b.cg) / a.cg;
    return {mg_growth <= kMgGrowthMax && cg_growth >= kCgGrowthFactor * mg_growth && t < kScalingBudget,
            fmt("MGCG %d -> %d (x%.2f <= %.1f), CG %d -> %d (x%.2f >= %.1f x MGCG growth), %.1f s (< %.0f s)", a.mgcg,
                b.mgcg, mg_growth, kMgGrowthMax, a.cg, b.cg, cg_growth, kCgGrowthFactor, t, kScalingBudget)};
}

Verdict gradient_check() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    std::mt19937_64 rng(505);
    for (int n : {2, 3}) {
        const auto g = build_grid(n, n, n, 1.0);
        BoundarySpec bc;
        for (int k = 0; k < g.nn(2); ++k)
            for (int j = 0; j < g.nn(1); ++j)
                for (int d = 0; d < 3; ++d) bc.fixed_dofs.push_back(3 * g.node_index(0, j, k) + d);
        add_surface_load(bc, g, Axis::x, n, {0, 0}, {n, n}, Axis::z, -0.5);
        bc.gravity = GravitySpec{Axis::z, 9.81, 0.05};
        const auto fixed = bc.fixed_mask(g);
        const auto external = bc.load_vector(g);
        auto solve = [&](const std::vector<double>& rho, std::vector<double>& f) {
            f = update_gravity_load(g, rho, *bc.gravity, external, fixed);
            const Eigen::VectorXd u =
                oracle::dense_stiffness(g, rho, MaterialModel{}, fixed).llt().solve(oracle::view(f));
            return std::vector<double>(u.data(), u.data() + u.size());
        };
        const auto rho = oracle::random_vector(g.num_elements(), rng, 0.3, 0.9);
        std::vector<double> f;
        const auto u = solve(rho, f);
        const StiffnessOperator op(g, rho, MaterialModel{}, fixed, unit_stiffness(0.3, g.h()));
        std::vector<double> dc(rho.size());
        sensitivities(op, rho, u, bc.gravity, dc);
        const double delta = 1e-5;
        for (std::size_t e = 0; e < rho.size(); ++e) {
            auto up = rho, dn = rho;
            up[e] += delta;
            dn[e] -= delta;
            std::vector<double> fu, fd;
            const auto uu = solve(up, fu), ud = solve(dn, fd);
            const double fdiff = (compliance(fu, uu) - compliance(fd, ud)) / (2 * delta);
            worst = std::max(worst, std::abs(dc[e] - fdiff) / std::abs(fdiff));
        }
    }
    const double t = seconds_since(t0);
    return {worst <= kGradientTol && t < kGradientBudget,
            fmt("2x2x2 and 3x3x3 with self-weight, max rel err %.2e (<= %.0e), %.2f s (< %.0f s)", worst, kGradientTol, t,
                kGradientBudget)};
}

// Runs with passive regions, self-weight and a tighter void floor; later runs add to the audit.
void volume_runs() {
    run("preset=footbridge\nresolution=144x8x32\nmax-iters=25\n", "volume_footbridge");
    run("preset=highrise\nresolution=16x16x64\nmax-iters=25\nload-profile=parabolic\n", "volume_highrise");
    run("preset=arch-bridge-40\nresolution=64x16x32\nmax-iters=25\nvolfrac=0.2\n", "volume_arch40");
}

Verdict volume_audit() {
    return {audit.worst <= kVolumeTol && audit.iterations > 0,
            fmt("%d design iterations over %d runs, max |mean(rho_active) - volfrac| %.2e (<= %.0e)", audit.iterations,
                audit.runs, audit.worst, kVolumeTol)};
}

Verdict cantilever_convergence(const RunOutcome& o, double t) {
    const double spread = tail_spread(o, 5);
    const int its = o.result.state.iteration;
    return {o.result.converged && its <= kCantileverMaxIters && spread <= kStableSpread && t < kCantileverBudget,
            fmt("32x16x16: %s in %d iterations (<= %d), last-5 compliance spread %.2e (<= %.2f), %.1f s (< %.0f s)",
                o.result.converged ? "converged" : "NOT converged", its, kCantileverMaxIters, spread, kStableSpread, t,
                kCantileverBudget)};
}

Verdict long_convergence(const RunOutcome& o) {
    const int its = o.result.state.iteration;
    return {o.result.converged && its <= kLongMaxIters,
            fmt("64x32x32: %s in %d iterations (<= %d), final compliance %.6g",
                o.result.converged ? "converged" : "NOT converged", its, kLongMaxIters, final_compliance(o))};
}

Verdict homogenization_memory(const RunOutcome& gal, const RunOutcome& hom) {
    const double coarse = double(hom.memory.coarse_level()) / double(gal.memory.coarse_level());
    const double total = double(hom.memory.total()) / double(gal.memory.total());
    const double cg = final_compliance(gal), ch = final_compliance(hom);
    const double agree = std::abs(cg - ch) / cg;
    return {coarse <= kCoarseRatioMax && agree <= kComplianceAgreement,
            fmt("coarse-level storage %zu vs %zu scalars (ratio %.4f <= %.2f), total auxiliary ratio %.3f, "
                "compliance %.6g vs %.6g (diff %.2e <= %.2f)",
                hom.memory.coarse_level(), gal.memory.coarse_level(), coarse, kCoarseRatioMax, total, ch, cg, agree,
                kComplianceAgreement)};
}

Verdict working_set(const RunOutcome& hom) {
    std::size_t peak = 0;
    for (const auto& h : hom.result.history) peak = std::max(peak, h.aux_scalars);
    const double ratio = double(peak) / double(hom.memory.fine_dofs);
    return {peak > 0 && ratio <= kWorkingSetMax,
            fmt("homogenized 64x32x32: peak %zu scalars = %.3f n (<= %.1f n)", peak, ratio, kWorkingSetMax)};
}

Verdict determinism() {
    const std::string cfg = "preset=cantilever\nresolution=16x8x8\nmax-iters=15\ncheckpoint-every=5\n";
    const RunOutcome a = run(cfg, "determinism_a");
    run(cfg, "determinism_b");
    const bool identical = slurp(workdir() / "determinism_a" / "checkpoint_final.tpf") ==
                           slurp(workdir() / "determinism_b" / "checkpoint_final.tpf");
    const RunOutcome c = run(cfg + "resume=" + (workdir() / "determinism_a" / "checkpoint_0005.tpf").string() + "\n",
                             "determinism_resumed");
    double diff = 0.0;
    for (std::size_t e = 0; e < a.result.state.densities.size(); ++e)
        diff = std::max(diff, std::abs(a.result.state.densities[e] - c.result.state.densities[e]));
    const bool same_end = c.result.state.iteration == a.result.state.iteration;
    return {identical && same_end && diff <= kResumeTol,
            fmt("repeat checkpoints %s, resumed at 5 to %d vs %d, max |drho| %.2e (<= %.0e)",
                identical ? "bit-identical" : "DIFFER", c.result.state.iteration, a.result.state.iteration, diff,
                kResumeTol)};
}

Verdict mirror_symmetry(const RunOutcome& o) {
    const auto& g = o.run.problem.grid;
    const auto& rho = o.result.state.densities;
    double worst = 0.0;
    for (int k = 0; k < g.nelz(); ++k)
        for (int j = 0; j < g.nely(); ++j)
            for (int i = 0; i < g.nelx(); ++i)
                worst = std::max(worst, std::abs(rho[g.element_index(i, j, k)] -
                                                 rho[g.element_index(i, g.nely() - 1 - j, k)]));
    return {worst <= kSymmetryTol,
            fmt("32x16x16 cantilever, max |rho(y) - rho(W - y)| %.2e (<= %.0e)", worst, kSymmetryTol)};
}

Verdict bridge_sanity() {
    const auto t0 = std::chrono::steady_clock::now();
    const RunOutcome o = run("preset=arch-bridge-140\nresolution=112x8x16\nvolfrac=0.14\n", "bridge");
    const double t = seconds_since(t0);
    const auto& p = o.run.problem;
    const auto& g = p.grid;
    const auto& rho = o.result.state.densities;
    int deck_bottom = g.nelz();
    for (std::size_t e = 0; e < rho.size(); ++e)
        if (p.regions.cls[e] == RegionClass::passive_solid) deck_bottom = std::min(deck_bottom, g.element_coords(e)[2]);
    double below = 0.0, all = 0.0, lower_half = 0.0;
    for (std::size_t e = 0; e < rho.size(); ++e) {
        if (!p.regions.is_active(e)) continue;
        const int k = g.element_coords(e)[2];
        all += rho[e];
        if (k < deck_bottom) below += rho[e];
        if (2 * k + 1 < g.nelz()) lower_half += rho[e];
    }
    const double frac = below / all;
    return {o.result.converged && frac >= kBelowDeckMin && t < kBridgeBudget,
            fmt("%s in %d iterations, %.1f%% of design material below the deck (>= %.0f%%), %.1f%% in the lower half, "
                "%.1f s (< %.0f s)",
                o.result.converged ? "converged" : "NOT converged", o.result.state.iteration, 100 * frac,
                100 * kBelowDeckMin, 100 * lower_half / all, t, kBridgeBudget)};
}

Verdict guarded(const std::function<Verdict()>& f) {
    try {
        return f();
    } catch (const std::exception& e) {
        return {false, std::string("exception: ") + e.what()};
    }
}

}  // namespace

int main() {
    std::vector<Verdict> v(13);
    auto step = [&](int id, const std::function<Verdict()>& f) {
        std::cerr << "criterion " << id << "\n";
        v[id] = guarded(f);
    };
    step(1, oracle_equivalence);
    step(2, solver_correctness);
    step(3, preconditioner_validity);
    step(4, multigrid_efficiency);
    step(5, gradient_check);

    std::optional<RunOutcome> cant, gal, hom;
    double cant_seconds = 0.0;
    step(7, [&] {
        const auto t0 = std::chrono::steady_clock::now();
        cant = run("preset=cantilever\nresolution=32x16x16\nvolfrac=0.12\n", "cantilever_32");
        return cantilever_convergence(*cant, seconds_since(t0));
    });
    step(8, [&] {
        gal = run("preset=cantilever\nresolution=64x32x32\nscheme=galerkin\n", "cantilever_64_galerkin");
        hom = run("preset=cantilever\nresolution=64x32x32\nscheme=homogenized\n", "cantilever_64_homogenized");
        return homogenization_memory(*gal, *hom);
    });
    if (gal) {
        const bool enforce = std::getenv("MGTOPO_LONG") && std::string(std::getenv("MGTOPO_LONG")) == "1";
        const Verdict big = long_convergence(*gal);
        v[7].pass = v[7].pass && (big.pass || !enforce);
        v[7].detail += "; " + big.detail + (enforce ? "" : " [long check reported only, enforced with MGTOPO_LONG=1]");
    }
    step(9, [&] {
        if (!hom) throw std::runtime_error("homogenized 64x32x32 run unavailable");
        return working_set(*hom);
    });
    step(10, determinism);
    step(11, [&] {
        if (!cant) throw std::runtime_error("32x16x16 cantilever run unavailable");
        return mirror_symmetry(*cant);
    });
    step(12, bridge_sanity);
    step(6, [] {
        volume_runs();
        return volume_audit();
    });

    int failed = 0;
    for (int id = 1; id <= 12; ++id) {
        std::cout << "criterion " << id << ": " << (v[id].pass ? "PASS" : "FAIL") << "  " << v[id].detail << "\n";
        failed += !v[id].pass;
    }
    std::cout << 12 - failed << "/12 criteria passed\n";
    return failed == 0 ? 0 : 1;
}
