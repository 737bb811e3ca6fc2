#include "mgtopo/multigrid.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>

namespace mgtopo {

namespace {

using Mat24 = Eigen::Matrix<double, 24, 24, Eigen::RowMajor>;

// Prolongation weights from the 8 coarse corners to the 8 fine corners of
// child c, expanded to 24x24 (identity per displacement component).
std::array<Mat24, 8> child_weights() {
    std::array<Mat24, 8> W;
    for (int c = 0; c < 8; ++c) {
        W[c].setZero();
        for (int a = 0; a < 8; ++a)
            for (int b = 0; b < 8; ++b) {
                double w = 1.0;
                for (int d = 0; d < 3; ++d) {
                    const int f = ((c >> d) & 1) + ((a >> d) & 1);  // fine offset 0,1,2
                    const int cb = (b >> d) & 1;
                    w *= f == 1 ? 0.5 : (f == 2 * cb ? 1.0 : 0.0);
                }
                if (w != 0.0)
                    for (int i = 0; i < 3; ++i) W[c](3 * a + i, 3 * b + i) = w;
            }
    }
    return W;
}

void mask_element(Mat24& K, const std::array<std::size_t, 24>& dofs, std::span<const std::uint8_t> fixed) {
    for (int a = 0; a < 24; ++a)
        if (fixed[dofs[a]]) {
            K.row(a).setZero();
            K.col(a).setZero();
        }
}

bool touches_fixed(const std::array<std::size_t, 24>& dofs, std::span<const std::uint8_t> fixed) {
    return std::any_of(dofs.begin(), dofs.end(), [&](std::size_t d) { return fixed[d] != 0; });
}

}  // namespace

const char* to_string(CoarseScheme s) noexcept { return s == CoarseScheme::galerkin ? "galerkin" : "homogenized"; }

CoarseScheme parse_coarse_scheme(const std::string& s) {
    if (s == "galerkin") return CoarseScheme::galerkin;
    if (s == "homogenized") return CoarseScheme::homogenized;
    throw std::invalid_argument("unknown coarse scheme '" + s + "' (expected galerkin or homogenized)");
}

void MgOptions::validate() const {
    if (max_levels < 1) throw std::invalid_argument("multigrid: max_levels must be >= 1");
    if (!(omega >= 0.0 && omega <= 1.0))
        throw std::invalid_argument("multigrid: omega must lie in (0,1], or be 0 for automatic damping");
    if (nu_pre < 0 || nu_post < 0) throw std::invalid_argument("multigrid: sweep counts must be >= 0");
}

double safe_jacobi_omega(const ElementStiffness& ke) {
    const Eigen::Map<const Mat24> K(ke.k.data());
    const Eigen::Matrix<double, 24, 1> s = K.diagonal().cwiseInverse().cwiseSqrt();
    const Eigen::Matrix<double, 24, 24> S = s.asDiagonal() * K * s.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 24, 24>> es(S, Eigen::EigenvaluesOnly);
    return std::min(0.6, 1.9 / es.eigenvalues().maxCoeff());
}

int feasible_levels(const StructuredGrid& grid, int max_levels) {
    for (int a = 0; a < 3; ++a)
        if (grid.nel(a) < 2) throw std::invalid_argument("multigrid: every finest dimension must be >= 2");
    int levels = 1;
    std::array<int, 3> n{grid.nelx(), grid.nely(), grid.nelz()};
    while (levels < max_levels) {
        bool ok = true;
        for (int a = 0; a < 3; ++a) ok = ok && n[a] % 2 == 0 && n[a] / 2 >= 2;
        if (!ok) break;
        for (auto& v : n) v /= 2;
        ++levels;
    }
    return levels;
}

struct MgHierarchy::Level {
    explicit Level(const StructuredGrid& g) : grid(g) {}

    const LinearOperator& op() const { return *active; }

    StructuredGrid grid;
    std::vector<std::uint8_t> fixed;
    const LinearOperator* active = nullptr;
    std::optional<StiffnessOperator> homog;
    Vector densities;
    std::optional<StencilOperator> stencil;
    // V-cycle workspace; inv_diag is zero on constrained DOFs
    Vector u, f, r, cx, inv_diag;
};

MgHierarchy::MgHierarchy(const StiffnessOperator& fine, std::span<const double> fine_densities, const MgOptions& opts)
    : opts_(opts) {
    opts_.validate();
    if (opts_.omega == 0.0) opts_.omega = safe_jacobi_omega(fine.stiffness());
    build_levels(fine.grid(), fine.fixed_mask());
    build_operators(fine, fine_densities);
    factorize();
}

MgHierarchy::MgHierarchy(MgHierarchy&&) noexcept = default;
MgHierarchy& MgHierarchy::operator=(MgHierarchy&&) noexcept = default;
MgHierarchy::~MgHierarchy() = default;

void MgHierarchy::build_levels(const StructuredGrid& fine_grid, std::span<const std::uint8_t> fine_fixed) {
    const int L = feasible_levels(fine_grid, opts_.max_levels);
    levels_.clear();
    levels_.push_back(std::make_unique<Level>(fine_grid));
    levels_[0]->fixed.assign(fine_fixed.begin(), fine_fixed.end());
    for (int l = 1; l < L; ++l) {
        const Level& prev = *levels_[l - 1];
        auto lvl = std::make_unique<Level>(prev.grid.coarsened());
        const StructuredGrid& g = lvl->grid;
        lvl->fixed.assign(g.num_dofs(), 0);
        for (int k = 0; k < g.nn(2); ++k)
            for (int j = 0; j < g.nn(1); ++j)
                for (int i = 0; i < g.nn(0); ++i) {
                    const std::size_t cn = g.node_index(i, j, k), fn = prev.grid.node_index(2 * i, 2 * j, 2 * k);
                    for (int d = 0; d < 3; ++d) lvl->fixed[3 * cn + d] = prev.fixed[3 * fn + d];
                }
        levels_.push_back(std::move(lvl));
    }
    const std::size_t coarse_dofs = levels_.back()->grid.num_dofs();
    if (coarse_dofs > opts_.coarse_guard)
        throw SetupError("multigrid: coarsest level has " + std::to_string(coarse_dofs) +
                         " DOFs, above the direct-solve limit of " + std::to_string(opts_.coarse_guard) +
                         "; use a resolution divisible by a higher power of two or allow more levels");
    for (auto& lvl : levels_) {
        const std::size_t n = lvl->grid.num_dofs();
        lvl->u.assign(n, 0.0);
        lvl->f.assign(n, 0.0);
        lvl->r.assign(n, 0.0);
        lvl->cx.assign(n, 0.0);
        lvl->inv_diag.assign(n, 0.0);
    }
}

void MgHierarchy::build_operators(const StiffnessOperator& fine, std::span<const double> fine_densities) {
    if (fine_densities.size() != fine.grid().num_elements())
        throw std::invalid_argument("multigrid: density count does not match the fine grid");
    levels_[0]->active = &fine;
    const int L = num_levels();

    if (opts_.scheme == CoarseScheme::homogenized) {
        std::span<const double> prev = fine_densities;
        for (int l = 1; l < L; ++l) {
            Level& lvl = *levels_[l];
            const StructuredGrid& pg = levels_[l - 1]->grid;
            lvl.densities.assign(lvl.grid.num_elements(), 0.0);
            for (int k = 0; k < lvl.grid.nelz(); ++k)
                for (int j = 0; j < lvl.grid.nely(); ++j)
                    for (int i = 0; i < lvl.grid.nelx(); ++i) {
                        double s = 0.0;
                        for (int c = 0; c < 8; ++c)
                            s += prev[pg.element_index(2 * i + (c & 1), 2 * j + ((c >> 1) & 1), 2 * k + ((c >> 2) & 1))];
                        lvl.densities[lvl.grid.element_index(i, j, k)] = s / 8.0;
                    }
            lvl.stencil.reset();
            lvl.homog.emplace(lvl.grid, std::span<const double>(lvl.densities), fine.model(),
                              std::span<const std::uint8_t>(lvl.fixed),
                              unit_stiffness(fine.stiffness().nu, lvl.grid.h()));
            lvl.active = &*lvl.homog;
            prev = lvl.densities;
        }
    } else {
        static const std::array<Mat24, 8> W = child_weights();
        // Element matrices of the current level, kept only until the next level is built.
        std::vector<Mat24, Eigen::aligned_allocator<Mat24>> current, next;

        for (int l = 1; l < L; ++l) {
            Level& lvl = *levels_[l];
            const Level& pl = *levels_[l - 1];
            const StructuredGrid& g = lvl.grid;
            const StructuredGrid& pg = pl.grid;
            const bool keep = l + 1 < L;
            lvl.homog.reset();
            lvl.densities.clear();
            lvl.stencil.emplace(g, std::span<const std::uint8_t>(lvl.fixed));
            if (keep) next.assign(g.num_elements(), Mat24::Zero());

            // Unconstrained children of the finest level share W^T K0 W up to their scale.
            std::array<Mat24, 8> base;
            if (l == 1) {
                const Eigen::Map<const Mat24> K0(fine.stiffness().k.data());
                for (int c = 0; c < 8; ++c) base[c] = W[c].transpose() * K0 * W[c];
            }
            const auto scales = fine.element_scales();

            Mat24 KE, Kc;
            for (int k = 0; k < g.nelz(); ++k)
                for (int j = 0; j < g.nely(); ++j)
                    for (int i = 0; i < g.nelx(); ++i) {
                        const std::size_t E = g.element_index(i, j, k);
                        KE.setZero();
                        for (int c = 0; c < 8; ++c) {
                            const std::size_t e =
                                pg.element_index(2 * i + (c & 1), 2 * j + ((c >> 1) & 1), 2 * k + ((c >> 2) & 1));
                            if (l == 1) {
                                const auto dofs = pg.element_dofs(e);
                                if (!touches_fixed(dofs, pl.fixed)) {
                                    KE.noalias() += scales[e] * base[c];
                                    continue;
                                }
                                Kc = scales[e] * Eigen::Map<const Mat24>(fine.stiffness().k.data());
                                mask_element(Kc, dofs, pl.fixed);
                                KE.noalias() += W[c].transpose() * Kc * W[c];
                            } else {
                                KE.noalias() += W[c].transpose() * current[e] * W[c];
                            }
                        }
                        mask_element(KE, g.element_dofs(E), lvl.fixed);
                        lvl.stencil->add_element(E, KE.data());
                        if (keep) next[E] = KE;
                    }
            lvl.stencil->finalize();
            lvl.active = &*lvl.stencil;
            current.swap(next);
            next.clear();
        }
    }

    for (int l = 0; l < L; ++l) {
        Level& lvl = *levels_[l];
        if (l == 0)
            fine.diagonal(lvl.inv_diag);
        else if (lvl.stencil)
            lvl.stencil->diagonal(lvl.inv_diag);
        else
            lvl.homog->diagonal(lvl.inv_diag);
        for (std::size_t d = 0; d < lvl.inv_diag.size(); ++d) {
            const double dd = lvl.inv_diag[d];
            if (lvl.fixed[d])
                lvl.inv_diag[d] = 0.0;
            else if (!(dd > 0.0))
                throw SetupError("multigrid: non-positive diagonal entry at level " + std::to_string(l));
            else
                lvl.inv_diag[d] = 1.0 / dd;
        }
    }
}

void MgHierarchy::factorize() {
    const Level& c = *levels_.back();
    Eigen::SparseMatrix<double> K;
    if (num_levels() == 1)
        K = static_cast<const StiffnessOperator&>(c.op()).assemble_sparse();
    else if (c.stencil)
        K = c.stencil->to_sparse();
    else
        K = c.homog->assemble_sparse();
    auto llt = std::make_unique<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>>(K);
    if (llt->info() != Eigen::Success)
        throw SetupError("multigrid: coarsest-level matrix is not positive definite");
    factor_ = std::move(llt);
}

void MgHierarchy::refresh(const StiffnessOperator& fine, std::span<const double> fine_densities) {
    if (!(fine.grid() == levels_[0]->grid))
        throw std::invalid_argument("multigrid refresh: grid differs from the hierarchy");
    const auto fixed = fine.fixed_mask();
    if (!std::equal(fixed.begin(), fixed.end(), levels_[0]->fixed.begin(), levels_[0]->fixed.end()))
        throw std::invalid_argument("multigrid refresh: constraints differ from the hierarchy");
    build_operators(fine, fine_densities);
    factorize();
}

void MgHierarchy::check_level(int l, int lo) const {
    if (l < lo || l >= num_levels())
        throw std::out_of_range("multigrid: level " + std::to_string(l) + " out of range [" + std::to_string(lo) +
                                ", " + std::to_string(num_levels() - 1) + "]");
}

const StructuredGrid& MgHierarchy::grid(int l) const {
    check_level(l, 0);
    return levels_[l]->grid;
}

std::span<const std::uint8_t> MgHierarchy::fixed_mask(int l) const {
    check_level(l, 0);
    return levels_[l]->fixed;
}

const LinearOperator& MgHierarchy::level_operator(int l) const {
    check_level(l, 0);
    return levels_[l]->op();
}

std::span<const double> MgHierarchy::coarse_densities(int l) const {
    check_level(l, 1);
    return levels_[l]->densities;
}

void MgHierarchy::prolongate(int l, std::span<const double> coarse, std::span<double> fine) const {
    if (l < 0 || l + 1 >= num_levels()) throw std::out_of_range("prolongate: no coarser level below " + std::to_string(l));
    const Level& fl = *levels_[l];
    const Level& cl = *levels_[l + 1];
    check_size(coarse, cl.grid.num_dofs(), "prolongate input");
    check_size(fine, fl.grid.num_dofs(), "prolongate output");
    const StructuredGrid& fg = fl.grid;
    const StructuredGrid& cg = cl.grid;
    const std::uint8_t* cfix = cl.fixed.data();

#pragma omp parallel for schedule(static)
    for (int fk = 0; fk < fg.nn(2); ++fk) {
        const int nz = fk % 2 ? 2 : 1;
        for (int fj = 0; fj < fg.nn(1); ++fj) {
            const int ny = fj % 2 ? 2 : 1;
            for (int fi = 0; fi < fg.nn(0); ++fi) {
                const int nx = fi % 2 ? 2 : 1;
                const double w = 1.0 / double(nx * ny * nz);
                double s[3] = {0.0, 0.0, 0.0};
                for (int c = 0; c < nz; ++c)
                    for (int b = 0; b < ny; ++b)
                        for (int a = 0; a < nx; ++a) {
                            const std::size_t cn = cg.node_index(fi / 2 + a, fj / 2 + b, fk / 2 + c);
                            for (int d = 0; d < 3; ++d)
                                if (!cfix[3 * cn + d]) s[d] += coarse[3 * cn + d];
                        }
                const std::size_t fn = fg.node_index(fi, fj, fk);
                for (int d = 0; d < 3; ++d) fine[3 * fn + d] = fl.fixed[3 * fn + d] ? 0.0 : w * s[d];
            }
        }
    }
}

void MgHierarchy::restrict(int l, std::span<const double> fine, std::span<double> coarse) const {
    if (l < 0 || l + 1 >= num_levels()) throw std::out_of_range("restrict: no coarser level below " + std::to_string(l));
    const Level& fl = *levels_[l];
    const Level& cl = *levels_[l + 1];
    check_size(fine, fl.grid.num_dofs(), "restrict input");
    check_size(coarse, cl.grid.num_dofs(), "restrict output");
    const StructuredGrid& fg = fl.grid;
    const StructuredGrid& cg = cl.grid;
    const std::uint8_t* ffix = fl.fixed.data();

#pragma omp parallel for schedule(static)
    for (int k = 0; k < cg.nn(2); ++k)
        for (int j = 0; j < cg.nn(1); ++j)
            for (int i = 0; i < cg.nn(0); ++i) {
                double s[3] = {0.0, 0.0, 0.0};
                for (int dz = -1; dz <= 1; ++dz) {
                    const int fk = 2 * k + dz;
                    if (fk < 0 || fk >= fg.nn(2)) continue;
                    const double wz = dz == 0 ? 1.0 : 0.5;
                    for (int dy = -1; dy <= 1; ++dy) {
                        const int fj = 2 * j + dy;
                        if (fj < 0 || fj >= fg.nn(1)) continue;
                        const double wy = dy == 0 ? wz : 0.5 * wz;
                        for (int dx = -1; dx <= 1; ++dx) {
                            const int fi = 2 * i + dx;
                            if (fi < 0 || fi >= fg.nn(0)) continue;
                            const double w = dx == 0 ? wy : 0.5 * wy;
                            const std::size_t fn = fg.node_index(fi, fj, fk);
                            for (int d = 0; d < 3; ++d)
                                if (!ffix[3 * fn + d]) s[d] += w * fine[3 * fn + d];
                        }
                    }
                }
                const std::size_t cn = cg.node_index(i, j, k);
                for (int d = 0; d < 3; ++d) coarse[3 * cn + d] = cl.fixed[3 * cn + d] ? 0.0 : s[d];
            }
}

void MgHierarchy::coarse_apply(int l, std::span<const double> u, std::span<double> v) const {
    check_level(l, 1);
    levels_[l]->op().apply(u, v);
}

void MgHierarchy::smooth(int l, int sweeps, bool zero_start) {
    Level& lvl = *levels_[l];
    const std::ptrdiff_t n = std::ptrdiff_t(lvl.u.size());
    const double omega = opts_.omega;
    double* u = lvl.u.data();
    const double* f = lvl.f.data();
    double* r = lvl.r.data();
    const double* dinv = lvl.inv_diag.data();
    for (int s = 0; s < sweeps; ++s) {
        if (s == 0 && zero_start) {
#pragma omp parallel for schedule(static)
            for (std::ptrdiff_t i = 0; i < n; ++i) u[i] = omega * dinv[i] * f[i];
            continue;
        }
        lvl.op().apply(lvl.u, lvl.r);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i) u[i] += omega * dinv[i] * (f[i] - r[i]);
    }
}

void MgHierarchy::jacobi_smooth(int l, std::span<double> u, std::span<const double> f, int sweeps) {
    check_level(l, 0);
    Level& lvl = *levels_[l];
    check_size(u, lvl.u.size(), "jacobi_smooth iterate");
    check_size(f, lvl.f.size(), "jacobi_smooth rhs");
    copy(u, lvl.u);
    copy(f, lvl.f);
    smooth(l, sweeps, false);
    copy(lvl.u, u);
}

void MgHierarchy::cycle(int l) {
    Level& lvl = *levels_[l];
    if (l + 1 == num_levels()) {
        coarse_solve(lvl.f, lvl.u);
        return;
    }
    fill(lvl.u, 0.0);
    smooth(l, opts_.nu_pre, true);
    lvl.op().apply(lvl.u, lvl.r);
    const std::ptrdiff_t n = std::ptrdiff_t(lvl.r.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) lvl.r[i] = lvl.f[i] - lvl.r[i];
    Level& next = *levels_[l + 1];
    restrict(l, lvl.r, next.f);
    cycle(l + 1);
    prolongate(l, next.u, lvl.cx);
    axpy(1.0, lvl.cx, lvl.u);
    smooth(l, opts_.nu_post, false);
}

void MgHierarchy::v_cycle(std::span<const double> f, std::span<double> u) {
    Level& top = *levels_[0];
    check_size(f, top.f.size(), "v_cycle rhs");
    check_size(u, top.u.size(), "v_cycle output");
    copy(f, top.f);
    cycle(0);
    copy(top.u, u);
}

void MgHierarchy::coarse_solve(std::span<const double> f, std::span<double> u) const {
    const Level& c = *levels_.back();
    check_size(f, c.grid.num_dofs(), "coarse_solve rhs");
    check_size(u, c.grid.num_dofs(), "coarse_solve output");
    Eigen::Map<const Eigen::VectorXd> fm(f.data(), Eigen::Index(f.size()));
    Eigen::Map<Eigen::VectorXd> um(u.data(), Eigen::Index(u.size()));
    um = factor_->solve(fm);
}

std::size_t MgHierarchy::vcycle_vector_scalars() const {
    std::size_t s = 0;
    for (const auto& l : levels_) s += 5 * l->grid.num_dofs();
    return s;
}

std::size_t MgHierarchy::coarse_operator_scalars() const {
    std::size_t s = 0;
    for (std::size_t l = 1; l < levels_.size(); ++l) {
        const Level& lvl = *levels_[l];
        if (lvl.stencil) s += lvl.stencil->storage_scalars();
        if (lvl.homog) s += lvl.densities.size() + lvl.homog->storage_scalars();
    }
    return s;
}

std::size_t MgHierarchy::factor_scalars() const {
    return factor_ ? std::size_t(factor_->matrixL().nestedExpression().nonZeros()) : 0;
}

}  // namespace mgtopo
