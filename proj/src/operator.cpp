#include "mgtopo/operator.hpp"

#include <stdexcept>
#include <string>

namespace mgtopo {

StiffnessOperator::StiffnessOperator(const StructuredGrid& grid, std::span<const double> densities,
                                     const MaterialModel& model, std::span<const std::uint8_t> fixed_mask,
                                     const ElementStiffness& ke)
    : grid_(grid), model_(model), ke_(ke) {
    model_.validate();
    if (densities.size() != grid.num_elements())
        throw std::invalid_argument("operator: density count " + std::to_string(densities.size()) +
                                    " does not match element count " + std::to_string(grid.num_elements()));
    if (fixed_mask.size() != grid.num_dofs()) throw std::invalid_argument("operator: fixed mask size mismatch");

    scales_.resize(densities.size());
    for (std::size_t e = 0; e < densities.size(); ++e) {
        const double rho = densities[e];
        if (!(rho >= 0.0 && rho <= 1.0))
            throw std::invalid_argument("operator: density of element " + std::to_string(e) + " outside [0,1]");
        scales_[e] = model_.youngs * simp_scale_unchecked(rho, model_);
    }
    fixed_.assign(fixed_mask.begin(), fixed_mask.end());
    for (std::size_t d = 0; d < fixed_.size(); ++d)
        if (fixed_[d]) fixed_list_.push_back(d);

    const std::ptrdiff_t sx = 1, sy = grid.nn(0), sz = std::ptrdiff_t(grid.nn(0)) * grid.nn(1);
    for (int c = 0; c < 8; ++c)
        for (int c2 = 0; c2 < 8; ++c2)
            corner_offset_[c][c2] = ((c2 & 1) - (c & 1)) * sx + (((c2 >> 1) & 1) - ((c >> 1) & 1)) * sy +
                                    (((c2 >> 2) & 1) - ((c >> 2) & 1)) * sz;
}

void StiffnessOperator::gather(std::span<const double> u, std::span<double> v) const {
    const int nelx = grid_.nelx(), nely = grid_.nely(), nelz = grid_.nelz();
    const int nnx = nelx + 1, nny = nely + 1, nnz = nelz + 1;
    const double* K = ke_.k.data();
    const double* scale = scales_.data();
    const double* up = u.data();

#pragma omp parallel for schedule(static)
    for (int k = 0; k < nnz; ++k) {
        for (int j = 0; j < nny; ++j) {
            for (int i = 0; i < nnx; ++i) {
                const std::ptrdiff_t node = i + std::ptrdiff_t(nnx) * (j + std::ptrdiff_t(nny) * k);
                double v0 = 0.0, v1 = 0.0, v2 = 0.0;
                for (int c = 0; c < 8; ++c) {
                    const int ei = i - (c & 1), ej = j - ((c >> 1) & 1), ek = k - ((c >> 2) & 1);
                    if (ei < 0 || ej < 0 || ek < 0 || ei >= nelx || ej >= nely || ek >= nelz) continue;
                    const double s = scale[ei + std::ptrdiff_t(nelx) * (ej + std::ptrdiff_t(nely) * ek)];
                    const double* r0 = K + std::ptrdiff_t(3 * c) * 24;
                    const double* r1 = r0 + 24;
                    const double* r2 = r1 + 24;
                    double a0 = 0.0, a1 = 0.0, a2 = 0.0;
                    for (int c2 = 0; c2 < 8; ++c2) {
                        const double* un = up + 3 * (node + corner_offset_[c][c2]);
                        const int col = 3 * c2;
                        a0 += r0[col] * un[0] + r0[col + 1] * un[1] + r0[col + 2] * un[2];
                        a1 += r1[col] * un[0] + r1[col + 1] * un[1] + r1[col + 2] * un[2];
                        a2 += r2[col] * un[0] + r2[col + 1] * un[1] + r2[col + 2] * un[2];
                    }
                    v0 += s * a0;
                    v1 += s * a1;
                    v2 += s * a2;
                }
                v[3 * node] = v0;
                v[3 * node + 1] = v1;
                v[3 * node + 2] = v2;
            }
        }
    }
}

void StiffnessOperator::apply(std::span<const double> u, std::span<double> v) const {
    check_size(u, size(), "operator apply input");
    check_size(v, size(), "operator apply output");
    bool dirty = false;
    for (auto d : fixed_list_)
        if (u[d] != 0.0) {
            dirty = true;
            break;
        }
    if (dirty) {
        Vector masked(u.begin(), u.end());
        for (auto d : fixed_list_) masked[d] = 0.0;
        gather(masked, v);
    } else {
        gather(u, v);
    }
    for (auto d : fixed_list_) v[d] = u[d];
}

void StiffnessOperator::diagonal(std::span<double> d) const {
    check_size(d, size(), "operator diagonal");
    fill(d, 0.0);
    const std::size_t nel = grid_.num_elements();
    for (std::size_t e = 0; e < nel; ++e) {
        const auto nodes = grid_.element_nodes(e);
        for (int c = 0; c < 8; ++c)
            for (int a = 0; a < 3; ++a) d[3 * nodes[c] + a] += scales_[e] * ke_(3 * c + a, 3 * c + a);
    }
    for (auto f : fixed_list_) d[f] = 1.0;
}

Vector StiffnessOperator::diagonal() const {
    Vector d(size());
    diagonal(d);
    return d;
}

void StiffnessOperator::residual(std::span<const double> u, std::span<const double> f, std::span<double> r) const {
    check_size(f, size(), "operator residual rhs");
    apply(u, r);
    const std::ptrdiff_t n = std::ptrdiff_t(size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) r[i] = f[i] - r[i];
    for (auto d : fixed_list_) r[d] = 0.0;
}

Eigen::MatrixXd StiffnessOperator::assemble_dense(std::size_t guard) const {
    const std::size_t n = size();
    if (n > guard)
        throw std::invalid_argument("assemble_dense: " + std::to_string(n) + " DOFs exceeds the guard of " +
                                    std::to_string(guard));
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(n));
    for (std::size_t e = 0; e < grid_.num_elements(); ++e) {
        const auto dofs = grid_.element_dofs(e);
        for (int a = 0; a < 24; ++a) {
            if (fixed_[dofs[a]]) continue;
            for (int b = 0; b < 24; ++b) {
                if (fixed_[dofs[b]]) continue;
                K(Eigen::Index(dofs[a]), Eigen::Index(dofs[b])) += scales_[e] * ke_(a, b);
            }
        }
    }
    for (auto d : fixed_list_) K(Eigen::Index(d), Eigen::Index(d)) = 1.0;
    return K;
}

Eigen::SparseMatrix<double> StiffnessOperator::assemble_sparse() const {
    const std::size_t n = size();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(grid_.num_elements() * 576 + fixed_list_.size());
    for (std::size_t e = 0; e < grid_.num_elements(); ++e) {
        const auto dofs = grid_.element_dofs(e);
        for (int a = 0; a < 24; ++a) {
            if (fixed_[dofs[a]]) continue;
            for (int b = 0; b < 24; ++b) {
                if (fixed_[dofs[b]]) continue;
                trip.emplace_back(int(dofs[a]), int(dofs[b]), scales_[e] * ke_(a, b));
            }
        }
    }
    for (auto d : fixed_list_) trip.emplace_back(int(d), int(d), 1.0);
    Eigen::SparseMatrix<double> K{Eigen::Index(n), Eigen::Index(n)};
    K.setFromTriplets(trip.begin(), trip.end());
    return K;
}

double StiffnessOperator::element_energy(std::size_t e, std::span<const double> u) const {
    const auto dofs = grid_.element_dofs(e);
    double ue[24];
    for (int a = 0; a < 24; ++a) ue[a] = u[dofs[a]];
    double energy = 0.0;
    for (int a = 0; a < 24; ++a) {
        double row = 0.0;
        for (int b = 0; b < 24; ++b) row += ke_(a, b) * ue[b];
        energy += ue[a] * row;
    }
    return energy;
}

}  // namespace mgtopo
