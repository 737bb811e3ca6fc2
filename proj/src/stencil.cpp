#include "mgtopo/stencil.hpp"

#include <stdexcept>

namespace mgtopo {

StencilOperator::StencilOperator(const StructuredGrid& grid, std::span<const std::uint8_t> fixed_mask)
    : grid_(grid), fixed_(fixed_mask.begin(), fixed_mask.end()),
      data_(grid.num_nodes() * kNeighbors * kBlock, 0.0) {
    if (fixed_.size() != grid.num_dofs()) throw std::invalid_argument("stencil: fixed mask size mismatch");
}

void StencilOperator::add_element(std::size_t e, const double* ke) {
    const auto nodes = grid_.element_nodes(e);
    for (int a = 0; a < 8; ++a) {
        for (int b = 0; b < 8; ++b) {
            const int s = slot((b & 1) - (a & 1), ((b >> 1) & 1) - ((a >> 1) & 1), ((b >> 2) & 1) - ((a >> 2) & 1));
            double* blk = block(nodes[a], s);
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) blk[3 * r + c] += ke[(3 * a + r) * 24 + 3 * b + c];
        }
    }
}

void StencilOperator::finalize() {
    const int centre = slot(0, 0, 0);
    for (std::size_t d = 0; d < fixed_.size(); ++d)
        if (fixed_[d]) {
            double* blk = block(d / 3, centre);
            const int r = int(d % 3);
            blk[3 * r + r] = 1.0;
        }
}

void StencilOperator::apply(std::span<const double> u, std::span<double> v) const {
    check_size(u, size(), "stencil apply input");
    check_size(v, size(), "stencil apply output");
    const int nnx = grid_.nn(0), nny = grid_.nn(1), nnz = grid_.nn(2);
    const double* up = u.data();
#pragma omp parallel for schedule(static)
    for (int k = 0; k < nnz; ++k)
        for (int j = 0; j < nny; ++j)
            for (int i = 0; i < nnx; ++i) {
                const std::size_t node = std::size_t(i) + std::size_t(nnx) * (j + std::size_t(nny) * k);
                double v0 = 0.0, v1 = 0.0, v2 = 0.0;
                for (int dz = -1; dz <= 1; ++dz) {
                    if (k + dz < 0 || k + dz >= nnz) continue;
                    for (int dy = -1; dy <= 1; ++dy) {
                        if (j + dy < 0 || j + dy >= nny) continue;
                        for (int dx = -1; dx <= 1; ++dx) {
                            if (i + dx < 0 || i + dx >= nnx) continue;
                            const std::size_t nb = node + dx + std::ptrdiff_t(nnx) * (dy + std::ptrdiff_t(nny) * dz);
                            const double* blk = block(node, slot(dx, dy, dz));
                            const double* un = up + 3 * nb;
                            v0 += blk[0] * un[0] + blk[1] * un[1] + blk[2] * un[2];
                            v1 += blk[3] * un[0] + blk[4] * un[1] + blk[5] * un[2];
                            v2 += blk[6] * un[0] + blk[7] * un[1] + blk[8] * un[2];
                        }
                    }
                }
                v[3 * node] = v0;
                v[3 * node + 1] = v1;
                v[3 * node + 2] = v2;
            }
}

void StencilOperator::diagonal(std::span<double> d) const {
    check_size(d, size(), "stencil diagonal");
    const int centre = slot(0, 0, 0);
    for (std::size_t node = 0; node < grid_.num_nodes(); ++node) {
        const double* blk = block(node, centre);
        for (int r = 0; r < 3; ++r) d[3 * node + r] = blk[3 * r + r];
    }
}

Eigen::SparseMatrix<double> StencilOperator::to_sparse() const {
    const int nnx = grid_.nn(0), nny = grid_.nn(1), nnz = grid_.nn(2);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(grid_.num_nodes() * kNeighbors * kBlock);
    for (int k = 0; k < nnz; ++k)
        for (int j = 0; j < nny; ++j)
            for (int i = 0; i < nnx; ++i) {
                const std::size_t node = grid_.node_index(i, j, k);
                for (int dz = -1; dz <= 1; ++dz)
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dx = -1; dx <= 1; ++dx) {
                            if (i + dx < 0 || i + dx >= nnx || j + dy < 0 || j + dy >= nny || k + dz < 0 ||
                                k + dz >= nnz)
                                continue;
                            const std::size_t nb = grid_.node_index(i + dx, j + dy, k + dz);
                            const double* blk = block(node, slot(dx, dy, dz));
                            for (int r = 0; r < 3; ++r)
                                for (int c = 0; c < 3; ++c)
                                    if (blk[3 * r + c] != 0.0)
                                        trip.emplace_back(int(3 * node + r), int(3 * nb + c), blk[3 * r + c]);
                        }
            }
    Eigen::SparseMatrix<double> K{Eigen::Index(size()), Eigen::Index(size())};
    K.setFromTriplets(trip.begin(), trip.end());
    return K;
}

Eigen::MatrixXd StencilOperator::to_dense() const { return Eigen::MatrixXd(to_sparse()); }

}  // namespace mgtopo
