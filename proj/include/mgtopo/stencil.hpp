/// @file stencil.hpp
/// @brief Assembled operator stored as one 3x3 block per node pair in the
/// 27-node neighborhood. Used for Galerkin coarse levels.
#pragma once

#include "mgtopo/grid.hpp"
#include "mgtopo/linalg.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <span>
#include <vector>

namespace mgtopo {

class StencilOperator final : public LinearOperator {
public:
    static constexpr int kNeighbors = 27;
    static constexpr int kBlock = 9;

    StencilOperator(const StructuredGrid& grid, std::span<const std::uint8_t> fixed_mask);

    /// Adds a 24x24 element matrix (corner order of grid.hpp) for element e.
    /// Rows and columns of constrained DOFs must already be zero.
    void add_element(std::size_t e, const double* ke);
    /// Puts the identity on constrained DOFs. Call once after assembly.
    void finalize();

    std::size_t size() const override { return grid_.num_dofs(); }
    void apply(std::span<const double> u, std::span<double> v) const override;
    void diagonal(std::span<double> d) const;

    Eigen::SparseMatrix<double> to_sparse() const;
    Eigen::MatrixXd to_dense() const;

    const StructuredGrid& grid() const noexcept { return grid_; }
    std::size_t storage_scalars() const noexcept { return data_.size(); }

    /// Neighbor slot for offsets in {-1,0,1}^3.
    static int slot(int dx, int dy, int dz) noexcept { return (dx + 1) + 3 * (dy + 1) + 9 * (dz + 1); }

private:
    double* block(std::size_t node, int slot) noexcept {
        return data_.data() + (node * kNeighbors + std::size_t(slot)) * kBlock;
    }
    const double* block(std::size_t node, int slot) const noexcept {
        return data_.data() + (node * kNeighbors + std::size_t(slot)) * kBlock;
    }

    StructuredGrid grid_;
    std::vector<std::uint8_t> fixed_;
    std::vector<double> data_;
};

}  // namespace mgtopo
