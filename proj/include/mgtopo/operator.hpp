/// @file operator.hpp
/// @brief Assembly-free stiffness operator K(rho) on a structured grid.
///
/// Each output node gathers the contributions of its (up to) 8 incident
/// elements, so there are no write conflicts and the summation order is
/// fixed. Constrained DOFs are eliminated by replacing their rows and columns
/// with the identity, which keeps the operator SPD.
#pragma once

#include "mgtopo/element.hpp"
#include "mgtopo/grid.hpp"
#include "mgtopo/linalg.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <span>
#include <vector>

namespace mgtopo {

/// Largest system assemble_dense() will build.
inline constexpr std::size_t kDenseGuard = 20000;

class StiffnessOperator final : public LinearOperator {
public:
    /// `densities` has one entry per element in [0,1]; `fixed_mask` one entry
    /// per DOF. Throws std::invalid_argument on size or range violations.
    StiffnessOperator(const StructuredGrid& grid, std::span<const double> densities, const MaterialModel& model,
                      std::span<const std::uint8_t> fixed_mask, const ElementStiffness& ke);

    std::size_t size() const override { return grid_.num_dofs(); }
    void apply(std::span<const double> u, std::span<double> v) const override;

    void diagonal(std::span<double> d) const;
    Vector diagonal() const;

    /// r = f - K u with constrained entries zeroed.
    void residual(std::span<const double> u, std::span<const double> f, std::span<double> r) const;

    Eigen::MatrixXd assemble_dense(std::size_t guard = kDenseGuard) const;
    Eigen::SparseMatrix<double> assemble_sparse() const;

    /// u_e^T K0 u_e for element e, with K0 at unit modulus and unit scale.
    double element_energy(std::size_t e, std::span<const double> u) const;

    const StructuredGrid& grid() const noexcept { return grid_; }
    const MaterialModel& model() const noexcept { return model_; }
    const ElementStiffness& stiffness() const noexcept { return ke_; }
    /// youngs * simp_scale(rho_e) per element.
    std::span<const double> element_scales() const noexcept { return scales_; }
    std::span<const std::uint8_t> fixed_mask() const noexcept { return fixed_; }
    std::span<const std::size_t> fixed_dofs() const noexcept { return fixed_list_; }

    /// Per-element scalars held by the operator.
    std::size_t storage_scalars() const noexcept { return scales_.size(); }

private:
    void gather(std::span<const double> u, std::span<double> v) const;

    StructuredGrid grid_;
    MaterialModel model_;
    ElementStiffness ke_;
    std::vector<double> scales_;
    std::vector<std::uint8_t> fixed_;
    std::vector<std::size_t> fixed_list_;
    // node offset from a corner-c node to the corner-c2 node of the same element
    std::array<std::array<std::ptrdiff_t, 8>, 8> corner_offset_{};
};

}  // namespace mgtopo
