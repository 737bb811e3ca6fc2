/// @file grid.hpp
/// @brief Structured hexahedral grid: node/element/DOF numbering, boundary
/// conditions and passive-region classification.
///
/// Numbering is lexicographic with x fastest:
///   node(i,j,k)    = i + j*(nelx+1) + k*(nelx+1)*(nely+1)
///   element(i,j,k) = i + j*nelx     + k*nelx*nely
///   dof(node, d)   = 3*node + d,  d = 0,1,2 for x,y,z
///
/// Element corner c in [0,8) sits at offset (c&1, (c>>1)&1, (c>>2)&1) from the
/// element's lowest node. The element stiffness matrix uses the same order.
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace mgtopo {

enum class Axis : int { x = 0, y = 1, z = 2 };

class StructuredGrid {
public:
    StructuredGrid(int nelx, int nely, int nelz, double h);

    int nelx() const noexcept { return nel_[0]; }
    int nely() const noexcept { return nel_[1]; }
    int nelz() const noexcept { return nel_[2]; }
    int nel(int axis) const noexcept { return nel_[axis]; }
    /// Node count along an axis.
    int nn(int axis) const noexcept { return nel_[axis] + 1; }
    double h() const noexcept { return h_; }

    std::size_t num_elements() const noexcept {
        return std::size_t(nel_[0]) * nel_[1] * nel_[2];
    }
    std::size_t num_nodes() const noexcept {
        return std::size_t(nel_[0] + 1) * (nel_[1] + 1) * (nel_[2] + 1);
    }
    std::size_t num_dofs() const noexcept { return 3 * num_nodes(); }

    std::size_t node_index(int i, int j, int k) const noexcept {
        return std::size_t(i) + std::size_t(nel_[0] + 1) * (j + std::size_t(nel_[1] + 1) * k);
    }
    std::array<int, 3> node_coords(std::size_t node) const;

    std::size_t element_index(int i, int j, int k) const noexcept {
        return std::size_t(i) + std::size_t(nel_[0]) * (j + std::size_t(nel_[1]) * k);
    }
    std::array<int, 3> element_coords(std::size_t e) const;

    /// The 8 corner nodes of element e in corner order.
    std::array<std::size_t, 8> element_nodes(std::size_t e) const;
    /// The 24 DOFs of element e, 3 per corner.
    std::array<std::size_t, 24> element_dofs(std::size_t e) const;

    std::array<double, 3> element_center(std::size_t e) const;
    std::array<double, 3> node_position(std::size_t node) const;
    /// Physical extent of the domain along each axis.
    std::array<double, 3> extent() const noexcept {
        return {nel_[0] * h_, nel_[1] * h_, nel_[2] * h_};
    }

    /// Number of elements sharing the node (1 at corners, 8 in the interior).
    int node_valence(std::size_t node) const;

    bool can_coarsen() const noexcept;
    /// Grid with every element count halved and h doubled.
    StructuredGrid coarsened() const;

    bool operator==(const StructuredGrid&) const = default;

private:
    std::array<int, 3> nel_;
    double h_;
};

inline StructuredGrid build_grid(int nelx, int nely, int nelz, double h) {
    return StructuredGrid(nelx, nely, nelz, h);
}

enum class RegionClass : std::uint8_t { active = 0, passive_solid = 1, passive_void = 2 };

/// Axis-aligned box in physical coordinates.
struct Box {
    std::array<double, 3> lo;
    std::array<double, 3> hi;
};

struct RegionBox {
    Box box;
    RegionClass cls;
};

struct RegionMask {
    std::vector<RegionClass> cls;

    std::size_t size() const noexcept { return cls.size(); }
    bool is_active(std::size_t e) const noexcept { return cls[e] == RegionClass::active; }
    std::size_t count(RegionClass c) const;
};

/// Element index range [lo, hi] per axis selected by a box. An element is
/// inside when its center lies in the closed box; a box thinner than one
/// element along some axis selects the element layer(s) at its midplane.
std::array<std::array<int, 2>, 3> box_element_range(const StructuredGrid& grid, const Box& box);

/// Classifies every element; later boxes override earlier ones, default active.
RegionMask classify_regions(const StructuredGrid& grid, std::span<const RegionBox> boxes);

struct PointLoad {
    std::size_t dof;
    double value;
};

/// Self-weight acting in the negative direction of `axis`.
struct GravitySpec {
    Axis axis = Axis::z;
    double acceleration = 9.81;
    /// Mass per unit volume of fully solid material.
    double unit_weight = 1.0;
};

struct BoundarySpec {
    std::vector<std::size_t> fixed_dofs;
    std::vector<PointLoad> loads;
    std::optional<GravitySpec> gravity;

    /// Throws std::invalid_argument on out-of-range DOFs or loads on fixed DOFs.
    void validate(const StructuredGrid& grid) const;
    /// Per-DOF mask, 1 where fixed.
    std::vector<std::uint8_t> fixed_mask(const StructuredGrid& grid) const;
    /// Assembled external load vector (gravity excluded).
    std::vector<double> load_vector(const StructuredGrid& grid) const;
};

}  // namespace mgtopo
