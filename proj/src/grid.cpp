#include "mgtopo/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mgtopo {

StructuredGrid::StructuredGrid(int nelx, int nely, int nelz, double h)
    : nel_{nelx, nely, nelz}, h_(h) {
    if (nelx < 1 || nely < 1 || nelz < 1)
        throw std::invalid_argument("grid: element counts must be >= 1, got " +
                                    std::to_string(nelx) + "x" + std::to_string(nely) + "x" +
                                    std::to_string(nelz));
    if (!(h > 0.0) || !std::isfinite(h))
        throw std::invalid_argument("grid: element size must be positive");
}

std::array<int, 3> StructuredGrid::node_coords(std::size_t node) const {
    if (node >= num_nodes()) throw std::invalid_argument("grid: node index out of range");
    const std::size_t nx = nel_[0] + 1, ny = nel_[1] + 1;
    return {int(node % nx), int((node / nx) % ny), int(node / (nx * ny))};
}

std::array<int, 3> StructuredGrid::element_coords(std::size_t e) const {
    if (e >= num_elements()) throw std::invalid_argument("grid: element index out of range");
    const std::size_t nx = nel_[0], ny = nel_[1];
    return {int(e % nx), int((e / nx) % ny), int(e / (nx * ny))};
}

std::array<std::size_t, 8> StructuredGrid::element_nodes(std::size_t e) const {
    const auto [i, j, k] = element_coords(e);
    std::array<std::size_t, 8> nodes{};
    for (int c = 0; c < 8; ++c) nodes[c] = node_index(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
    return nodes;
}

std::array<std::size_t, 24> StructuredGrid::element_dofs(std::size_t e) const {
    const auto nodes = element_nodes(e);
    std::array<std::size_t, 24> dofs{};
    for (int c = 0; c < 8; ++c)
        for (int d = 0; d < 3; ++d) dofs[3 * c + d] = 3 * nodes[c] + d;
    return dofs;
}

std::array<double, 3> StructuredGrid::element_center(std::size_t e) const {
    const auto [i, j, k] = element_coords(e);
    return {(i + 0.5) * h_, (j + 0.5) * h_, (k + 0.5) * h_};
}

std::array<double, 3> StructuredGrid::node_position(std::size_t node) const {
    const auto [i, j, k] = node_coords(node);
    return {i * h_, j * h_, k * h_};
}

int StructuredGrid::node_valence(std::size_t node) const {
    const auto ijk = node_coords(node);
    int valence = 1;
    for (int a = 0; a < 3; ++a) {
        const bool interior = ijk[a] > 0 && ijk[a] < nel_[a];
        valence *= interior ? 2 : 1;
    }
    return valence;
}

bool StructuredGrid::can_coarsen() const noexcept {
    for (int a = 0; a < 3; ++a)
        if (nel_[a] % 2 != 0 || nel_[a] / 2 < 1) return false;
    return true;
}

StructuredGrid StructuredGrid::coarsened() const {
    if (!can_coarsen())
        throw std::invalid_argument("grid: cannot halve an odd element count");
    return StructuredGrid(nel_[0] / 2, nel_[1] / 2, nel_[2] / 2, 2.0 * h_);
}

std::size_t RegionMask::count(RegionClass c) const {
    return std::size_t(std::count(cls.begin(), cls.end(), c));
}

std::array<std::array<int, 2>, 3> box_element_range(const StructuredGrid& grid, const Box& box) {
    const auto ext = grid.extent();
    const double h = grid.h();
    const double tol = 1e-9 * h;
    std::array<std::array<int, 2>, 3> range{};
    for (int a = 0; a < 3; ++a) {
        const double lo = box.lo[a], hi = box.hi[a];
        if (!(lo <= hi) || lo < -tol || hi > ext[a] + tol)
            throw std::invalid_argument("regions: box lies outside the domain along axis " +
                                        std::string(1, char('x' + a)));
        // centers (i + 1/2) h inside [lo, hi]
        int first = int(std::ceil((lo - tol) / h - 0.5));
        int last = int(std::floor((hi + tol) / h - 0.5));
        first = std::max(first, 0);
        last = std::min(last, grid.nel(a) - 1);
        if (first > last) {
            const double mid = 0.5 * (lo + hi) / h;
            const double rounded = std::round(mid);
            if (std::abs(mid - rounded) * h <= tol) {
                first = int(rounded) - 1;
                last = int(rounded);
            } else {
                first = last = int(std::floor(mid));
            }
            first = std::clamp(first, 0, grid.nel(a) - 1);
            last = std::clamp(last, 0, grid.nel(a) - 1);
        }
        range[a] = {first, last};
    }
    return range;
}

RegionMask classify_regions(const StructuredGrid& grid, std::span<const RegionBox> boxes) {
    RegionMask mask;
    mask.cls.assign(grid.num_elements(), RegionClass::active);
    for (const auto& rb : boxes) {
        const auto r = box_element_range(grid, rb.box);
        for (int k = r[2][0]; k <= r[2][1]; ++k)
            for (int j = r[1][0]; j <= r[1][1]; ++j)
                for (int i = r[0][0]; i <= r[0][1]; ++i) mask.cls[grid.element_index(i, j, k)] = rb.cls;
    }
    return mask;
}

void BoundarySpec::validate(const StructuredGrid& grid) const {
    const std::size_t n = grid.num_dofs();
    const auto mask = fixed_mask(grid);
    for (const auto& l : loads) {
        if (l.dof >= n) throw std::invalid_argument("boundary: load DOF out of range");
        if (mask[l.dof]) throw std::invalid_argument("boundary: load applied to fixed DOF " + std::to_string(l.dof));
        if (!std::isfinite(l.value)) throw std::invalid_argument("boundary: non-finite load");
    }
    if (gravity && !(gravity->acceleration >= 0.0 && gravity->unit_weight >= 0.0))
        throw std::invalid_argument("boundary: gravity magnitudes must be non-negative");
}

std::vector<std::uint8_t> BoundarySpec::fixed_mask(const StructuredGrid& grid) const {
    const std::size_t n = grid.num_dofs();
    std::vector<std::uint8_t> mask(n, 0);
    for (auto d : fixed_dofs) {
        if (d >= n) throw std::invalid_argument("boundary: fixed DOF out of range");
        mask[d] = 1;
    }
    return mask;
}

std::vector<double> BoundarySpec::load_vector(const StructuredGrid& grid) const {
    std::vector<double> f(grid.num_dofs(), 0.0);
    for (const auto& l : loads) {
        if (l.dof >= f.size()) throw std::invalid_argument("boundary: load DOF out of range");
        f[l.dof] += l.value;
    }
    return f;
}

}  // namespace mgtopo
