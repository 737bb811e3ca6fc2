/// @file filter.hpp
/// @brief Sensitivity filter with linearly decaying weights over element centers.
#pragma once

#include "mgtopo/grid.hpp"

#include <span>
#include <utility>
#include <vector>

namespace mgtopo {

/// Neighborhood weights w = r - dist for all element centers with dist <= r.
/// The neighborhood is stored once as an offset stencil; boundary elements
/// simply see fewer neighbors.
class FilterWeights {
public:
    struct Offset {
        int di, dj, dk;
        double w;
    };

    /// Throws std::invalid_argument when radius < h.
    FilterWeights(const StructuredGrid& grid, double radius);

    const StructuredGrid& grid() const noexcept { return grid_; }
    double radius() const noexcept { return radius_; }
    std::span<const Offset> offsets() const noexcept { return offsets_; }
    /// Sum of w over the neighborhood of element e.
    double weight_sum(std::size_t e) const noexcept { return wsum_[e]; }
    /// Explicit (neighbor, weight) list of element e.
    std::vector<std::pair<std::size_t, double>> neighbors(std::size_t e) const;

private:
    StructuredGrid grid_;
    double radius_;
    std::vector<Offset> offsets_;
    std::vector<double> wsum_;
};

inline FilterWeights build_filter(const StructuredGrid& grid, double radius) { return FilterWeights(grid, radius); }

/// out_e = sum_i w rho_i dc_i / (max(gamma, rho_e) sum_i w).
/// When `active` is given, inactive elements keep their unfiltered value.
void filter_sensitivities(std::span<const double> dc, std::span<const double> rho, const FilterWeights& w,
                          double gamma, std::span<double> out, const RegionMask* active = nullptr);

}  // namespace mgtopo
