#include "mgtopo/filter.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mgtopo {

FilterWeights::FilterWeights(const StructuredGrid& grid, double radius) : grid_(grid), radius_(radius) {
    const double h = grid.h();
    if (!(radius >= h * (1.0 - 1e-12)))
        throw std::invalid_argument("filter: radius " + std::to_string(radius) + " is smaller than the element size " +
                                    std::to_string(h));
    const int reach = int(std::floor(radius / h + 1e-9));
    for (int dk = -reach; dk <= reach; ++dk)
        for (int dj = -reach; dj <= reach; ++dj)
            for (int di = -reach; di <= reach; ++di) {
                const double dist = h * std::sqrt(double(di * di + dj * dj + dk * dk));
                if (dist <= radius * (1.0 + 1e-12)) offsets_.push_back({di, dj, dk, std::max(0.0, radius - dist)});
            }

    wsum_.assign(grid.num_elements(), 0.0);
    for (int k = 0; k < grid.nelz(); ++k)
        for (int j = 0; j < grid.nely(); ++j)
            for (int i = 0; i < grid.nelx(); ++i) {
                double s = 0.0;
                for (const auto& o : offsets_) {
                    const int a = i + o.di, b = j + o.dj, c = k + o.dk;
                    if (a < 0 || b < 0 || c < 0 || a >= grid.nelx() || b >= grid.nely() || c >= grid.nelz()) continue;
                    s += o.w;
                }
                wsum_[grid.element_index(i, j, k)] = s;
            }
}

std::vector<std::pair<std::size_t, double>> FilterWeights::neighbors(std::size_t e) const {
    const auto [i, j, k] = grid_.element_coords(e);
    std::vector<std::pair<std::size_t, double>> out;
    for (const auto& o : offsets_) {
        const int a = i + o.di, b = j + o.dj, c = k + o.dk;
        if (a < 0 || b < 0 || c < 0 || a >= grid_.nelx() || b >= grid_.nely() || c >= grid_.nelz()) continue;
        out.emplace_back(grid_.element_index(a, b, c), o.w);
    }
    return out;
}

void filter_sensitivities(std::span<const double> dc, std::span<const double> rho, const FilterWeights& w,
                          double gamma, std::span<double> out, const RegionMask* active) {
    const StructuredGrid& g = w.grid();
    const std::size_t nel = g.num_elements();
    if (dc.size() != nel || rho.size() != nel || out.size() != nel)
        throw std::invalid_argument("filter_sensitivities: vector lengths must equal the element count");
    if (active && active->size() != nel) throw std::invalid_argument("filter_sensitivities: region mask size mismatch");
    if (!(gamma > 0.0)) throw std::invalid_argument("filter_sensitivities: gamma must be > 0");
    const auto offsets = w.offsets();
    const int nx = g.nelx(), ny = g.nely(), nz = g.nelz();

#pragma omp parallel for schedule(static)
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const std::size_t e = g.element_index(i, j, k);
                if (active && !active->is_active(e)) {
                    out[e] = dc[e];
                    continue;
                }
                double s = 0.0;
                for (const auto& o : offsets) {
                    const int a = i + o.di, b = j + o.dj, c = k + o.dk;
                    if (a < 0 || b < 0 || c < 0 || a >= nx || b >= ny || c >= nz) continue;
                    const std::size_t n = g.element_index(a, b, c);
                    s += o.w * rho[n] * dc[n];
                }
                out[e] = s / (std::max(gamma, rho[e]) * w.weight_sum(e));
            }
}

}  // namespace mgtopo
