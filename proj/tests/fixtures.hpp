// Small problems shared by the unit tests.
#pragma once

#include "mgtopo/grid.hpp"

#include <cstdint>
#include <vector>

namespace fixture {

// Clamped at x = 0, downward unit loads spread over the free-end bottom edge.
inline mgtopo::BoundarySpec cantilever_bc(const mgtopo::StructuredGrid& g) {
    mgtopo::BoundarySpec bc;
    for (int k = 0; k < g.nn(2); ++k)
        for (int j = 0; j < g.nn(1); ++j)
            for (int d = 0; d < 3; ++d) bc.fixed_dofs.push_back(3 * g.node_index(0, j, k) + d);
    for (int j = 0; j < g.nn(1); ++j) {
        const double w = (j == 0 || j == g.nely()) ? 0.5 : 1.0;
        bc.loads.push_back({3 * g.node_index(g.nelx(), j, 0) + 2, -w / g.nely()});
    }
    return bc;
}

inline std::vector<std::uint8_t> cantilever_mask(const mgtopo::StructuredGrid& g) {
    return cantilever_bc(g).fixed_mask(g);
}

}  // namespace fixture
