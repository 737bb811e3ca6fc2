#include "mgtopo/app/preset.hpp"

#include <cmath>
#include <sstream>

namespace mgtopo::app {

const char* to_string(LoadProfile p) noexcept { return p == LoadProfile::uniform ? "uniform" : "parabolic"; }

LoadProfile parse_load_profile(const std::string& s) {
    if (s == "uniform") return LoadProfile::uniform;
    if (s == "parabolic") return LoadProfile::parabolic;
    throw std::invalid_argument("unknown load profile '" + s + "' (expected uniform or parabolic)");
}

const std::vector<PresetInfo>& presets() {
    static const std::vector<PresetInfo> all{
        {"cantilever", {2.0, 1.0, 1.0}, {64, 32, 32}, 0.12,
         "clamped at x = 0, downward line load along the bottom edge of the free end"},
        {"arch-bridge-140", {140.0, 10.0, 20.0}, {448, 32, 64}, 0.14,
         "1.5 m solid deck on top, mid-span void slot, corner supports, deck pressure"},
        {"arch-bridge-40", {40.0, 10.0, 20.0}, {256, 64, 128}, 0.14,
         "0.6 m solid deck at mid-height with a traffic void above, corner supports"},
        {"highrise", {64.0, 64.0, 256.0}, {64, 64, 256}, 0.12,
         "hollow core, perimeter design shell, fixed base, lateral load on one face"},
        {"footbridge", {180.0, 10.0, 40.0}, {144, 8, 32}, 0.125,
         "solid tube on top of the support region, end supports, self-weight"},
    };
    return all;
}

const PresetInfo& preset_info(const std::string& name) {
    for (const auto& p : presets())
        if (p.name == name) return p;
    std::string known;
    for (const auto& p : presets()) known += (known.empty() ? "" : ", ") + p.name;
    throw PresetError("unknown preset '" + name + "' (known: " + known + ")");
}

double element_size(const PresetInfo& info, const std::array<int, 3>& res) {
    for (int a = 0; a < 3; ++a)
        if (res[a] < 1) throw PresetError("resolution must have at least one element per axis");
    const double h = info.domain[0] / res[0];
    for (int a = 1; a < 3; ++a) {
        if (std::abs(info.domain[a] / res[a] - h) > 1e-9 * h) {
            std::ostringstream os;
            os << "resolution " << res[0] << "x" << res[1] << "x" << res[2] << " does not give cubic elements on the "
               << info.name << " domain " << info.domain[0] << " x " << info.domain[1] << " x " << info.domain[2];
            throw PresetError(os.str());
        }
    }
    return h;
}

namespace {

void fix_node(BoundarySpec& bc, const StructuredGrid& g, int i, int j, int k) {
    for (int d = 0; d < 3; ++d) bc.fixed_dofs.push_back(3 * g.node_index(i, j, k) + d);
}

void fix_bottom_corners(BoundarySpec& bc, const StructuredGrid& g) {
    for (int i : {0, g.nelx()})
        for (int j : {0, g.nely()}) fix_node(bc, g, i, j, 0);
}

std::array<int, 2> tangential(Axis normal) {
    switch (normal) {
        case Axis::x: return {1, 2};
        case Axis::y: return {0, 2};
        case Axis::z: return {0, 1};
    }
    return {0, 1};
}

Problem cantilever(const StructuredGrid& g) {
    BoundarySpec bc;
    for (int k = 0; k <= g.nelz(); ++k)
        for (int j = 0; j <= g.nely(); ++j) fix_node(bc, g, 0, j, k);
    const double q = 1.0;
    add_surface_load(bc, g, Axis::x, g.nelx(), {0, 0}, {g.nely(), 0}, Axis::z, -q);
    return Problem{g, bc, classify_regions(g, {}), MaterialModel{}, 0.3};
}

Problem arch_bridge_140(const StructuredGrid& g, const PresetInfo& info) {
    const auto [L, W, H] = info.domain;
    BoundarySpec bc;
    fix_bottom_corners(bc, g);
    add_surface_load(bc, g, Axis::z, g.nelz(), {0, 0}, {g.nelx(), g.nely()}, Axis::z, -100.0);
    const std::vector<RegionBox> boxes{
        {Box{{0, 0, H - 1.5}, {L, W, H}}, RegionClass::passive_solid},
        {Box{{L / 2 - 0.5, 0, 0}, {L / 2 + 0.5, W, H - 1.5}}, RegionClass::passive_void},
    };
    return Problem{g, bc, classify_regions(g, boxes), MaterialModel{}, 0.3};
}

Problem arch_bridge_40(const StructuredGrid& g, const PresetInfo& info) {
    const auto [L, W, H] = info.domain;
    const double deck_lo = H / 2 - 0.3, deck_hi = H / 2 + 0.3;
    const std::vector<RegionBox> boxes{
        {Box{{0, 0, deck_lo}, {L, W, deck_hi}}, RegionClass::passive_solid},
        {Box{{0, (W - 8.8) / 2, deck_hi}, {L, (W + 8.8) / 2, H}}, RegionClass::passive_void},
    };
    const auto deck = box_element_range(g, boxes[0].box);
    BoundarySpec bc;
    fix_bottom_corners(bc, g);
    add_surface_load(bc, g, Axis::z, deck[2][1] + 1, {0, 0}, {g.nelx(), g.nely()}, Axis::z, -100.0);
    return Problem{g, bc, classify_regions(g, boxes), MaterialModel{}, 0.3};
}

Problem highrise(const StructuredGrid& g, const PresetInfo& info, const PresetOptions& opts) {
    const auto [B, D, H] = info.domain;
    const double shell = B / 16;
    BoundarySpec bc;
    for (int j = 0; j <= g.nely(); ++j)
        for (int i = 0; i <= g.nelx(); ++i) fix_node(bc, g, i, j, 0);
    const double q0 = 1.0;
    if (opts.profile == LoadProfile::uniform) {
        add_surface_load(bc, g, Axis::x, 0, {0, 0}, {g.nely(), g.nelz()}, Axis::x, q0);
    } else {
        add_surface_load(bc, g, Axis::x, 0, {0, 0}, {g.nely(), g.nelz()}, Axis::x,
                         [&](const std::array<double, 3>& p) { return q0 * (p[2] / H) * (p[2] / H); });
    }
    const std::vector<RegionBox> boxes{
        {Box{{shell, shell, 0}, {B - shell, D - shell, H}}, RegionClass::passive_void},
    };
    MaterialModel m;
    m.kmin_frac = 1e-6;
    return Problem{g, bc, classify_regions(g, boxes), m, 0.3};
}

Problem footbridge(const StructuredGrid& g, const PresetInfo& info) {
    const auto [L, W, H] = info.domain;
    const double top = 37.5 / 40 * H, base = 30.0 / 40 * H, wall = W / 8;
    BoundarySpec bc;
    for (int i = 0; i <= g.nelx(); ++i) {
        const double x = i * g.h();
        if (x > 0.1 * L + 1e-9 && x < 0.9 * L - 1e-9) continue;
        for (int j = 0; j <= g.nely(); ++j) fix_node(bc, g, i, j, 0);
    }
    bc.gravity = GravitySpec{Axis::z, 9.81, 1.0};
    const std::vector<RegionBox> boxes{
        {Box{{0, 0, top}, {L, W, H}}, RegionClass::passive_void},
        {Box{{0, W / 4, base}, {L, 3 * W / 4, top}}, RegionClass::passive_solid},
        {Box{{0, W / 4 + wall, base + wall}, {L, 3 * W / 4 - wall, top - wall}}, RegionClass::passive_void},
    };
    return Problem{g, bc, classify_regions(g, boxes), MaterialModel{}, 0.3};
}

}  // namespace

void add_surface_load(BoundarySpec& bc, const StructuredGrid& g, Axis normal, int plane, std::array<int, 2> lo,
                      std::array<int, 2> hi, Axis direction, double pressure) {
    add_surface_load(bc, g, normal, plane, lo, hi, direction, [pressure](const std::array<double, 3>&) { return pressure; });
}

void add_surface_load(BoundarySpec& bc, const StructuredGrid& g, Axis normal, int plane, std::array<int, 2> lo,
                      std::array<int, 2> hi, Axis direction,
                      const std::function<double(const std::array<double, 3>&)>& pressure) {
    const int n = int(normal);
    const auto t = tangential(normal);
    if (plane < 0 || plane > g.nel(n)) throw std::invalid_argument("surface load: plane outside the grid");
    for (int s = 0; s < 2; ++s)
        if (lo[s] < 0 || hi[s] > g.nel(t[s]) || lo[s] > hi[s])
            throw std::invalid_argument("surface load: node rectangle outside the grid");
    const auto fixed = bc.fixed_mask(g);
    auto weight = [&](int s, int idx) {
        if (lo[s] == hi[s]) return 1.0;
        return g.h() * ((idx == lo[s] || idx == hi[s]) ? 0.5 : 1.0);
    };
    for (int b = lo[1]; b <= hi[1]; ++b)
        for (int a = lo[0]; a <= hi[0]; ++a) {
            std::array<int, 3> ijk{};
            ijk[n] = plane;
            ijk[t[0]] = a;
            ijk[t[1]] = b;
            const std::size_t node = g.node_index(ijk[0], ijk[1], ijk[2]);
            const std::size_t dof = 3 * node + std::size_t(direction);
            if (fixed[dof]) continue;
            const double value = pressure(g.node_position(node)) * weight(0, a) * weight(1, b);
            if (value != 0.0) bc.loads.push_back({dof, value});
        }
}

Problem instantiate_preset(const std::string& name, const std::array<int, 3>& res, const PresetOptions& opts) {
    const PresetInfo& info = preset_info(name);
    const StructuredGrid g = build_grid(res[0], res[1], res[2], element_size(info, res));
    Problem p = [&] {
        if (name == "cantilever") return cantilever(g);
        if (name == "arch-bridge-140") return arch_bridge_140(g, info);
        if (name == "arch-bridge-40") return arch_bridge_40(g, info);
        if (name == "highrise") return highrise(g, info, opts);
        return footbridge(g, info);
    }();
    p.validate();
    return p;
}

}  // namespace mgtopo::app
