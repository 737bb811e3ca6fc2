/// @file element.hpp
/// @brief Trilinear hexahedron stiffness, SIMP interpolation and element
/// self-weight loads.
#pragma once

#include "mgtopo/grid.hpp"

#include <array>
#include <cmath>

namespace mgtopo {

/// 24x24 stiffness of a cube element of edge h with unit Young's modulus.
/// Row/column 3*c + d is corner c (see grid.hpp), displacement component d.
struct ElementStiffness {
    std::array<double, 576> k{};
    double nu = 0.3;
    double h = 1.0;

    double operator()(int row, int col) const noexcept { return k[std::size_t(row) * 24 + col]; }
    double& operator()(int row, int col) noexcept { return k[std::size_t(row) * 24 + col]; }
};

/// Closed-form integration of the trilinear element. Throws for nu outside
/// [0, 0.5) or non-positive h.
ElementStiffness unit_stiffness(double nu, double h);

/// SIMP material: K_e = youngs * (kmin_frac + rho^penal (1 - kmin_frac)) * K0.
struct MaterialModel {
    double penal = 3.0;
    double kmin_frac = 1e-9;
    double youngs = 1.0;

    void validate() const;
};

double simp_scale(double rho, const MaterialModel& model);
double simp_scale_derivative(double rho, const MaterialModel& model);

/// Element weight rho*unit_weight*g*h^3 lumped equally onto the 8 corners,
/// acting along -axis.
std::array<double, 24> element_gravity_load(double rho, double g, double h, double unit_weight,
                                            Axis axis = Axis::z);

/// Unchecked variants for inner loops; rho must already be in [0,1].
inline double simp_scale_unchecked(double rho, const MaterialModel& m) noexcept {
    const double rp = m.penal == 3.0 ? rho * rho * rho : std::pow(rho, m.penal);
    return m.kmin_frac + rp * (1.0 - m.kmin_frac);
}

inline double simp_scale_derivative_unchecked(double rho, const MaterialModel& m) noexcept {
    if (m.penal == 1.0) return 1.0 - m.kmin_frac;
    const double rp = m.penal == 3.0 ? rho * rho : std::pow(rho, m.penal - 1.0);
    return m.penal * rp * (1.0 - m.kmin_frac);
}

}  // namespace mgtopo
