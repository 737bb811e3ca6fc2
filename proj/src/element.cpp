#include "mgtopo/element.hpp"

#include <stdexcept>

namespace mgtopo {

namespace {

// Exact 1D integrals of linear shape functions phi_0 = 1 - x/h, phi_1 = x/h on [0,h].
double mass_1d(int a, int b, double h) { return h / 6.0 * (a == b ? 2.0 : 1.0); }
double stiff_1d(int a, int b, double h) { return (a == b ? 1.0 : -1.0) / h; }
// int phi_a' phi_b dx = sign(a)/2, independent of b and h.
double mixed_1d(int a) { return a == 0 ? -0.5 : 0.5; }

// int dN_a/dx_p * dN_b/dx_q over the cube, as a product of 1D factors.
double grad_integral(const int* a, const int* b, int p, int q, double h) {
    double val = 1.0;
    for (int d = 0; d < 3; ++d) {
        if (d == p && d == q)
            val *= stiff_1d(a[d], b[d], h);
        else if (d == p)
            val *= mixed_1d(a[d]);
        else if (d == q)
            val *= mixed_1d(b[d]);
        else
            val *= mass_1d(a[d], b[d], h);
    }
    return val;
}

}  // namespace

ElementStiffness unit_stiffness(double nu, double h) {
    if (!(nu >= 0.0 && nu < 0.5))
        throw std::invalid_argument("unit_stiffness: Poisson ratio must lie in [0, 0.5)");
    if (!(h > 0.0)) throw std::invalid_argument("unit_stiffness: edge length must be positive");

    const double lambda = nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    const double mu = 1.0 / (2.0 * (1.0 + nu));

    ElementStiffness ke;
    ke.nu = nu;
    ke.h = h;
    for (int ca = 0; ca < 8; ++ca) {
        const int a[3] = {ca & 1, (ca >> 1) & 1, (ca >> 2) & 1};
        for (int cb = 0; cb < 8; ++cb) {
            const int b[3] = {cb & 1, (cb >> 1) & 1, (cb >> 2) & 1};
            double lap = 0.0;
            for (int p = 0; p < 3; ++p) lap += grad_integral(a, b, p, p, h);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    double v = lambda * grad_integral(a, b, i, j, h) + mu * grad_integral(a, b, j, i, h);
                    if (i == j) v += mu * lap;
                    ke(3 * ca + i, 3 * cb + j) = v;
                }
        }
    }
    return ke;
}

void MaterialModel::validate() const {
    if (!(penal >= 1.0)) throw std::invalid_argument("material: penalization exponent must be >= 1");
    if (!(kmin_frac > 0.0 && kmin_frac < 1.0))
        throw std::invalid_argument("material: kmin_frac must lie in (0, 1)");
    if (!(youngs > 0.0)) throw std::invalid_argument("material: Young's modulus must be positive");
}

static void check_density(double rho) {
    if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("density outside [0, 1]");
}

double simp_scale(double rho, const MaterialModel& model) {
    check_density(rho);
    return simp_scale_unchecked(rho, model);
}

double simp_scale_derivative(double rho, const MaterialModel& model) {
    check_density(rho);
    return simp_scale_derivative_unchecked(rho, model);
}

std::array<double, 24> element_gravity_load(double rho, double g, double h, double unit_weight, Axis axis) {
    check_density(rho);
    std::array<double, 24> f{};
    const double per_node = -rho * unit_weight * g * h * h * h / 8.0;
    for (int c = 0; c < 8; ++c) f[3 * c + int(axis)] = per_node;
    return f;
}

}  // namespace mgtopo
