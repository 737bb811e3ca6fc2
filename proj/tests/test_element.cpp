#include "doctest.h"
#include "oracles.hpp"

#include "mgtopo/element.hpp"

#include <Eigen/Eigenvalues>

#include <stdexcept>

using namespace mgtopo;

namespace {

Eigen::MatrixXd as_matrix(const ElementStiffness& ke) {
    Eigen::MatrixXd K(24, 24);
    for (int a = 0; a < 24; ++a)
        for (int b = 0; b < 24; ++b) K(a, b) = ke(a, b);
    return K;
}

// Translations along x, y, z and infinitesimal rotations about each axis.
Eigen::MatrixXd rigid_modes() {
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(24, 6);
    for (int c = 0; c < 8; ++c) {
        const double x = c & 1, y = (c >> 1) & 1, z = (c >> 2) & 1;
        for (int d = 0; d < 3; ++d) R(3 * c + d, d) = 1.0;
        R(3 * c + 1, 3) = -z, R(3 * c + 2, 3) = y;
        R(3 * c + 0, 4) = z, R(3 * c + 2, 4) = -x;
        R(3 * c + 0, 5) = -y, R(3 * c + 1, 5) = x;
    }
    return R;
}

}  // namespace

TEST_CASE("closed-form element matches Gauss quadrature") {
    for (double nu : {0.0, 0.3, 0.45}) {
        for (double h : {1.0, 0.25, 3.0}) {
            const Eigen::MatrixXd K = as_matrix(unit_stiffness(nu, h));
            const Eigen::MatrixXd G = oracle::gauss_stiffness(nu, h);
            CHECK((K - G).norm() / G.norm() <= 1e-10);
        }
    }
}

TEST_CASE("element stiffness scales linearly with h") {
    const auto k1 = unit_stiffness(0.3, 1.0);
    const auto k2 = unit_stiffness(0.3, 2.0);
    for (std::size_t i = 0; i < 576; ++i) CHECK(k2.k[i] == 2.0 * k1.k[i]);
}

TEST_CASE("element stiffness structure") {
    const Eigen::MatrixXd K = as_matrix(unit_stiffness(0.3, 1.0));
    CHECK((K - K.transpose()).norm() <= 1e-12 * K.norm());
    CHECK((K * rigid_modes()).norm() <= 1e-12 * K.norm());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
    const auto ev = es.eigenvalues();
    const double top = ev.maxCoeff();
    int zeros = 0, positives = 0;
    for (int i = 0; i < 24; ++i) {
        if (std::abs(ev(i)) <= 1e-9 * top) ++zeros;
        else if (ev(i) > 0) ++positives;
    }
    CHECK(zeros == 6);
    CHECK(positives == 18);

    // translations balance row by row
    for (int a = 0; a < 24; ++a)
        for (int d = 0; d < 3; ++d) {
            double s = 0.0;
            for (int c = 0; c < 8; ++c) s += K(a, 3 * c + d);
            CHECK(std::abs(s) <= 1e-13);
        }
}

TEST_CASE("Jacobi-scaled element spectrum") {
    const Eigen::MatrixXd K = as_matrix(unit_stiffness(0.3, 1.0));
    const Eigen::VectorXd dinv_sqrt = K.diagonal().cwiseInverse().cwiseSqrt();
    const Eigen::MatrixXd S = dinv_sqrt.asDiagonal() * K * dinv_sqrt.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    const double lmax = es.eigenvalues().maxCoeff();
    CHECK(lmax == doctest::Approx(5.318).epsilon(1e-3));
    CHECK(lmax > 2.0 / 0.6);
}

TEST_CASE("invalid element parameters") {
    CHECK_THROWS_AS(unit_stiffness(0.5, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(unit_stiffness(-0.1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(unit_stiffness(0.3, 0.0), std::invalid_argument);
}

TEST_CASE("SIMP interpolation") {
    const MaterialModel m;
    CHECK(simp_scale(1.0, m) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(simp_scale(0.0, m) == m.kmin_frac);
    CHECK(simp_scale(0.5, m) == doctest::Approx(0.125 * (1 - 1e-9) + 1e-9).epsilon(1e-15));
    CHECK(simp_scale_derivative(1.0, m) == doctest::Approx(3 * (1 - m.kmin_frac)).epsilon(1e-15));
    CHECK(simp_scale_derivative(0.0, m) == 0.0);

    const double d = 1e-6;
    const double fd = (simp_scale(0.7 + d, m) - simp_scale(0.7 - d, m)) / (2 * d);
    CHECK(std::abs(simp_scale_derivative(0.7, m) - fd) <= 1e-6 * std::abs(fd));

    double prev = simp_scale(0.0, m);
    for (int i = 1; i <= 100; ++i) {
        const double s = simp_scale(i / 100.0, m);
        CHECK(s > prev);
        prev = s;
    }

    MaterialModel p2;
    p2.penal = 2.5;
    CHECK(simp_scale(0.4, p2) == doctest::Approx(1e-9 + std::pow(0.4, 2.5) * (1 - 1e-9)).epsilon(1e-14));
    CHECK(simp_scale_derivative(0.4, p2) == doctest::Approx(2.5 * std::pow(0.4, 1.5) * (1 - 1e-9)).epsilon(1e-14));

    CHECK_THROWS_AS(simp_scale(1.5, m), std::invalid_argument);
    MaterialModel bad;
    bad.penal = 0.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = MaterialModel{};
    bad.kmin_frac = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("element gravity load") {
    for (double v : element_gravity_load(0.0, 9.81, 1.0, 1.0)) CHECK(v == 0.0);
    const auto one = element_gravity_load(1.0, 1.0, 1.0, 1.0);
    for (int c = 0; c < 8; ++c) {
        CHECK(one[3 * c + 2] == -0.125);
        CHECK(one[3 * c] == 0.0);
        CHECK(one[3 * c + 1] == 0.0);
    }
    const auto half = element_gravity_load(0.5, 1.0, 1.0, 1.0);
    for (int i = 0; i < 24; ++i) CHECK(half[i] == 0.5 * one[i]);

    const auto g = element_gravity_load(0.8, 9.81, 0.5, 2.0, Axis::y);
    double s = 0.0;
    for (int c = 0; c < 8; ++c) s += g[3 * c + 1];
    CHECK(s == doctest::Approx(-0.8 * 2.0 * 9.81 * 0.125).epsilon(1e-15));
}
