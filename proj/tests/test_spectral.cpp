#include "doctest.h"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "qflow/errors.hpp"
#include "qflow/spectral.hpp"

using namespace qflow;
using spectral::Boundary;
using spectral::Grid1D;

TEST_CASE("harmonic oscillator ground and first excited energies") {
    auto res = spectral::ground_state_1d([](double x) { return 0.5 * x * x; }, 1.0,
                                         {-12.0, 12.0, 256, Boundary::Dirichlet}, 2);
    CHECK(res.values[0] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(res.values[1] == doctest::Approx(1.5).epsilon(1e-5));
    CHECK(res.residuals.maxCoeff() < 1e-8);
    // orthonormality
    CHECK(std::abs(res.vectors.col(0).dot(res.vectors.col(1))) < 1e-8);
    CHECK(res.vectors.col(0).norm() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("quartic ground energy against the dense oracle") {
    // independent oracle: QL-iteration eigenvalues of the same N = 4096
    // discretization (different algorithm from the Sturm bisection path)
    const int n = 4096;
    const Grid1D grid{-8.0, 8.0, n, Boundary::Dirichlet};
    const double h = grid.spacing();
    Eigen::VectorXd diag(n), off(n - 1);
    for (int i = 0; i < n; ++i) {
        const double x = grid.point(i);
        diag[i] = 1.0 / (h * h) + x * x * x * x;
    }
    off.setConstant(-0.5 / (h * h));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> oracle;
    oracle.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);

    auto mine = spectral::tridiag_lowest(diag, off, 1);
    CHECK(mine.values[0] == doctest::Approx(oracle.eigenvalues()[0]).epsilon(1e-10));

    // frozen value from the oracle run (ground energy of p^2/2 + x^4)
    auto res = spectral::ground_state_1d([](double x) { return x * x * x * x; }, 1.0,
                                         {-8.0, 8.0, 1024, Boundary::Dirichlet}, 1);
    CHECK(res.values[0] == doctest::Approx(0.667986).epsilon(1.5e-4));
}

TEST_CASE("preconditions") {
    auto v = [](double x) { return 0.5 * x * x; };
    CHECK_THROWS_AS(spectral::ground_state_1d(v, 0.0, {-5, 5, 128, Boundary::Dirichlet}, 1),
                    domain_error);
    CHECK_THROWS_AS(spectral::ground_state_1d(v, 1.0, {-5, 5, 32, Boundary::Dirichlet}, 1),
                    domain_error);
    CHECK_THROWS_AS(spectral::ground_state_1d(v, 1.0, {5, -5, 128, Boundary::Dirichlet}, 1),
                    domain_error);
}

TEST_CASE("strict eigenvalue ordering for a confining potential") {
    auto res = spectral::ground_state_1d([](double x) { return x * x * x * x - 2.0 * x * x; }, 1.0,
                                         {-8.0, 8.0, 512, Boundary::Dirichlet}, 4);
    for (int k = 1; k < 4; ++k) CHECK(res.values[k] > res.values[k - 1]);
}

TEST_CASE("variational bound from random trial vectors") {
    const Grid1D grid{-10.0, 10.0, 256, Boundary::Dirichlet};
    auto res = spectral::ground_state_1d([](double x) { return 0.5 * x * x; }, 1.0, grid, 1);
    const int n = res.grid.n;
    const double h = res.grid.spacing();
    std::mt19937 rng(5);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) {
            const double x = res.grid.point(i);
            v[i] = std::exp(-0.3 * x * x) * (1.0 + 0.2 * gauss(rng));
        }
        v.normalize();
        double e = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = res.grid.point(i);
            double hv = (1.0 / (h * h) + 0.5 * x * x) * v[i];
            if (i > 0) hv -= 0.5 / (h * h) * v[i - 1];
            if (i < n - 1) hv -= 0.5 / (h * h) * v[i + 1];
            e += v[i] * hv;
        }
        CHECK(e >= res.values[0] - res.residuals[0]);
    }
}

TEST_CASE("ground energy is monotone in the potential on 50 random pairs") {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const double k1 = 0.3 + uni(rng);
        const double a = uni(rng);
        const double b = 2.0 * uni(rng);
        auto v1 = [k1, a](double x) { return 0.5 * k1 * x * x + a * std::cos(1.7 * x); };
        auto v2 = [v1, b](double x) { return v1(x) + b * (1.0 + std::sin(0.9 * x)); };  // >= v1
        const Grid1D grid{-14.0, 14.0, 192, Boundary::Dirichlet};
        const double e1 = spectral::ground_state_1d(v1, 1.0, grid, 1).values[0];
        const double e2 = spectral::ground_state_1d(v2, 1.0, grid, 1).values[0];
        CHECK(e2 >= e1 - 1e-10);
    }
}

TEST_CASE("grid doubling converges at second order on the harmonic case") {
    auto energy_at = [](int n) {
        const Grid1D grid{-12.0, 12.0, n, Boundary::Dirichlet};
        const double h = grid.spacing();
        Eigen::VectorXd diag(n), off(n - 1);
        for (int i = 0; i < n; ++i) diag[i] = 1.0 / (h * h) + 0.5 * grid.point(i) * grid.point(i);
        off.setConstant(-0.5 / (h * h));
        return spectral::tridiag_lowest(diag, off, 1).values[0];
    };
    const double e1 = energy_at(256), e2 = energy_at(512), e3 = energy_at(1024);
    const double order = std::log2(std::abs(e1 - 0.5) / std::abs(e2 - 0.5));
    const double order2 = std::log2(std::abs(e2 - 0.5) / std::abs(e3 - 0.5));
    CHECK(order == doctest::Approx(2.0).epsilon(0.1));
    CHECK(order2 == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("periodic boundary against the plane-wave route") {
    // -(1/2m) psi'' + A cos(x) on the circle; plane-wave basis gives a
    // tridiagonal matrix with diagonal n^2/2m and off-diagonal A/2
    const double m = 1.3, A = 0.8;
    auto res = spectral::ground_state_1d([A](double x) { return A * std::cos(x); }, m,
                                         {0.0, 2.0 * M_PI, 128, Boundary::Periodic}, 2);
    const int M = 32;
    Eigen::VectorXd diag(2 * M + 1), off(2 * M);
    for (int k = -M; k <= M; ++k) diag[k + M] = k * k / (2.0 * m);
    off.setConstant(A / 2.0);
    const double oracle = spectral::tridiag_lowest(diag, off, 1).values[0];
    CHECK(res.values[0] == doctest::Approx(oracle).epsilon(2e-5));

    // aperiodic potential on a periodic window is rejected
    CHECK_THROWS_AS(spectral::ground_state_1d([](double x) { return x; }, 1.0,
                                              {0.0, 2.0 * M_PI, 128, Boundary::Periodic}, 1),
                    domain_error);
}

TEST_CASE("two uncoupled oscillators in 2d") {
    auto res = spectral::ground_state_2d(
        0.5, 0.5, [](double x, double y) { return 0.5 * x * x + 0.5 * y * y; },
        {-8.0, 8.0, 128, Boundary::Dirichlet}, {-8.0, 8.0, 128, Boundary::Dirichlet}, 1);
    CHECK(res.e0_extrapolated == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("coupled bilinear modes match the closed-form normal-mode energy") {
    // H = Q1^2/2C + Q2^2/2C' + (x1-x2)^2/2L + x2^2/2Lf + x1^2/2L1
    const double C = 1.0, Cp = 0.05, L = 1.0, Lf = 0.7, L1 = 2.0;
    Eigen::Matrix2d K, M;
    K << 1.0 / L + 1.0 / L1, -1.0 / L, -1.0 / L, 1.0 / L + 1.0 / Lf;
    M << C, 0.0, 0.0, Cp;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix2d> ges(K, M);
    const double expected = 0.5 * (std::sqrt(ges.eigenvalues()[0]) + std::sqrt(ges.eigenvalues()[1]));

    auto res = spectral::ground_state_2d(
        1.0 / (2.0 * C), 1.0 / (2.0 * Cp),
        [&](double x1, double x2) {
            return (x1 - x2) * (x1 - x2) / (2.0 * L) + x2 * x2 / (2.0 * Lf) + x1 * x1 / (2.0 * L1);
        },
        {-9.0, 9.0, 160, Boundary::Dirichlet}, {-14.0, 14.0, 192, Boundary::Dirichlet}, 1);
    CHECK(res.e0_extrapolated == doctest::Approx(expected).epsilon(2e-5));
}

TEST_CASE("charge basis limits") {
    // E_J2 = 0 decouples the chain: energy is exactly -E_J1 cos(x1)
    for (double x1 : {0.0, 0.7, 2.0}) {
        const double e = spectral::charge_basis_ground(1.3, 1e-30, 0.4, 0.0, 5.0, 1.0, x1, 16);
        CHECK(e == doctest::Approx(-1.3 * std::cos(x1)).epsilon(1e-10));
    }
    // deep small-capacitance limit: d2 -> large recovers the bare junction
    for (double x1 : {0.3, 1.1}) {
        const double e = spectral::charge_basis_ground(1.0, 1.0, 0.2, 0.0, 5e4, 1.0, x1, 16);
        CHECK(std::abs(e - (-1.0 * std::cos(x1))) < 1e-3);
    }
    // reflection symmetry (Phi, x1) -> (-Phi, -x1)
    const double ea = spectral::charge_basis_ground(1.0, 0.8, 0.3, 0.0, 12.0, 1.0, 0.9, 24);
    const double eb = spectral::charge_basis_ground(1.0, 0.8, -0.3, 0.0, 12.0, 1.0, -0.9, 24);
    CHECK(ea == doctest::Approx(eb).epsilon(1e-12));
    CHECK_THROWS_AS(spectral::charge_basis_ground(1, 1, 0, 0, 5, 1, 0, 4), domain_error);
}

TEST_CASE("solve_1dof expands the box until the tail fits") {
    auto res = spectral::solve_1dof([](double x) { return 0.5 * x * x; }, 1.0, 2.0, 1);
    CHECK(res.values[0] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(res.wall_amplitude < 1e-8);
}
