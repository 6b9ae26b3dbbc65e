#include "doctest.h"

#include <cmath>
#include <random>

#include "qflow/errors.hpp"
#include "qflow/lagrangian.hpp"
#include "qflow/netlist.hpp"

using namespace qflow;

namespace {

Netlist fig1a(double C = 1.0, double L1 = 1.0, double L2 = 2.0) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "C 1 0 %.17g\nL 1 2 %.17g\nL 2 0 %.17g", C, L1, L2);
    return parse_netlist(buf);
}

}  // namespace

TEST_CASE("assemble the series-inductance circuit") {
    CircuitLagrangian lag = assemble(fig1a(1.5, 1.0, 2.0));
    REQUIRE(lag.dim() == 2);
    CHECK(lag.C(0, 0) == 1.5);
    CHECK(lag.C(0, 1) == 0.0);
    CHECK(lag.C(1, 1) == 0.0);
    REQUIRE(lag.terms.size() == 2);
    // U(phi) = (phi1-phi2)^2/2L1 + phi2^2/2L2
    Eigen::Vector2d phi(0.7, -0.4);
    const double expected = std::pow(0.7 + 0.4, 2) / 2.0 + 0.16 / 4.0;
    CHECK(lag.potential(phi) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("assemble a single grounded gyrator in symmetric gauge") {
    Netlist net = parse_netlist("C 1 0 1\nC 2 0 1\nGYR 1 0 2 0 G=0.8");
    CircuitLagrangian lag = assemble(net);
    CHECK(lag.A(0, 1) == doctest::Approx(0.4));
    CHECK(lag.A(1, 0) == doctest::Approx(-0.4));
    CHECK(lag.A(0, 0) == 0.0);
}

TEST_CASE("assemble a lone capacitor with empty inductive content on it") {
    Netlist net = parse_netlist("C 1 0 2.0\nL 1 2 1.0");
    CircuitLagrangian lag = assemble(net);
    CHECK(lag.terms.size() == 1);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(lag.C);
    CHECK(svd.rank() == 1);
}

TEST_CASE("assembled matrices are exactly symmetric and antisymmetric") {
    Netlist net = parse_netlist(
        "C 1 0 0.3\nC 1 2 0.9\nC 2 3 1.7\nJJ 3 0 EJ=1 Cint=0.2\n"
        "GYR 1 2 3 0 G=0.37\nGYR 2 0 1 3 G=1.21\nL 1 3 2.0");
    CircuitLagrangian lag = assemble(net);
    CHECK((lag.C - lag.C.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((lag.A + lag.A.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("external flux offsets land in the potential terms") {
    Netlist net = parse_netlist("C 1 0 1\nJJ 1 0 EJ=2 Cint=0 loop=a\nFLUX loop=a phi=1.1");
    CircuitLagrangian lag = assemble(net);
    REQUIRE(lag.terms.size() == 1);
    Eigen::VectorXd phi(1);
    phi << 0.3;
    CHECK(lag.potential(phi) == doctest::Approx(-2.0 * std::cos(0.3 + 1.1)).epsilon(1e-14));
}

TEST_CASE("regularize completes the kernel only") {
    CircuitLagrangian lag = assemble(fig1a());
    CircuitLagrangian reg = regularize(lag, 1e-3);
    CHECK(reg.C(0, 0) == doctest::Approx(1.0));
    CHECK(reg.C(1, 1) == doctest::Approx(1e-3));
    CHECK(reg.C(0, 1) == doctest::Approx(0.0));
    CircuitLagrangian again = regularize(reg, 0.5);  // full rank: no-op
    CHECK((again.C - reg.C).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(regularize(lag, 0.0), domain_error);
    CHECK_THROWS_AS(regularize(lag, -1.0), domain_error);
}

TEST_CASE("legendre transformation in the regular case") {
    Netlist lc = parse_netlist("C 1 0 2.0\nL 1 0 0.5");
    RegularHamiltonian h = legendre_regular(assemble(lc));
    Eigen::VectorXd phi(1), q(1);
    phi << 0.3;
    q << 0.7;
    CHECK(h.energy(phi, q) == doctest::Approx(0.49 / 4.0 + 0.09).epsilon(1e-14));

    // two-variable kinetic form with the intrinsic capacitance
    Netlist f4 = parse_netlist("C 1 0 1.0\nL 1 2 1.0\nJJ 2 0 EJ=1 Cint=0.01");
    RegularHamiltonian h2 = legendre_regular(assemble(f4));
    Eigen::Vector2d p2(0.2, -0.4), q2(0.1, 0.05);
    const double expect = 0.1 * 0.1 / 2.0 + 0.05 * 0.05 / 0.02 + std::pow(0.2 + 0.4, 2) / 2.0 -
                          std::cos(-0.4);
    CHECK(h2.energy(p2, q2) == doctest::Approx(expect).epsilon(1e-12));

    CHECK_THROWS_AS(legendre_regular(assemble(fig1a())), domain_error);
}

TEST_CASE("gauge transformation leaves the classical dynamics unchanged") {
    Netlist net = parse_netlist("C 1 0 1\nC 2 0 0.5\nGYR 1 0 2 0 G=0.8\nL 1 0 1\nJJ 2 0 EJ=0.7 Cint=0");
    CircuitLagrangian lag = assemble(net);
    std::mt19937 rng(3);
    std::normal_distribution<double> g;
    Eigen::MatrixXd F(2, 2);
    for (int i = 0; i < 4; ++i) F(i / 2, i % 2) = g(rng);
    CircuitLagrangian gauged = lag;
    gauged.A = lag.A + F + F.transpose();
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::Vector2d phi(g(rng), g(rng)), phidot(g(rng), g(rng));
        const Eigen::VectorXd a1 = classical_accel(lag, phi, phidot);
        const Eigen::VectorXd a2 = classical_accel(gauged, phi, phidot);
        CHECK((a1 - a2).cwiseAbs().maxCoeff() < 1e-9 * (1.0 + a1.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("normal modes of an all-linear circuit match the closed form") {
    const double c1 = 1.0, c2 = 0.4, l1 = 0.8, l2 = 1.7, lc = 0.9;
    char buf[256];
    std::snprintf(buf, sizeof buf, "C 1 0 %g\nC 2 0 %g\nL 1 0 %g\nL 2 0 %g\nL 1 2 %g", c1, c2, l1,
                  l2, lc);
    CircuitLagrangian lag = assemble(parse_netlist(buf));
    Eigen::VectorXd w = normal_mode_frequencies(lag);

    const double k11 = 1.0 / l1 + 1.0 / lc, k22 = 1.0 / l2 + 1.0 / lc, k12 = -1.0 / lc;
    const double A = c1 * c2;
    const double B = -(k11 * c2 + k22 * c1);
    const double C = k11 * k22 - k12 * k12;
    const double disc = std::sqrt(B * B - 4 * A * C);
    CHECK(w[0] == doctest::Approx(std::sqrt((-B - disc) / (2 * A))).epsilon(1e-10));
    CHECK(w[1] == doctest::Approx(std::sqrt((-B + disc) / (2 * A))).epsilon(1e-10));

    CHECK_THROWS_AS(normal_mode_frequencies(assemble(parse_netlist("C 1 0 1\nJJ 1 0 EJ=1 Cint=0"))),
                    domain_error);
}
