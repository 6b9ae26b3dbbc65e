#include "doctest.h"

#include <cmath>

#include "qflow/errors.hpp"
#include "qflow/snail.hpp"

using namespace qflow;
using namespace qflow::snail;

namespace {

SnailParams symmetric_params(double ej1, double ej2, double k1, double k2, double ec, double Phi) {
    SnailParams p{};
    p.ej1 = ej1;
    p.ej2 = p.ej3 = ej2;
    p.k1 = k1;
    p.k2 = p.k3 = k2;
    p.ec = ec;
    p.Phi = Phi;
    return p;
}

}  // namespace

TEST_CASE("cholesky-derived frame") {
    SnailParams p = symmetric_params(1.0, 1.0, 1e-12, 0.1, 1.0, 0.0);
    SnailFrame f = transform_and_assemble(p);
    CHECK(f.d2 == doctest::Approx(5.0));
    CHECK(f.A(0, 1) == doctest::Approx(-0.5));
    // x1 column is preserved
    CHECK(f.A(0, 0) == 1.0);
    CHECK(f.A(1, 0) == 0.0);

    // d1, d2 stay finite for large equal ratios
    SnailParams big = symmetric_params(1.0, 1.0, 50.0, 50.0, 1.0, 0.0);
    SnailFrame fb = transform_and_assemble(big);
    CHECK(fb.d1 == doctest::Approx(100.0 / (100.0 + 3.0 * 2500.0)));
    CHECK(fb.d2 == doctest::Approx(0.01));

    // potential matches the sheared cosines
    SnailParams q = symmetric_params(1.3, 0.7, 0.2, 0.1, 1.0, 0.4);
    SnailFrame fq = transform_and_assemble(q);
    const double x1 = 0.9, x2 = -0.3;
    const double expect = -1.3 * std::cos(x1) - 0.7 * std::cos(0.5 * x1 + x2) -
                          0.7 * std::cos(0.5 * x1 - x2 + 0.4);
    CHECK(fq.potential(x1, x2) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("single-phase approximations") {
    SnailParams p = symmetric_params(1.0, 1.0, 0.1, 0.05, 0.02, 0.0);
    Eigen::VectorXd x1 = Eigen::VectorXd::LinSpaced(5, -2.0, 2.0);
    SinglePhase sp = single_phase(p, x1);

    // U_cl at x1 = 0, Phi = 0 is -E_J1 - 2 E_J2
    CHECK(sp.u_cl[2] == doctest::Approx(-3.0).epsilon(1e-14));
    // renormalized junction energy
    CHECK(sp.ej2_renormalized == doctest::Approx(1.0 - 0.5 * std::sqrt(0.2)).epsilon(1e-12));
    CHECK(sp.ej2_renormalized < p.ej2);
    // zero-point correction is positive inside the validity window
    for (int i = 0; i < x1.size(); ++i) {
        CHECK(sp.valid[i]);
        CHECK(sp.u_ho[i] >= sp.u_cl[i]);
    }

    // the breakdown point x1 = pi - Phi is flagged
    Eigen::VectorXd edge(1);
    edge << M_PI - 0.3;
    SnailParams pe = symmetric_params(1.0, 1.0, 0.1, 0.05, 0.02, 0.3);
    SinglePhase se = single_phase(pe, edge);
    CHECK_FALSE(se.valid[0]);

    // meaningless harmonic regime still returns the classical curve
    SnailParams ph = symmetric_params(1.0, 0.1, 0.1, 0.05, 2.0, 0.0);
    SinglePhase sh = single_phase(ph, x1);
    CHECK_FALSE(sh.harmonic_meaningful);
    CHECK(sh.u_ho[2] == sh.u_cl[2]);

    SnailParams asym = symmetric_params(1.0, 1.0, 0.1, 0.05, 0.02, 0.0);
    asym.k3 = 0.06;
    CHECK_THROWS_AS(single_phase(asym, x1), domain_error);
}

TEST_CASE("maclaurin equivalence behind the renormalization step") {
    double sup = 0.0;
    for (int i = 0; i <= 1000; ++i) {
        const double eps = -0.5 + i / 1000.0;
        sup = std::max(sup, std::abs(2.0 * std::sqrt(std::cos(eps)) - (std::cos(eps) + 1.0)));
    }
    CHECK(sup < 0.01);
}

TEST_CASE("small-capacitance limit recovers the bare shunting junction") {
    SnailParams p = symmetric_params(1.0, 1.0, 0.1, 1e-4, 1.0, 0.2);
    Eigen::VectorXd x1 = Eigen::VectorXd::LinSpaced(13, -M_PI, M_PI);
    SmallCapResult r = small_cap_limit(p, x1, 32);
    CHECK(r.sup_dev_from_bare < 0.01 * p.ej1);
    // effective charging energy of the parallel connection
    CHECK(r.d1ec == doctest::Approx(r.d1ec_parallel_estimate).epsilon(1e-3));

    // no slow potential when the shunting junction is absent: flat to first order
    SnailParams p0 = symmetric_params(1e-9, 1.0, 0.1, 1e-4, 1.0, 0.2);
    SmallCapResult r0 = small_cap_limit(p0, x1, 32);
    double spread = 0.0;
    for (int i = 0; i < x1.size(); ++i) spread = std::max(spread, std::abs(r0.ubo[i]));
    CHECK(spread < 1e-4);

    SnailParams bad = p;
    bad.nu2 = 0.3;
    CHECK_THROWS_AS(small_cap_limit(bad, x1, 32), domain_error);
}

TEST_CASE("harmonic curve beats the classical one in the transmon regime") {
    // E_C / (k2 E_J2) = 0.01
    SnailParams p = symmetric_params(50.0, 50.0, 0.1, 0.1, 0.05, 0.3);
    Eigen::VectorXd x1 = Eigen::VectorXd::LinSpaced(9, -1.8, 1.8);
    Comparison cmp = validate_2d(p, x1, 96);
    CHECK(cmp.harmonic_improves);
    CHECK(cmp.charge_vs_2d_rel < 1e-3);
    for (int i = 0; i < x1.size(); ++i) CHECK(cmp.fast_gap[i] > 0.0);
}

TEST_CASE("symmetric parameters at zero flux give even curves") {
    SnailParams p = symmetric_params(20.0, 20.0, 0.1, 0.1, 0.05, 0.0);
    Eigen::VectorXd x1 = Eigen::VectorXd::LinSpaced(9, -2.0, 2.0);
    Comparison cmp = validate_2d(p, x1, 96);
    for (int i = 0; i < 4; ++i) {
        CHECK(cmp.u_cl[i] == doctest::Approx(cmp.u_cl[8 - i]).epsilon(1e-10));
        CHECK(cmp.u_2d[i] == doctest::Approx(cmp.u_2d[8 - i]).epsilon(1e-7));
        CHECK(cmp.u_charge[i] == doctest::Approx(cmp.u_charge[8 - i]).epsilon(1e-7));
    }
}

TEST_CASE("parameter validation") {
    SnailParams p = symmetric_params(1.0, 1.0, 0.1, 0.1, 1.0, 0.0);
    p.ej2 = -1.0;
    CHECK_THROWS_AS(p.validate(), domain_error);
    SnailParams q = symmetric_params(1.0, 1.0, 0.1, 0.1, 1.0, 0.0);
    q.k2 = 0.0;
    CHECK_THROWS_AS(q.validate(), domain_error);
}
