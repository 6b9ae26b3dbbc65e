#include "doctest.h"

#include <cmath>
#include <random>

#include "qflow/errors.hpp"
#include "qflow/potential.hpp"

using namespace qflow;

TEST_CASE("potential_eval on the basic variants") {
    auto [v1, d1] = potential_eval(PotentialSpec(Cosine{1.0, 0.0}), 0.0);
    CHECK(v1 == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(d1 == doctest::Approx(0.0).epsilon(1e-14));

    auto [v2, d2] = potential_eval(PotentialSpec(PowerLaw{1.0, 4.0, true}), 2.0);
    CHECK(v2 == doctest::Approx(16.0).epsilon(1e-14));
    CHECK(d2 == doctest::Approx(32.0).epsilon(1e-14));

    auto [v3, d3] = potential_eval(PotentialSpec(Quadratic{2.0}), 3.0);
    CHECK(v3 == doctest::Approx(2.25).epsilon(1e-14));
    CHECK(d3 == doctest::Approx(1.5).epsilon(1e-14));
}

TEST_CASE("piecewise linear values and slopes") {
    PotentialSpec p(PiecewiseLinear{1.0, 2.0});
    CHECK(p.value(3.0) == doctest::Approx(12.0));  // b(1+a)|phi|
    CHECK(p.value(-3.0) == doctest::Approx(6.0));  // b|phi|
    CHECK(p.deriv(3.0) == doctest::Approx(4.0));
    CHECK(p.deriv(-3.0) == doctest::Approx(-2.0));
    CHECK(p.value(0.0) == 0.0);
}

TEST_CASE("asymmetric power law uses the sign convention") {
    PotentialSpec p(PowerLaw{2.0, 0.5, false});
    CHECK(p.value(4.0) == doctest::Approx(4.0));
    CHECK(p.value(-4.0) == doctest::Approx(-4.0));
    CHECK(p.deriv(4.0) == doctest::Approx(p.deriv(-4.0)));  // even derivative
}

TEST_CASE("sum distributes linearly") {
    PotentialSpec s = PotentialSpec::sum({PotentialSpec(Quadratic{2.0}), PotentialSpec(Cosine{1.0})});
    const double phi = 1.3;
    auto [v, d] = potential_eval(s, phi);
    CHECK(v == doctest::Approx(phi * phi / 4.0 - std::cos(phi)).epsilon(1e-14));
    CHECK(d == doctest::Approx(phi / 2.0 + std::sin(phi)).epsilon(1e-14));
}

TEST_CASE("symmetric variants are even at 100 random points") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> uni(-20.0, 20.0);
    std::vector<PotentialSpec> specs;
    specs.emplace_back(Quadratic{0.7});
    specs.emplace_back(Cosine{1.2});
    specs.emplace_back(PowerLaw{0.8, 1.5, true});
    specs.emplace_back(PiecewiseLinear{0.0, 0.9});
    specs.emplace_back(SelfSimilar{});
    specs.push_back(PotentialSpec::sum({PotentialSpec(Quadratic{2.0}), PotentialSpec(Cosine{0.3})}));
    for (const auto& s : specs) {
        REQUIRE(s.is_symmetric());
        for (int i = 0; i < 100; ++i) {
            const double x = uni(rng);
            CHECK(s.value(x) == doctest::Approx(s.value(-x)).epsilon(1e-12));
        }
    }
    CHECK_FALSE(PotentialSpec(PiecewiseLinear{0.5, 1.0}).is_symmetric());
    CHECK_FALSE(PotentialSpec(PowerLaw{1.0, 0.5, false}).is_symmetric());
    CHECK_FALSE(PotentialSpec(Cosine{1.0, 0.4}).is_symmetric());
}

TEST_CASE("reported derivative matches a central difference on smooth variants") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> uni(0.5, 6.0);
    std::vector<PotentialSpec> specs;
    specs.emplace_back(Quadratic{1.3});
    specs.emplace_back(Cosine{2.0, 0.3});
    specs.emplace_back(PowerLaw{1.1, 2.5, true});
    specs.emplace_back(SelfSimilar{});
    for (const auto& s : specs) {
        for (int i = 0; i < 40; ++i) {
            const double x = uni(rng);
            const double h = 1e-5 * std::max(1.0, std::abs(x));
            const double fd = (s.value(x + h) - s.value(x - h)) / (2.0 * h);
            const double scale = std::max(std::abs(fd), 1e-10);
            CHECK(std::abs(s.deriv(x) - fd) / scale < 1e-6);
        }
    }
}

TEST_CASE("self-similar form satisfies its scaling identity") {
    PotentialSpec s{SelfSimilar{}};
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> uni(-3.0, 3.0);
    for (int i = 0; i < 1000; ++i) {
        const double y = std::pow(10.0, uni(rng)) * (i % 2 ? 1.0 : -1.0);
        const double lhs = s.value(100.0 * y);
        const double rhs = 1e4 * s.value(y);
        CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(std::abs(rhs), 1.0));
    }
    for (double y : {0.1, 1.0, 10.0, 100.0}) {  // C1 across piece boundaries
        const double h = 1e-7 * y;
        CHECK(s.value(y - h) == doctest::Approx(s.value(y + h)).epsilon(1e-6));
        CHECK(s.deriv(y - h) == doctest::Approx(s.deriv(y + h)).epsilon(1e-4));
    }
}

TEST_CASE("tabulated interpolation is C1 inside and errors outside") {
    std::vector<double> xs, us;
    for (int i = 0; i <= 64; ++i) {
        const double x = -3.0 + 6.0 * i / 64.0;
        xs.push_back(x);
        us.push_back(x * x / 2.0);
    }
    PotentialSpec t = PotentialSpec::tabulated(xs, us);
    for (double x : {-2.7, -0.4, 0.9, 2.99}) {
        CHECK(t.value(x) == doctest::Approx(x * x / 2.0).epsilon(1e-3));
        CHECK(t.deriv(x) == doctest::Approx(x).epsilon(2e-2));
    }
    CHECK_THROWS_AS(t.value(3.5), domain_error);
    CHECK_THROWS_AS(t.value(-3.5), domain_error);
}

TEST_CASE("invariant violations are rejected") {
    CHECK_THROWS_AS(PotentialSpec(Quadratic{-1.0}), domain_error);
    CHECK_THROWS_AS(PotentialSpec(Quadratic{0.0}), domain_error);
    CHECK_THROWS_AS(PotentialSpec(Cosine{-2.0}), domain_error);
    CHECK_THROWS_AS(PotentialSpec(PowerLaw{-1.0, 2.0, true}), domain_error);
    CHECK_THROWS_AS(PotentialSpec(PowerLaw{1.0, -2.0, true}), domain_error);
    CHECK_THROWS_AS(PotentialSpec(PiecewiseLinear{-0.5, 1.0}), domain_error);
    CHECK_THROWS_AS(PotentialSpec(PiecewiseLinear{0.5, 0.0}), domain_error);
    CHECK_THROWS_AS(potential_eval(PotentialSpec(Quadratic{1.0}), NAN), domain_error);
}

TEST_CASE("JSON wire form round-trips") {
    std::vector<PotentialSpec> specs;
    specs.emplace_back(Quadratic{0.37});
    specs.emplace_back(Cosine{1.25, -0.3});
    specs.emplace_back(PowerLaw{0.4, 1.5, false});
    specs.emplace_back(PiecewiseLinear{0.2, 3.0});
    specs.emplace_back(SelfSimilar{});
    specs.push_back(PotentialSpec::sum({PotentialSpec(Quadratic{2.0}), PotentialSpec(Cosine{1.0})}));
    specs.push_back(PotentialSpec::tabulated({-1.0, 0.0, 1.0}, {0.5, 0.0, 0.5}));
    for (const auto& s : specs) {
        PotentialSpec back = potential_from_json(potential_to_json(s));
        CHECK(potential_to_json(back) == potential_to_json(s));
        for (double x : {-0.9, 0.1, 0.8}) {
            CHECK(back.value(x) == doctest::Approx(s.value(x)).epsilon(1e-14));
        }
    }
    CHECK_THROWS_AS(potential_from_json("{\"variant\":\"nope\"}"), domain_error);
    CHECK_THROWS_AS(potential_from_json("not json"), domain_error);
}
