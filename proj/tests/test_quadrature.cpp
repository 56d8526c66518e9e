#include "catch_amalgamated.hpp"

#include <cmath>
#include <numbers>

#include "qra/quadrature.hpp"

using namespace qra;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("adaptive panels on smooth integrands", "[quadrature]") {
    auto sq = [](double x) { return x * x; };
    CHECK_THAT(integrate_adaptive(sq, 0.0, 1.0, 1e-12, 1e-12).value, WithinAbs(1.0 / 3.0, 1e-13));

    auto s = [](double x) { return std::sin(x); };
    CHECK_THAT(integrate_adaptive(s, 0.0, std::numbers::pi, 1e-12, 1e-12).value,
               WithinAbs(2.0, 1e-12));

    CHECK(integrate_adaptive(sq, 2.0, 2.0, 1e-12, 1e-12).value == 0.0);
    CHECK_THROWS_AS(integrate_adaptive(sq, 1.0, 0.0, 1e-12, 1e-12), domain_error);
}

TEST_CASE("decaying oscillatory integrand", "[quadrature]") {
    // int_0^inf e^{-x} cos(3x) dx = 1/10
    auto f = [](double x) { return std::exp(-x) * std::cos(3.0 * x); };
    const auto r = integrate_adaptive(f, 0.0, 60.0, 1e-13, 1e-12);
    CHECK_THAT(r.value, WithinAbs(0.1, 1e-11));
    CHECK(r.error < 1e-10);
}

TEST_CASE("breakpoints seed the panel set", "[quadrature]") {
    auto kink = [](double x) { return std::abs(x - 0.3); };
    const double exact = 0.5 * (0.3 * 0.3 + 0.7 * 0.7);
    const double bp[] = {0.3};
    const auto with = integrate_adaptive(kink, 0.0, 1.0, 1e-14, 1e-13, bp);
    CHECK_THAT(with.value, WithinAbs(exact, 1e-13));
    // also converges without the hint, just with more panels
    const auto without = integrate_adaptive(kink, 0.0, 1.0, 1e-14, 1e-13);
    CHECK_THAT(without.value, WithinAbs(exact, 1e-10));
    CHECK(with.panels <= without.panels);
}

TEST_CASE("panel budget exhaustion reports the error estimate", "[quadrature]") {
    auto nasty = [](double x) { return std::sin(1e7 * x); };
    try {
        integrate_adaptive(nasty, 0.0, 1.0, 1e-14, 1e-14, {}, 64);
        FAIL("expected numerical_error");
    } catch (const numerical_error& e) {
        CHECK(e.error_estimate() > 0.0);
    }
}

TEST_CASE("bracketed bisection", "[quadrature]") {
    auto f = [](double x) { return std::cos(x); };
    CHECK_THAT(bisect(f, 0.0, 2.0, 1e-12), WithinRel(std::numbers::pi / 2.0, 1e-11));

    auto g = [](double x) { return x * x - 2.0; };
    CHECK_THAT(bisect(g, 0.0, 2.0, 1e-12), WithinRel(std::sqrt(2.0), 1e-11));

    CHECK_THROWS_AS(bisect([](double) { return 1.0; }, 0.0, 1.0), numerical_error);
    CHECK_THROWS_AS(bisect(g, 2.0, 1.0), domain_error);
}

TEST_CASE("quadrature config validation", "[quadrature]") {
    QuadratureConfig ok;
    CHECK_NOTHROW(ok.validate());
    QuadratureConfig bad;
    bad.rel_tol = 0.0;
    CHECK_THROWS_AS(bad.validate(), domain_error);
}
