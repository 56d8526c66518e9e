#include "catch_amalgamated.hpp"

#include <cmath>

#include "qra/rates.hpp"
#include "riemann_oracle.hpp"

using namespace qra;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const BathParams ref_bath{0.7, 10.0, 0.2};
const QuadratureConfig quad{};

// bath kernel used by the independent oracles
double kernel(double tau) {
    const auto q = correlation_exponent(tau, ref_bath);
    return std::exp(-q.q_real) * std::cos(q.q_imag);
}

} // namespace

TEST_CASE("memory cutoff", "[rates]") {
    const double tm = decay_cutoff(0.0, ref_bath, 1e-12);
    const double level = correlation_exponent(tm, ref_bath).q_real;
    CHECK_THAT(level, WithinRel(-std::log(1e-12), 1e-6));
    // a Laplace weight moves the cutoff inward
    CHECK(decay_cutoff(1.0, ref_bath, 1e-12) < tm);
    CHECK_THROWS_AS(decay_cutoff(-1.0, ref_bath, 1e-12), domain_error);
}

TEST_CASE("static rate coefficient reference values", "[rates][reference]") {
    const double a0 = a_nu(0.0, ref_bath, quad);
    const double at = a_nu(0.06, ref_bath, quad);
    CHECK_THAT(a0, WithinRel(1.985e-2, 5e-3));
    CHECK_THAT(at, WithinRel(2.102e-2, 5e-3));
    // frozen 40-digit evaluations of the defining integral
    CHECK_THAT(a0, WithinRel(0.0198527361906253, 1e-8));
    CHECK_THAT(at, WithinRel(0.0210209030039164, 1e-8));
    CHECK_THAT(a_nu(0.3, ref_bath, quad), WithinRel(0.0244673114137725, 1e-8));
}

TEST_CASE("static rate coefficient against brute-force oracle", "[rates]") {
    auto oracle = [&](double nu) {
        return 0.5 * qra_test::simpson([&](double tau) { return std::exp(-nu * tau) * kernel(tau); },
                                       0.0, 60.0, 1 << 19);
    };
    for (double nu : {0.0, 0.06, 0.3, 2.0})
        CHECK_THAT(a_nu(nu, ref_bath, quad), WithinRel(oracle(nu), 1e-7));

    // strong Laplace suppression; the whole integral lives in a boundary layer
    const double tiny = a_nu(1e4, ref_bath, quad);
    CHECK(tiny > 0.0);
    CHECK(tiny < 1e-3);
    CHECK(a_nu(1e5, ref_bath, quad) < tiny);
    const double crude = 0.5
                         * qra_test::riemann(
                               [&](double tau) { return std::exp(-1e4 * tau) * kernel(tau); },
                               0.0, 0.05, 1 << 22);
    CHECK_THAT(tiny, WithinRel(crude, 1e-5));
}

TEST_CASE("rate coefficient varies smoothly with the switching rate", "[rates]") {
    const double nu = 0.3, h = 1e-3;
    const double fd = (a_nu(nu + h, ref_bath, quad) - a_nu(nu - h, ref_bath, quad)) / (2.0 * h);
    const double tau_max = decay_cutoff(nu, ref_bath, quad.tail_cut);
    const double deriv = -0.5
                         * integrate_adaptive(
                               [&](double tau) { return tau * std::exp(-nu * tau) * kernel(tau); },
                               0.0, tau_max, 1e-12, 1e-10)
                               .value;
    CHECK_THAT(fd, WithinRel(deriv, 1e-4));
}

TEST_CASE("deterministic transition rate", "[rates]") {
    const auto statics = TunnelingModulation::make_static();
    const auto zero = BiasModulation::zero();
    const double a0 = a_nu(0.0, ref_bath, quad);

    for (double t : {0.0, 5.5, 123.0})
        CHECK_THAT(transition_rate(t, RateDirection::Forward, RateMode::Stationary, statics, zero,
                                   ref_bath, quad),
                   WithinRel(a0, 1e-8));

    // improved mode starts from an empty memory window
    CHECK(transition_rate(0.0, RateDirection::Forward, RateMode::Improved, statics, zero,
                          ref_bath, quad)
          == 0.0);

    // zero bias makes forward and backward identical
    const auto drive = TunnelingModulation::periodic(0.3, 0.1, 0.0);
    for (double t : {0.0, 13.0, 40.0}) {
        const double fw = transition_rate(t, RateDirection::Forward, RateMode::Stationary, drive,
                                          zero, ref_bath, quad);
        const double bw = transition_rate(t, RateDirection::Backward, RateMode::Stationary, drive,
                                          zero, ref_bath, quad);
        CHECK_THAT(fw, WithinAbs(bw, 1e-13));
    }

    CHECK_THROWS_AS(transition_rate(-1.0, RateDirection::Forward, RateMode::Stationary, statics,
                                    zero, ref_bath, quad),
                    domain_error);
    CHECK_THROWS_AS(transition_rate(1.0, RateDirection::Forward, RateMode::Stationary,
                                    TunnelingModulation::dichotomous(0.3, 0.3), zero, ref_bath,
                                    quad),
                    usage_error);
}

TEST_CASE("bias sign flip swaps forward and backward", "[rates]") {
    const auto statics = TunnelingModulation::make_static();
    const auto bias = BiasModulation::periodic(0.3, 0.1, 0.4);
    auto flipped = bias;
    flipped.phase += std::numbers::pi;
    for (double t : {0.7, 12.0, 55.0}) {
        const double fw_flip = transition_rate(t, RateDirection::Forward, RateMode::Stationary,
                                               statics, flipped, ref_bath, quad);
        const double bw = transition_rate(t, RateDirection::Backward, RateMode::Stationary,
                                          statics, bias, ref_bath, quad);
        CHECK_THAT(fw_flip, WithinAbs(bw, 1e-12));
    }
}

TEST_CASE("noise component rates", "[rates]") {
    const auto zero = BiasModulation::zero();
    const double a0 = a_nu(0.0, ref_bath, quad);

    // vanishing amplitude kills the correlator channel
    const auto no_noise = TunnelingModulation::dichotomous(0.0, 0.3);
    CHECK(noise_component_rate(3.0, 1, RateMode::Stationary, no_noise, zero, ref_bath, quad)
          == 0.0);
    CHECK_THAT(noise_component_rate(3.0, 0, RateMode::Stationary, no_noise, zero, ref_bath, quad),
               WithinRel(a0, 1e-8));

    // zero-bias stationary values equal the static coefficient combinations
    const auto noise = TunnelingModulation::dichotomous(0.3, 0.3);
    const double an = a_nu(0.3, ref_bath, quad);
    const double w0 = noise_component_rate(7.0, 0, RateMode::Stationary, noise, zero, ref_bath,
                                           quad);
    const double w1 = noise_component_rate(7.0, 1, RateMode::Stationary, noise, zero, ref_bath,
                                           quad);
    CHECK_THAT(w0, WithinRel(a0 + 0.09 * an, 1e-8));
    CHECK_THAT(w1, WithinRel(0.3 * (a0 + an), 1e-8));

    // brute-force oracle to six significant digits
    auto s_kernel = [&](int index) {
        return [index](double tau) {
            const double decay = std::exp(-0.3 * tau);
            const double s = index == 0 ? 1.0 + 0.09 * decay : 0.3 * (1.0 + decay);
            return 0.5 * s * kernel(tau);
        };
    };
    CHECK_THAT(w0, WithinRel(qra_test::simpson(s_kernel(0), 0.0, 60.0, 1 << 19), 1e-6));
    CHECK_THAT(w1, WithinRel(qra_test::simpson(s_kernel(1), 0.0, 60.0, 1 << 19), 1e-6));

    CHECK_THROWS_AS(noise_component_rate(1.0, 2, RateMode::Stationary, noise, zero, ref_bath,
                                         quad),
                    usage_error);
    CHECK_THROWS_AS(noise_component_rate(1.0, 0, RateMode::Stationary,
                                         TunnelingModulation::make_static(), zero, ref_bath,
                                         quad),
                    usage_error);
}

TEST_CASE("stationary and improved modes agree past the memory time", "[rates]") {
    const auto drive = TunnelingModulation::periodic(0.3, 0.1, 0.0);
    const auto zero = BiasModulation::zero();
    const double tau_max = decay_cutoff(0.0, ref_bath, quad.tail_cut);
    for (double t : {tau_max + 1.0, 2.0 * tau_max, 100.0}) {
        const double st = transition_rate(t, RateDirection::Forward, RateMode::Stationary, drive,
                                          zero, ref_bath, quad);
        const double im = transition_rate(t, RateDirection::Forward, RateMode::Improved, drive,
                                          zero, ref_bath, quad);
        CHECK_THAT(im, WithinAbs(st, 10.0 * quad.abs_tol));
    }
}

TEST_CASE("rate function periodicity and positivity", "[rates]") {
    const auto bias = BiasModulation::periodic(0.3, 0.1, 0.0);
    auto rate = RateFunction::deterministic(RateDirection::Forward, RateMode::Stationary,
                                            TunnelingModulation::make_static(), bias, ref_bath,
                                            quad);
    const double tp = rate.period();
    for (double t : {0.0, 3.7, 19.0}) {
        CHECK_THAT(rate.raw(t + tp), WithinAbs(rate.raw(t), 10.0 * quad.abs_tol));
        CHECK(rate.raw(t) > 0.0);
    }
    CHECK(rate.clamp_count() == 0);

    // stationary forward rates stay positive across the studied configurations
    for (double t : {0.0, 10.0, 31.0}) {
        CHECK(transition_rate(t, RateDirection::Forward, RateMode::Stationary,
                              TunnelingModulation::periodic(0.3, 0.1, 0.0), BiasModulation::zero(),
                              ref_bath, quad)
              > 0.0);
        CHECK(noise_component_rate(t, 0, RateMode::Stationary,
                                   TunnelingModulation::dichotomous(0.3, 0.3), bias, ref_bath,
                                   quad)
              > 0.0);
    }
}

TEST_CASE("periodic cache accuracy", "[rates]") {
    const auto zero = BiasModulation::zero();

    // constant configuration: exact single-value cache
    auto statics = RateFunction::deterministic(RateDirection::Forward, RateMode::Stationary,
                                               TunnelingModulation::make_static(), zero,
                                               ref_bath, quad);
    auto cached_const = build_periodic_cache(statics);
    CHECK(cached_const.cached());
    for (double t : {0.0, 11.0, 500.0}) CHECK(cached_const(t) == cached_const(0.0));
    CHECK_THAT(cached_const(0.0), WithinRel(statics.raw(0.0), 1e-12));

    // periodic bias: half-sample probes match direct quadrature
    auto biased = RateFunction::deterministic(RateDirection::Forward, RateMode::Stationary,
                                              TunnelingModulation::make_static(),
                                              BiasModulation::periodic(0.3, 0.1, 0.0), ref_bath,
                                              quad);
    auto cached = build_periodic_cache(biased, 512);
    const double tp = cached.period();
    for (double frac : {0.131, 0.377, 0.5009, 0.871}) {
        const double t = frac * tp + tp / 1024.0;
        CHECK_THAT(cached(t), WithinAbs(biased.raw(t), 1e-8));
    }
    // periodic indexing
    for (double t : {0.25 * tp, 0.75 * tp})
        CHECK_THAT(cached(t + tp), WithinAbs(cached(t), 1e-12));

    // cache misuse
    auto improved = RateFunction::deterministic(RateDirection::Forward, RateMode::Improved,
                                                TunnelingModulation::make_static(), zero,
                                                ref_bath, quad);
    CHECK_THROWS_AS(build_periodic_cache(improved), usage_error);
}

TEST_CASE("phase shifts reuse the cache exactly", "[rates]") {
    auto rate = RateFunction::deterministic(RateDirection::Forward, RateMode::Stationary,
                                            TunnelingModulation::periodic(0.3, 0.1, 0.0),
                                            BiasModulation::zero(), ref_bath, quad);
    auto cached = build_periodic_cache(rate, 512);
    const double phi = 1.1;
    auto shifted = cached.with_phase(phi);
    CHECK(shifted.cached());
    auto direct = rate.with_phase(phi);
    for (double t : {0.0, 7.3, 44.0})
        CHECK_THAT(shifted(t), WithinAbs(direct.raw(t), 1e-7));
}

TEST_CASE("transient evaluator splices improved and cached stationary rates", "[rates]") {
    const auto drive = TunnelingModulation::periodic(0.2, 0.5, 0.0);
    const auto zero = BiasModulation::zero();
    auto imp = RateFunction::deterministic(RateDirection::Forward, RateMode::Improved, drive, zero,
                                           ref_bath, quad);
    auto stat = build_periodic_cache(RateFunction::deterministic(
        RateDirection::Forward, RateMode::Stationary, drive, zero, ref_bath, quad));
    const TransientRate hybrid(imp, stat);
    CHECK(hybrid(0.0) == 0.0);
    const double tau_max = imp.memory_time();
    CHECK_THAT(hybrid(tau_max + 5.0), WithinAbs(stat(tau_max + 5.0), 1e-12));
    CHECK_THAT(hybrid(0.5 * tau_max), WithinAbs(imp(0.5 * tau_max), 1e-12));
    CHECK_THROWS_AS(TransientRate(stat, stat), usage_error);
}
