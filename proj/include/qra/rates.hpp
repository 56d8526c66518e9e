// rates.hpp — golden-rule transition rates: static coefficients, driven rates,
// noise-component rates, and periodic rate caches

#pragma once

#include <atomic>
#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include "qra/bath.hpp"
#include "qra/errors.hpp"
#include "qra/interp.hpp"
#include "qra/modulation.hpp"
#include "qra/quadrature.hpp"

namespace qra {

enum class RateDirection { Forward, Backward };
enum class RateMode { Stationary, Improved };

// Truncation point of the memory integrals: smallest tau with
// nu*tau + Q'(tau) >= -ln(tail_cut). Q' is monotone, so bisection is safe.
inline double decay_cutoff(double nu, const BathParams& bath, double tail_cut) {
    bath.validate();
    if (nu < 0.0) throw domain_error("decay_cutoff: nu must be >= 0");
    if (!(tail_cut > 0.0 && tail_cut < 1.0))
        throw domain_error("decay_cutoff: tail_cut must be in (0, 1)");
    const double level = -std::log(tail_cut);
    auto envelope_gap = [&](double tau) {
        return nu * tau + correlation_exponent(tau, bath).q_real - level;
    };
    double hi = 1.0;
    while (envelope_gap(hi) < 0.0) {
        hi *= 2.0;
        if (hi > 1e12) throw numerical_error("decay_cutoff: envelope never reaches tail_cut");
    }
    return bisect(envelope_gap, 0.0, hi, 1e-9);
}

namespace detail {

// Initial panel edges for the memory quadratures: resolve the kernel's short-time
// structure, any exp(-nu*tau) boundary layer, and cap panels at half the period
// of the fastest active drive oscillation.
inline std::vector<double> rate_breakpoints(double upper, const BathParams& bath, double nu,
                                            double max_drive_frequency) {
    std::vector<double> b;
    auto add = [&](double x) {
        if (x > 0.0 && x < upper) b.push_back(x);
    };
    add(0.5 / bath.omega_c);
    add(2.0 / bath.omega_c);
    add(8.0 / bath.omega_c);
    add(1.0 / (std::numbers::pi * bath.temperature));
    if (nu > 0.0) {
        add(1.0 / nu);
        add(4.0 / nu);
    }
    if (max_drive_frequency > 0.0) {
        double step = std::numbers::pi / max_drive_frequency;
        const double min_step = upper / 4096.0;
        if (step < min_step) step = min_step;
        for (double x = step; x < upper; x += step) b.push_back(x);
    }
    return b;
}

} // namespace detail

// Static-configuration rate coefficient: half the Laplace-weighted cosine
// transform of the bath kernel, 0.5 * int_0^inf exp(-nu*tau - Q') cos(Q'') dtau.
inline double a_nu(double nu, const BathParams& bath, const QuadratureConfig& cfg = {}) {
    bath.validate();
    cfg.validate();
    if (nu < 0.0) throw domain_error("a_nu: nu must be >= 0");
    const double tau_max = decay_cutoff(nu, bath, cfg.tail_cut);
    auto f = [&](double tau) {
        const auto q = correlation_exponent(tau, bath);
        return std::exp(-nu * tau - q.q_real) * std::cos(q.q_imag);
    };
    const auto bps = detail::rate_breakpoints(tau_max, bath, nu, 0.0);
    const auto r = integrate_adaptive(f, 0.0, tau_max, cfg.abs_tol, cfg.rel_tol, bps);
    return 0.5 * r.value;
}

// Time-dependent forward/backward rate for a deterministic (static or periodic)
// tunneling element and optional periodic bias. Stationary mode integrates the
// full memory window; improved mode stops the memory at the elapsed time t.
inline double transition_rate(double t, RateDirection dir, RateMode mode,
                              const TunnelingModulation& mod, const BiasModulation& bias,
                              const BathParams& bath, const QuadratureConfig& cfg = {}) {
    bath.validate();
    cfg.validate();
    mod.validate();
    bias.validate();
    if (t < 0.0) throw domain_error("transition_rate: t must be >= 0");
    if (mod.kind == TunnelingModulation::Kind::Dichotomous)
        throw usage_error("transition_rate: dichotomous modulation uses noise_component_rate");

    const double tau_max = decay_cutoff(0.0, bath, cfg.tail_cut);
    const double upper = (mode == RateMode::Improved) ? std::min(t, tau_max) : tau_max;
    if (upper <= 0.0) return 0.0;

    const double zeta_sign = (dir == RateDirection::Forward) ? -1.0 : 1.0;
    auto f = [&](double tau) {
        const auto q = correlation_exponent(tau, bath);
        const double z = zeta(t, t - tau, bias);
        return tunneling_value(t - tau, mod) * std::exp(-q.q_real)
               * std::cos(q.q_imag + zeta_sign * z);
    };
    double osc = 0.0;
    if (mod.kind == TunnelingModulation::Kind::Periodic) osc = mod.frequency;
    if (bias.kind == BiasModulation::Kind::Periodic) osc = std::max(osc, bias.frequency);
    const auto bps = detail::rate_breakpoints(upper, bath, 0.0, osc);
    const auto r = integrate_adaptive(f, 0.0, upper, cfg.abs_tol, cfg.rel_tol, bps);
    return 0.5 * tunneling_value(t, mod) * r.value;
}

// Component rates of the noise-averaged dynamics for a dichotomous tunneling
// element: index 0 multiplies the averaged population, index 1 the
// noise-population correlator. Forward convention; `backward` flips the sign
// of the bias phase.
inline double noise_component_rate(double t, int index, RateMode mode,
                                   const TunnelingModulation& mod, const BiasModulation& bias,
                                   const BathParams& bath, const QuadratureConfig& cfg = {},
                                   RateDirection dir = RateDirection::Forward) {
    bath.validate();
    cfg.validate();
    mod.validate();
    bias.validate();
    if (t < 0.0) throw domain_error("noise_component_rate: t must be >= 0");
    if (mod.kind != TunnelingModulation::Kind::Dichotomous)
        throw usage_error("noise_component_rate: requires dichotomous modulation");
    if (index != 0 && index != 1)
        throw usage_error("noise_component_rate: index must be 0 or 1");

    const double nu = mod.switch_rate;
    const double amp = mod.amplitude;
    const double tau_max = decay_cutoff(0.0, bath, cfg.tail_cut);
    const double upper = (mode == RateMode::Improved) ? std::min(t, tau_max) : tau_max;
    if (upper <= 0.0) return 0.0;

    const double zeta_sign = (dir == RateDirection::Forward) ? -1.0 : 1.0;
    auto f = [&](double tau) {
        const auto q = correlation_exponent(tau, bath);
        const double z = zeta(t, t - tau, bias);
        const double decay = std::exp(-nu * tau);
        const double s = (index == 0) ? delta0 * delta0 + amp * amp * decay
                                      : delta0 * amp * (1.0 + decay);
        return s * std::exp(-q.q_real) * std::cos(q.q_imag + zeta_sign * z);
    };
    const double osc = (bias.kind == BiasModulation::Kind::Periodic) ? bias.frequency : 0.0;
    const auto bps = detail::rate_breakpoints(upper, bath, nu, osc);
    const auto r = integrate_adaptive(f, 0.0, upper, cfg.abs_tol, cfg.rel_tol, bps);
    return 0.5 * r.value;
}

// Evaluable rate bound to one configuration. Pure after construction; an
// optional periodic cache replaces the quadrature for exactly periodic
// (stationary-mode) rates. Tiny negative excursions within quadrature
// tolerance are clamped to zero and counted.
class RateFunction {
public:
    static RateFunction deterministic(RateDirection dir, RateMode mode, TunnelingModulation mod,
                                      BiasModulation bias, BathParams bath,
                                      QuadratureConfig cfg = {}) {
        if (mod.kind == TunnelingModulation::Kind::Dichotomous)
            throw usage_error("RateFunction::deterministic: dichotomous modulation not allowed");
        return RateFunction(dir, mode, std::move(mod), std::move(bias), std::move(bath), cfg, -1);
    }

    static RateFunction noise_component(int index, RateMode mode, TunnelingModulation mod,
                                        BiasModulation bias, BathParams bath,
                                        QuadratureConfig cfg = {},
                                        RateDirection dir = RateDirection::Forward) {
        if (mod.kind != TunnelingModulation::Kind::Dichotomous)
            throw usage_error("RateFunction::noise_component: requires dichotomous modulation");
        if (index != 0 && index != 1)
            throw usage_error("RateFunction::noise_component: index must be 0 or 1");
        return RateFunction(dir, mode, std::move(mod), std::move(bias), std::move(bath), cfg, index);
    }

    double operator()(double t) const {
        double v;
        if (cache_constant_)
            v = constant_value_;
        else if (cache_)
            v = (*cache_)(t + cache_shift_);
        else
            v = raw(t);
        if (v < 0.0) {
            if (v < -cfg_.abs_tol)
                throw numerical_error("RateFunction: negative rate beyond tolerance", v);
            clamps_->fetch_add(1, std::memory_order_relaxed);
            v = 0.0;
        }
        return v;
    }

    // Direct quadrature evaluation, bypassing any cache and clamping.
    double raw(double t) const {
        if (noise_index_ < 0) return transition_rate(t, dir_, mode_, mod_, bias_, bath_, cfg_);
        return noise_component_rate(t, noise_index_, mode_, mod_, bias_, bath_, cfg_, dir_);
    }

    // Exactly periodic: stationary mode with exactly one periodic component.
    bool is_periodic() const {
        if (mode_ != RateMode::Stationary) return false;
        const bool pm = mod_.kind == TunnelingModulation::Kind::Periodic;
        const bool pb = bias_.kind == BiasModulation::Kind::Periodic;
        return pm != pb;
    }

    // Time-independent: stationary mode with no periodic component.
    bool is_constant() const {
        return mode_ == RateMode::Stationary
               && mod_.kind != TunnelingModulation::Kind::Periodic
               && bias_.kind == BiasModulation::Kind::Zero;
    }

    double period() const {
        if (!is_periodic()) throw usage_error("RateFunction::period: rate is not periodic");
        return mod_.kind == TunnelingModulation::Kind::Periodic ? mod_.period() : bias_.period();
    }

    double drive_frequency() const {
        if (mod_.kind == TunnelingModulation::Kind::Periodic) return mod_.frequency;
        if (bias_.kind == BiasModulation::Kind::Periodic) return bias_.frequency;
        throw usage_error("RateFunction::drive_frequency: no periodic component");
    }

    // Same configuration with the drive phase replaced. A shared periodic cache
    // is reused through an exact time shift.
    RateFunction with_phase(double phi) const {
        RateFunction r = *this;
        double old_phase = 0.0, frequency = 0.0;
        if (mod_.kind == TunnelingModulation::Kind::Periodic) {
            old_phase = mod_.phase;
            frequency = mod_.frequency;
            r.mod_.phase = phi;
        }
        if (bias_.kind == BiasModulation::Kind::Periodic) {
            old_phase = bias_.phase;
            frequency = bias_.frequency;
            r.bias_.phase = phi;
        }
        if (frequency == 0.0) return r;  // no periodic component: phase is inert
        if (r.cache_) r.cache_shift_ += (phi - old_phase) / frequency;
        return r;
    }

    double memory_time() const { return tau_max_; }
    long clamp_count() const { return clamps_->load(std::memory_order_relaxed); }
    bool cached() const { return cache_ != nullptr || cache_constant_; }

    RateDirection direction() const { return dir_; }
    RateMode mode() const { return mode_; }
    const TunnelingModulation& tunneling() const { return mod_; }
    const BiasModulation& bias() const { return bias_; }
    const BathParams& bath() const { return bath_; }
    const QuadratureConfig& quadrature() const { return cfg_; }

    friend RateFunction build_periodic_cache(const RateFunction& rate,
                                             std::size_t samples_per_period);

private:
    RateFunction(RateDirection dir, RateMode mode, TunnelingModulation mod, BiasModulation bias,
                 BathParams bath, QuadratureConfig cfg, int noise_index)
        : dir_(dir), mode_(mode), mod_(std::move(mod)), bias_(std::move(bias)),
          bath_(std::move(bath)), cfg_(cfg), noise_index_(noise_index) {
        bath_.validate();
        cfg_.validate();
        mod_.validate();
        bias_.validate();
        tau_max_ = decay_cutoff(0.0, bath_, cfg_.tail_cut);
    }

    RateDirection dir_;
    RateMode mode_;
    TunnelingModulation mod_;
    BiasModulation bias_;
    BathParams bath_;
    QuadratureConfig cfg_;
    int noise_index_;
    double tau_max_{0.0};
    std::shared_ptr<const PeriodicSpline> cache_;
    double cache_shift_{0.0};
    bool cache_constant_{false};
    double constant_value_{0.0};
    std::shared_ptr<std::atomic<long>> clamps_{std::make_shared<std::atomic<long>>(0)};
};

// Dense-sample the rate over one period and attach a periodic spline. The
// sample count doubles until off-grid probes match direct quadrature to the
// configured relative tolerance. Constant configurations become an exact
// single-value cache.
inline RateFunction build_periodic_cache(const RateFunction& rate,
                                         std::size_t samples_per_period = 512) {
    if (rate.mode_ != RateMode::Stationary)
        throw usage_error("build_periodic_cache: improved-mode rates are not periodic");
    if (rate.is_constant()) {
        RateFunction r = rate;
        r.cache_constant_ = true;
        r.constant_value_ = rate.raw(0.0);
        return r;
    }
    if (!rate.is_periodic())
        throw usage_error("build_periodic_cache: rate is not exactly periodic");
    if (samples_per_period < 16)
        throw domain_error("build_periodic_cache: need at least 16 samples per period");

    const double period = rate.period();
    for (std::size_t n = samples_per_period; n <= 16384; n *= 2) {
        std::vector<double> samples(n);
        double scale = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            samples[j] = rate.raw(period * static_cast<double>(j) / static_cast<double>(n));
            scale = std::max(scale, std::abs(samples[j]));
        }
        auto spline = std::make_shared<const PeriodicSpline>(std::move(samples), period);
        const double h = period / static_cast<double>(n);
        const double tol = std::max(rate.cfg_.rel_tol * scale, 10.0 * rate.cfg_.abs_tol);
        bool ok = true;
        for (std::size_t j : {n / 7, n / 3, n / 2, (4 * n) / 5, n - 1}) {
            const double probe = (static_cast<double>(j) + 0.5) * h;
            if (std::abs((*spline)(probe) - rate.raw(probe)) > tol) {
                ok = false;
                break;
            }
        }
        if (ok) {
            RateFunction r = rate;
            r.cache_ = spline;
            r.cache_shift_ = 0.0;
            return r;
        }
    }
    throw numerical_error("build_periodic_cache: interpolation tolerance not reached");
}

// Callable that evaluates the improved (finite-memory) rate during the
// transient t < tau_max and the cached stationary rate afterwards, where the
// two coincide to truncation accuracy.
class TransientRate {
public:
    TransientRate(RateFunction improved, RateFunction stationary_cached)
        : improved_(std::move(improved)), stationary_(std::move(stationary_cached)) {
        if (improved_.mode() != RateMode::Improved)
            throw usage_error("TransientRate: first argument must be an improved-mode rate");
    }

    double operator()(double t) const {
        return t < improved_.memory_time() ? improved_(t) : stationary_(t);
    }

    const RateFunction& improved() const { return improved_; }
    const RateFunction& stationary() const { return stationary_; }

private:
    RateFunction improved_;
    RateFunction stationary_;
};

} // namespace qra
