// bath.hpp — Ohmic bath parameters and the scaling-limit correlation exponent Q(t)

#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "qra/errors.hpp"

namespace qra {

// Dimensionless bath description. Frequencies are in units of the bare
// tunneling splitting, temperature in units of that splitting as well
// (hbar = k_B = 1).
struct BathParams {
    double alpha{0.7};        // coupling strength
    double omega_c{10.0};     // high-frequency cutoff
    double temperature{0.2};

    void validate() const {
        if (!(alpha > 0.0)) throw domain_error("BathParams: alpha must be > 0");
        if (!(omega_c > 0.0)) throw domain_error("BathParams: omega_c must be > 0");
        if (!(temperature > 0.0)) throw domain_error("BathParams: temperature must be > 0");
    }

    // Soft regime-of-validity checks. Violations are reported, not rejected.
    std::vector<std::string> regime_warnings() const {
        std::vector<std::string> w;
        if (alpha <= 0.5)
            w.push_back("alpha <= 0.5: outside the strong-coupling incoherent regime");
        if (temperature > 0.1 * omega_c)
            w.push_back("temperature > 0.1*omega_c: scaling-limit Q(t) becomes inaccurate");
        return w;
    }
};

// Thermal frequency scale kappa = pi*T entering Q'(t).
inline double kappa(const BathParams& p) {
    p.validate();
    return std::numbers::pi * p.temperature;
}

struct BathExponent {
    double q_real;  // Q'(t), exponential suppression of the rate kernel
    double q_imag;  // Q''(t), oscillatory phase of the rate kernel
};

namespace detail {

// ln(sinh(x)/x) for x >= 0, stable at both ends: series near 0 (removable
// singularity), asymptotic form past the overflow threshold of sinh.
inline double log_sinhc(double x) {
    if (x < 1e-4) {
        const double x2 = x * x;
        return std::log1p(x2 / 6.0 * (1.0 + x2 / 20.0));
    }
    if (x > 350.0)
        return x - std::numbers::ln2 - std::log(x) + std::log1p(-std::exp(-2.0 * x));
    return std::log(std::sinh(x) / x);
}

} // namespace detail

// Real and imaginary part of the bath correlation exponent in the Ohmic
// scaling limit. Both vanish at t = 0; q_real grows ~ 2*alpha*kappa*t for
// large t, q_imag saturates at alpha*pi.
inline BathExponent correlation_exponent(double t, const BathParams& p) {
    p.validate();
    if (t < 0.0) throw domain_error("correlation_exponent: t must be >= 0");
    if (t == 0.0) return {0.0, 0.0};
    const double wt = p.omega_c * t;
    const double kt = std::numbers::pi * p.temperature * t;
    const double q_real = 2.0 * p.alpha * (0.5 * std::log1p(wt * wt) + detail::log_sinhc(kt));
    const double q_imag = 2.0 * p.alpha * std::atan(wt);
    return {q_real, q_imag};
}

// Ohmic spectral density with exponential cutoff. Diagnostic only; the rate
// kernels use Q(t) directly.
inline double spectral_density(double omega, const BathParams& p) {
    p.validate();
    if (omega < 0.0) throw domain_error("spectral_density: omega must be >= 0");
    return 2.0 * p.alpha * omega * std::exp(-omega / p.omega_c);
}

} // namespace qra
