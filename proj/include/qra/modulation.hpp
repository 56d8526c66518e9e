// modulation.hpp — driving/noise configurations for the tunneling element and the bias

#pragma once

#include <cmath>
#include <numbers>
#include <optional>

#include "qra/errors.hpp"

namespace qra {

// Bare tunneling element; the unit of frequency throughout.
inline constexpr double delta0 = 1.0;

struct TunnelingModulation {
    enum class Kind { Static, Periodic, Dichotomous };

    Kind kind{Kind::Static};
    double amplitude{0.0};    // A_d (periodic) or noise amplitude (dichotomous)
    double frequency{0.0};    // angular drive frequency (periodic)
    double phase{0.0};        // initial drive phase (periodic)
    double switch_rate{0.0};  // Poisson switching rate nu (dichotomous)

    static TunnelingModulation make_static() { return {}; }

    static TunnelingModulation periodic(double amplitude, double frequency, double phase = 0.0) {
        TunnelingModulation m;
        m.kind = Kind::Periodic;
        m.amplitude = amplitude;
        m.frequency = frequency;
        m.phase = phase;
        m.validate();
        return m;
    }

    static TunnelingModulation dichotomous(double amplitude, double switch_rate) {
        TunnelingModulation m;
        m.kind = Kind::Dichotomous;
        m.amplitude = amplitude;
        m.switch_rate = switch_rate;
        m.validate();
        return m;
    }

    void validate() const {
        switch (kind) {
            case Kind::Static:
                break;
            case Kind::Periodic:
                if (!(amplitude >= 0.0 && amplitude < delta0))
                    throw domain_error("TunnelingModulation: periodic amplitude must be in [0, 1)");
                if (!(frequency > 0.0))
                    throw domain_error("TunnelingModulation: periodic frequency must be > 0");
                break;
            case Kind::Dichotomous:
                // amplitude = delta0 makes the adiabatic passage time diverge
                if (!(amplitude >= 0.0 && amplitude < delta0))
                    throw domain_error("TunnelingModulation: noise amplitude must be in [0, 1)");
                if (!(switch_rate > 0.0))
                    throw domain_error("TunnelingModulation: switch rate must be > 0");
                break;
        }
    }

    double period() const {
        if (kind != Kind::Periodic)
            throw usage_error("TunnelingModulation::period: not a periodic modulation");
        return 2.0 * std::numbers::pi / frequency;
    }
};

struct BiasModulation {
    enum class Kind { Zero, Periodic };

    Kind kind{Kind::Zero};
    double amplitude{0.0};
    double frequency{0.0};
    double phase{0.0};

    static BiasModulation zero() { return {}; }

    static BiasModulation periodic(double amplitude, double frequency, double phase = 0.0) {
        BiasModulation b;
        b.kind = Kind::Periodic;
        b.amplitude = amplitude;
        b.frequency = frequency;
        b.phase = phase;
        b.validate();
        return b;
    }

    void validate() const {
        if (kind == Kind::Periodic) {
            if (!(amplitude >= 0.0))
                throw domain_error("BiasModulation: amplitude must be >= 0");
            if (!(frequency > 0.0))
                throw domain_error("BiasModulation: frequency must be > 0");
        }
    }

    double period() const {
        if (kind != Kind::Periodic)
            throw usage_error("BiasModulation::period: not a periodic bias");
        return 2.0 * std::numbers::pi / frequency;
    }
};

// Accumulated bias phase between t_prime and t, in closed form. This sits
// inside a cosine inside every rate quadrature, so it is never obtained by
// numerical integration.
inline double zeta(double t, double t_prime, const BiasModulation& bias) {
    if (t < t_prime) throw domain_error("zeta: requires t >= t_prime");
    if (bias.kind == BiasModulation::Kind::Zero) return 0.0;
    bias.validate();
    const double a = bias.amplitude / bias.frequency;
    return a * (std::sin(bias.frequency * t + bias.phase)
                - std::sin(bias.frequency * t_prime + bias.phase));
}

// Instantaneous tunneling element. Dichotomous modulation needs the current
// noise state; deterministic variants must not receive one.
inline double tunneling_value(double t, const TunnelingModulation& mod,
                              std::optional<int> noise_state = std::nullopt) {
    mod.validate();
    switch (mod.kind) {
        case TunnelingModulation::Kind::Static:
            if (noise_state)
                throw usage_error("tunneling_value: static modulation takes no noise state");
            return delta0;
        case TunnelingModulation::Kind::Periodic:
            if (noise_state)
                throw usage_error("tunneling_value: periodic modulation takes no noise state");
            return delta0 + mod.amplitude * std::cos(mod.frequency * t + mod.phase);
        case TunnelingModulation::Kind::Dichotomous:
            if (!noise_state || (*noise_state != 1 && *noise_state != -1))
                throw usage_error("tunneling_value: dichotomous modulation requires noise state +/-1");
            return delta0 + mod.amplitude * static_cast<double>(*noise_state);
    }
    throw usage_error("tunneling_value: unreachable");
}

// Stationary autocorrelation of the dichotomous fluctuation, amplitude^2 * exp(-nu*lag).
inline double noise_autocorrelation(double lag, const TunnelingModulation& mod) {
    if (mod.kind != TunnelingModulation::Kind::Dichotomous)
        throw usage_error("noise_autocorrelation: requires dichotomous modulation");
    mod.validate();
    if (lag < 0.0) throw domain_error("noise_autocorrelation: lag must be >= 0");
    return mod.amplitude * mod.amplitude * std::exp(-mod.switch_rate * lag);
}

} // namespace qra
