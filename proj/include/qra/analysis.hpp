// analysis.hpp — MFPT sweeps, analytic limits, and the resonant-activation
// crossing point

#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "qra/dynamics.hpp"
#include "qra/errors.hpp"
#include "qra/rates.hpp"

namespace qra {

// Switching rate at which the frozen-coefficient approximation of the
// crossing equation is anchored.
inline constexpr double crossing_reference_rate = 0.06;

struct MfptLimits {
    double static_value{0.0};     // unmodulated MFPT, 1 / a_0
    double high_rate_value{0.0};  // fast-modulation limit (equals the static value)
    double adiabatic_value{0.0};  // slow-modulation limit
};

// The three analytic limits of the noise-modulated MFPT.
inline MfptLimits mfpt_limits(double delta_amp, const BathParams& bath,
                              const QuadratureConfig& cfg = {}) {
    if (!(delta_amp >= 0.0 && delta_amp < delta0))
        throw domain_error("mfpt_limits: amplitude must be in [0, 1)");
    const double a0 = a_nu(0.0, bath, cfg);
    MfptLimits l;
    l.static_value = 1.0 / (delta0 * delta0 * a0);
    l.high_rate_value = l.static_value;
    const double d2 = delta_amp * delta_amp;
    const double gap = delta0 * delta0 - d2;
    l.adiabatic_value = (1.0 / a0) * (delta0 * delta0 + d2) / (gap * gap);
    return l;
}

// Slow-drive limit for a periodically modulated tunneling element: the phase
// average of the frozen-configuration MFPT, in closed form.
inline double adiabatic_limit_tunneling_drive(double amplitude, const BathParams& bath,
                                              const QuadratureConfig& cfg = {}) {
    if (!(amplitude >= 0.0 && amplitude < delta0))
        throw domain_error("adiabatic_limit_tunneling_drive: amplitude must be in [0, 1)");
    const double a0 = a_nu(0.0, bath, cfg);
    const double gap = delta0 * delta0 - amplitude * amplitude;
    return delta0 / (a0 * std::pow(gap, 1.5));
}

// Slow-drive limit for a periodically modulated bias: phase average of the
// frozen-bias MFPT, with the frozen-bias rate evaluated by quadrature.
inline double adiabatic_limit_bias_drive(double amplitude, const BathParams& bath,
                                         const QuadratureConfig& cfg = {}) {
    if (!(amplitude >= 0.0)) throw domain_error("adiabatic_limit_bias_drive: amplitude >= 0");
    const double tau_max = decay_cutoff(0.0, bath, cfg.tail_cut);
    auto frozen_rate = [&](double eps) {
        auto f = [&](double tau) {
            const auto q = correlation_exponent(tau, bath);
            return std::exp(-q.q_real) * std::cos(q.q_imag - eps * tau);
        };
        const auto bps = detail::rate_breakpoints(
            tau_max, bath, 0.0, std::abs(eps) > 0.0 ? std::abs(eps) : 0.0);
        return 0.5 * delta0 * delta0
               * integrate_adaptive(f, 0.0, tau_max, cfg.abs_tol, cfg.rel_tol, bps).value;
    };
    const std::size_t n = 64;
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double phi = 2.0 * std::numbers::pi * static_cast<double>(k) / n;
        const double w = frozen_rate(amplitude * std::cos(phi));
        if (!(w > 0.0))
            throw numerical_error("adiabatic_limit_bias_drive: frozen rate not positive");
        acc += 1.0 / w;
    }
    return acc / static_cast<double>(n);
}

// Switching rate at which the noise-modulated MFPT crosses the static value,
// from the analytic MFPT by bracketed bisection in the nonadiabatic branch.
inline double crossing_rate_exact(double delta_amp, const BathParams& bath,
                                  const QuadratureConfig& cfg = {}, double bracket_lo = 1e-3,
                                  double bracket_hi = 1.0) {
    if (!(delta_amp > 0.0 && delta_amp < delta0))
        throw domain_error("crossing_rate_exact: amplitude must be in (0, 1)");
    const double a0 = a_nu(0.0, bath, cfg);
    const double target = 1.0 / (delta0 * delta0 * a0);
    auto gap = [&](double nu) {
        const double an = a_nu(nu, bath, cfg);
        const double w0 = delta0 * delta0 * a0 + delta_amp * delta_amp * an;
        const double w1 = delta0 * delta_amp * (a0 + an);
        return (w0 + nu) / (w0 * w0 + nu * w0 - w1 * w1) - target;
    };
    return bisect(gap, bracket_lo, bracket_hi, 1e-6);
}

// Frozen-coefficient approximation of the crossing rate, quadratic in the
// noise amplitude.
inline double crossing_rate_approx(double delta_amp, const BathParams& bath,
                                   const QuadratureConfig& cfg = {}) {
    if (!(delta_amp >= 0.0 && delta_amp < delta0))
        throw domain_error("crossing_rate_approx: amplitude must be in [0, 1)");
    const double a0 = a_nu(0.0, bath, cfg);
    const double at = a_nu(crossing_reference_rate, bath, cfg);
    return delta0 * delta0 * (a0 * a0 / at + a0 + at) - delta_amp * delta_amp * at;
}

enum class SweepKind { NoiseRate, DriveFrequencyTunneling, DriveFrequencyBias, Combined };

inline std::string to_string(SweepKind k) {
    switch (k) {
        case SweepKind::NoiseRate: return "noise-rate";
        case SweepKind::DriveFrequencyTunneling: return "drive-frequency";
        case SweepKind::DriveFrequencyBias: return "bias-frequency";
        case SweepKind::Combined: return "combined";
    }
    return "?";
}

struct ScanPoint {
    double x{0.0};
    double mfpt{std::numeric_limits<double>::quiet_NaN()};
    double defect{0.0};
    long solver_nodes{0};
    bool failed{false};
    std::string error;
};

struct ScanResult {
    SweepKind kind{SweepKind::NoiseRate};
    std::string variable;
    std::vector<double> grid;
    std::vector<double> mfpt;
    MfptLimits limits;
    std::vector<ScanPoint> points;
};

struct ScanConfig {
    DynamicsConfig dynamics{};
    SweepKind kind{SweepKind::NoiseRate};
    std::vector<double> grid;
    std::size_t n_phases{40};
    int threads{1};
    double max_fail_fraction{0.10};
};

inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0 && hi > lo)) throw domain_error("log_grid: requires 0 < lo < hi");
    if (n < 2) throw domain_error("log_grid: need at least 2 points");
    std::vector<double> g(n);
    const double llo = std::log(lo), lhi = std::log(hi);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = std::exp(llo + (lhi - llo) * static_cast<double>(i) / static_cast<double>(n - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

namespace detail {

inline void check_grid(const std::vector<double>& g) {
    if (g.size() < 2) throw domain_error("scan_mfpt: grid needs at least 2 points");
    for (std::size_t i = 1; i < g.size(); ++i)
        if (!(g[i] > g[i - 1])) throw domain_error("scan_mfpt: grid must be strictly increasing");
}

} // namespace detail

// Crossing frequency extracted from a computed sweep: the first point where
// the MFPT drops through the static reference, located by bisection on the
// log-x linear interpolant of the scan values. No further solves are run.
inline double crossing_frequency_from_scan(const ScanResult& scan) {
    const double target = scan.limits.static_value;
    for (std::size_t i = 1; i < scan.grid.size(); ++i) {
        const double a = scan.mfpt[i - 1] - target;
        const double b = scan.mfpt[i] - target;
        if (!(std::isfinite(a) && std::isfinite(b))) continue;
        if (a > 0.0 && b <= 0.0) {
            const double xl = std::log(scan.grid[i - 1]), xr = std::log(scan.grid[i]);
            auto interp = [&](double x) {
                const double u = (x - xl) / (xr - xl);
                return a + (b - a) * u;
            };
            return std::exp(bisect(interp, xl, xr, 1e-12));
        }
    }
    throw numerical_error("crossing_frequency_from_scan: no downward crossing of the static "
                          "value in the scanned range");
}

// MFPT sweep over the switching rate or a drive frequency. Analytic-eligible
// points (zero bias, dichotomous noise) use the closed-form MFPT; everything
// else is a phase-averaged numerical solve. Per-point failures are recorded
// and the scan continues.
inline ScanResult scan_mfpt(const ScanConfig& sc) {
    detail::check_grid(sc.grid);
    const DynamicsConfig& base = sc.dynamics;

    ScanResult out;
    out.kind = sc.kind;
    out.grid = sc.grid;
    out.points.resize(sc.grid.size());
    out.mfpt.assign(sc.grid.size(), std::numeric_limits<double>::quiet_NaN());

    // reference lines, independent of the sweep variable
    switch (sc.kind) {
        case SweepKind::NoiseRate:
        case SweepKind::Combined:
            out.variable = "nu";
            out.limits = mfpt_limits(base.tunneling.amplitude, base.bath, base.quadrature);
            break;
        case SweepKind::DriveFrequencyTunneling:
            out.variable = "Omega_d";
            out.limits = mfpt_limits(0.0, base.bath, base.quadrature);
            out.limits.adiabatic_value = adiabatic_limit_tunneling_drive(
                base.tunneling.amplitude, base.bath, base.quadrature);
            break;
        case SweepKind::DriveFrequencyBias:
            out.variable = "Omega_eps";
            out.limits = mfpt_limits(0.0, base.bath, base.quadrature);
            out.limits.adiabatic_value =
                adiabatic_limit_bias_drive(base.bias.amplitude, base.bath, base.quadrature);
            break;
    }

    // consistency of kind and base configuration
    switch (sc.kind) {
        case SweepKind::NoiseRate:
            if (base.tunneling.kind != TunnelingModulation::Kind::Dichotomous)
                throw usage_error("scan_mfpt: noise-rate sweep requires dichotomous modulation");
            if (base.bias.kind != BiasModulation::Kind::Zero)
                throw usage_error("scan_mfpt: noise-rate sweep requires zero bias; use the "
                                  "combined sweep for a driven bias");
            break;
        case SweepKind::Combined:
            if (base.tunneling.kind != TunnelingModulation::Kind::Dichotomous
                || base.bias.kind != BiasModulation::Kind::Periodic)
                throw usage_error("scan_mfpt: combined sweep requires dichotomous modulation "
                                  "and a periodic bias");
            break;
        case SweepKind::DriveFrequencyTunneling:
            if (base.tunneling.kind != TunnelingModulation::Kind::Periodic)
                throw usage_error("scan_mfpt: drive-frequency sweep requires periodic modulation");
            break;
        case SweepKind::DriveFrequencyBias:
            if (base.bias.kind != BiasModulation::Kind::Periodic
                || base.tunneling.kind != TunnelingModulation::Kind::Static)
                throw usage_error("scan_mfpt: bias-frequency sweep requires a static tunneling "
                                  "element and a periodic bias");
            break;
    }

    std::size_t failures = 0;
    for (std::size_t i = 0; i < sc.grid.size(); ++i) {
        ScanPoint& pt = out.points[i];
        pt.x = sc.grid[i];
        try {
            DynamicsConfig cfg = base;
            switch (sc.kind) {
                case SweepKind::NoiseRate: {
                    pt.mfpt = mfpt_analytic(pt.x, cfg.tunneling.amplitude, cfg.bath,
                                            cfg.quadrature);
                    pt.defect = 0.0;
                    break;
                }
                case SweepKind::Combined: {
                    cfg.tunneling.switch_rate = pt.x;
                    auto avg = phase_averaged_pdf(cfg, sc.n_phases, 2, sc.threads);
                    pt.mfpt = avg.mfpt;
                    pt.defect = avg.average.normalization_defect;
                    pt.solver_nodes = avg.total_solver_nodes;
                    break;
                }
                case SweepKind::DriveFrequencyTunneling: {
                    cfg.tunneling.frequency = pt.x;
                    auto avg = phase_averaged_pdf(cfg, sc.n_phases, 2, sc.threads);
                    pt.mfpt = avg.mfpt;
                    pt.defect = avg.average.normalization_defect;
                    pt.solver_nodes = avg.total_solver_nodes;
                    break;
                }
                case SweepKind::DriveFrequencyBias: {
                    cfg.bias.frequency = pt.x;
                    auto avg = phase_averaged_pdf(cfg, sc.n_phases, 2, sc.threads);
                    pt.mfpt = avg.mfpt;
                    pt.defect = avg.average.normalization_defect;
                    pt.solver_nodes = avg.total_solver_nodes;
                    break;
                }
            }
            out.mfpt[i] = pt.mfpt;
        } catch (const std::exception& e) {
            pt.failed = true;
            pt.error = e.what();
            ++failures;
        }
    }

    if (static_cast<double>(failures) > sc.max_fail_fraction * static_cast<double>(sc.grid.size()))
        throw numerical_error("scan_mfpt: " + std::to_string(failures) + " of "
                              + std::to_string(sc.grid.size()) + " points failed");
    return out;
}

} // namespace qra
