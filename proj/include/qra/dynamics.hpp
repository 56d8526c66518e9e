// dynamics.hpp — survival dynamics with an absorbing target state: traces,
// first-passage densities and moments, noise-averaged and analytic solutions,
// phase averaging, cyclostationary populations, residence times

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "qra/errors.hpp"
#include "qra/modulation.hpp"
#include "qra/ode.hpp"
#include "qra/parallel.hpp"
#include "qra/rates.hpp"

namespace qra {

struct SolveOptions {
    double survival_floor{1e-10};  // run until the survival drops below this
    double t_cap{1e6};             // hard stop; reaching it first is an error
    double ode_rel_tol{1e-8};
    double ode_abs_tol{1e-12};

    void validate() const {
        if (!(survival_floor > 0.0 && survival_floor < 1.0))
            throw domain_error("SolveOptions: survival_floor must be in (0, 1)");
        if (!(t_cap > 0.0)) throw domain_error("SolveOptions: t_cap must be > 0");
        if (!(ode_rel_tol > 0.0 && ode_abs_tol > 0.0))
            throw domain_error("SolveOptions: tolerances must be > 0");
    }
};

// Dense survival solution. `survival` and `density` evaluate anywhere; past
// t_end they continue with the exponential tail at the final local decay rate.
struct SurvivalTrace {
    std::vector<double> t;   // accepted solver nodes (absolute time)
    std::vector<double> p;   // survival probability at the nodes
    std::vector<double> y;   // noise-population correlator (noise-averaged runs only)
    double t_start{0.0};
    double t_end{0.0};
    double residual{0.0};    // survival at t_end
    double tail_rate{0.0};   // local decay rate at t_end
    bool complete{false};
    SolveOptions options{};
    std::function<double(double)> survival;
    std::function<double(double)> density;            // g(t) = -dP/dt from the rhs
    std::function<double(double)> noise_correlation;  // y(t); empty unless noise-averaged
};

// First-passage-time density on an output grid plus a continuous evaluator.
struct FptPdf {
    std::vector<double> t;
    std::vector<double> g;
    double normalization_defect{0.0};  // probability mass beyond t_end
    double t_start{0.0};
    double t_end{0.0};
    double tail_rate{0.0};
    std::vector<double> moments;  // leading moments; moments[0] is the MFPT
    std::function<double(double)> eval;
};

namespace detail {

inline std::function<double(double)> tail_extended(std::function<double(double)> core,
                                                   double t_end, double value_at_end,
                                                   double rate) {
    return [core = std::move(core), t_end, value_at_end, rate](double t) {
        if (t <= t_end) return core(t);
        return value_at_end * std::exp(-rate * (t - t_end));
    };
}

// Output grid for densities. Two refined zones resolve the memory-transient
// ramp (first few time units) and the first drive peaks, the rest is uniform;
// the grid stays fine enough that trapezoid sums over it hold the emitted
// normalization tolerance. Strictly increasing.
inline std::vector<double> pdf_grid(double t_start, double t_end, std::size_t n) {
    if (n < 2) throw domain_error("pdf_grid: need at least 2 points");
    const double span = t_end - t_start;
    std::vector<double> g;
    g.reserve(n + 2);
    const double z1 = std::min(span * 0.02, 3.0);
    const double z2 = std::min(span * 0.2, 60.0);
    if (n >= 64 && z1 > 0.0 && z2 > z1 && z2 < span) {
        const std::size_t n1 = n / 5, n2 = n / 5, n3 = n - n1 - n2;
        for (std::size_t i = 0; i < n1; ++i)
            g.push_back(t_start + z1 * static_cast<double>(i) / static_cast<double>(n1));
        for (std::size_t i = 0; i < n2; ++i)
            g.push_back(t_start + z1
                        + (z2 - z1) * static_cast<double>(i) / static_cast<double>(n2));
        for (std::size_t i = 0; i < n3; ++i)
            g.push_back(t_start + z2
                        + (span - z2) * static_cast<double>(i) / static_cast<double>(n3 - 1));
    } else {
        for (std::size_t i = 0; i < n; ++i)
            g.push_back(t_start + span * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    return g;
}

} // namespace detail

// Integrate dP/dt = -W(t) P from P(t_start) = 1 until the survival floor is
// reached. Hitting t_cap first raises incomplete_absorption with the residual.
template <class Rate>
SurvivalTrace solve_survival(Rate rate, const SolveOptions& opts = {}, double t_start = 0.0) {
    opts.validate();
    if (t_start < 0.0) throw domain_error("solve_survival: t_start must be >= 0");

    OdeOptions oo;
    oo.rel_tol = opts.ode_rel_tol;
    oo.abs_tol = opts.ode_abs_tol;
    auto rhs = [rate](double t, const std::array<double, 1>& s, std::array<double, 1>& d) {
        d[0] = -rate(t) * s[0];
    };
    auto stop = [&](double, const std::array<double, 1>& s) {
        return s[0] < opts.survival_floor;
    };
    auto sol = std::make_shared<OdeSolution<1>>(
        integrate_ode<1>(rhs, {1.0}, t_start, t_start + opts.t_cap, oo, stop));

    SurvivalTrace tr;
    tr.t = sol->times();
    tr.p.reserve(tr.t.size());
    for (const auto& s : sol->states()) tr.p.push_back(s[0]);
    tr.t_start = t_start;
    tr.t_end = tr.t.back();
    tr.residual = tr.p.back();
    tr.complete = tr.residual < opts.survival_floor;
    tr.options = opts;
    if (!tr.complete)
        throw incomplete_absorption("solve_survival: time cap reached with residual survival "
                                        + std::to_string(tr.residual),
                                    tr.residual);
    tr.tail_rate = rate(tr.t_end);

    const double t0 = t_start, te = tr.t_end, res = tr.residual, lam = tr.tail_rate;
    tr.survival = detail::tail_extended(
        [sol, t0](double t) { return t < t0 ? 1.0 : (*sol).eval(t)[0]; }, te, res, lam);
    tr.density = detail::tail_extended(
        [sol, rate, t0](double t) {
            if (t < t0) return 0.0;
            return rate(t) * (*sol).eval(t)[0];
        },
        te, res * lam, lam);
    return tr;
}

namespace detail {

// Dense solution of the linear pair s' = M(t) s with symmetric 2x2 generator,
// stored as exponential-midpoint segments: s(t) = expm((t - t0) M_mid) s0.
// Exact for time-independent rates and unconditionally stable, which matters
// for large switching rates where the correlator relaxes on the 1/nu scale.
struct Linear2Solution {
    struct Segment {
        double t0, h;
        std::array<double, 2> s0;
        double m00, m01, m11;  // generator frozen at the segment midpoint
    };
    std::vector<Segment> segments;
    std::vector<double> t;                   // segment edges (nodes)
    std::vector<std::array<double, 2>> s;    // states at the nodes

    // exp(h M) for symmetric M, assembled from the eigen-exponentials so that
    // widely split decay rates cannot overflow the hyperbolic factors
    static std::array<double, 2> propagate(double m00, double m01, double m11, double h,
                                           const std::array<double, 2>& v) {
        const double mu = 0.5 * (m00 + m11);
        const double a = 0.5 * (m00 - m11);
        const double delta = std::sqrt(a * a + m01 * m01);
        const double ep = std::exp((mu + delta) * h);
        const double em = std::exp((mu - delta) * h);
        const double ch = 0.5 * (ep + em);  // e^{mu h} cosh(delta h)
        double shs;                         // e^{mu h} sinh(delta h) / delta
        if (delta * h < 1e-6) {
            const double dh = delta * h;
            shs = h * std::exp(mu * h) * (1.0 + dh * dh / 6.0);
        } else {
            shs = 0.5 * (ep - em) / delta;
        }
        const double q00 = ch + shs * a;
        const double q01 = shs * m01;
        const double q11 = ch - shs * a;
        return {q00 * v[0] + q01 * v[1], q01 * v[0] + q11 * v[1]};
    }

    std::array<double, 2> eval(double time) const {
        if (segments.empty() || time <= t.front()) return s.front();
        if (time >= t.back()) return s.back();
        std::size_t lo = 0, hi = segments.size();
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            if (segments[mid].t0 <= time) lo = mid;
            else hi = mid;
        }
        const Segment& seg = segments[lo];
        return propagate(seg.m00, seg.m01, seg.m11, time - seg.t0, seg.s0);
    }
};

// Adaptive step-doubling driver for the exponential midpoint rule above.
// `generator(t, m00, m01, m11)` fills the symmetric matrix.
template <class Gen, class Stop>
Linear2Solution integrate_linear2(Gen&& generator, std::array<double, 2> s0, double t0,
                                  double t_end, double rel_tol, double abs_tol, Stop&& stop) {
    Linear2Solution sol;
    sol.t.push_back(t0);
    sol.s.push_back(s0);

    double t = t0;
    std::array<double, 2> s = s0;
    double h = std::min(1.0, t_end - t0);
    long steps = 0;
    while (t < t_end) {
        if (++steps > 50'000'000)
            throw numerical_error("integrate_linear2: step budget exhausted");
        h = std::min(h, t_end - t);

        double f00, f01, f11;
        generator(t + 0.5 * h, f00, f01, f11);
        const auto full = Linear2Solution::propagate(f00, f01, f11, h, s);

        double a00, a01, a11, b00, b01, b11;
        generator(t + 0.25 * h, a00, a01, a11);
        generator(t + 0.75 * h, b00, b01, b11);
        const auto h1 = Linear2Solution::propagate(a00, a01, a11, 0.5 * h, s);
        const auto h2 = Linear2Solution::propagate(b00, b01, b11, 0.5 * h, h1);

        double err = 0.0;
        for (int i = 0; i < 2; ++i) {
            const double sc = abs_tol + rel_tol * std::max(std::abs(h2[i]), std::abs(s[i]));
            err = std::max(err, std::abs(full[i] - h2[i]) / sc);
        }
        if (err <= 1.0) {
            sol.segments.push_back({t, 0.5 * h, s, a00, a01, a11});
            sol.segments.push_back({t + 0.5 * h, 0.5 * h, h1, b00, b01, b11});
            t += h;
            s = h2;
            sol.t.push_back(t);
            sol.s.push_back(s);
            if (stop(t, s)) break;
            h *= std::clamp(0.9 * std::pow(std::max(err, 1e-10), -1.0 / 3.0), 0.5, 3.0);
        } else {
            h *= std::clamp(0.9 * std::pow(err, -1.0 / 3.0), 0.1, 0.9);
            if (!(h > 0.0) || t + h == t)
                throw numerical_error("integrate_linear2: step size underflow");
        }
    }
    return sol;
}

// Above this switching rate the explicit pair would be stability-limited
// (step ~ 1/nu over a span of many relaxation times); the exponential
// integrator takes over.
inline constexpr double stiff_switch_rate = 50.0;

} // namespace detail

namespace detail {

template <class Rate0, class Rate1>
SurvivalTrace solve_noise_averaged_explicit(Rate0 w0, Rate1 w1, double nu,
                                            const SolveOptions& opts) {
    opts.validate();
    if (!(nu > 0.0)) throw domain_error("solve_survival_noise_averaged: nu must be > 0");

    OdeOptions oo;
    oo.rel_tol = opts.ode_rel_tol;
    oo.abs_tol = opts.ode_abs_tol;
    auto rhs = [w0, w1, nu](double t, const std::array<double, 2>& s, std::array<double, 2>& d) {
        const double r0 = w0(t), r1 = w1(t);
        d[0] = -r0 * s[0] - r1 * s[1];
        d[1] = -r1 * s[0] - (r0 + nu) * s[1];
    };
    auto stop = [&](double, const std::array<double, 2>& s) {
        return s[0] < opts.survival_floor;
    };
    auto sol = std::make_shared<OdeSolution<2>>(
        integrate_ode<2>(rhs, {1.0, 0.0}, 0.0, opts.t_cap, oo, stop));

    SurvivalTrace tr;
    tr.t = sol->times();
    tr.p.reserve(tr.t.size());
    tr.y.reserve(tr.t.size());
    for (const auto& s : sol->states()) {
        tr.p.push_back(s[0]);
        tr.y.push_back(s[1]);
    }
    tr.t_start = 0.0;
    tr.t_end = tr.t.back();
    tr.residual = tr.p.back();
    tr.complete = tr.residual < opts.survival_floor;
    tr.options = opts;
    if (!tr.complete)
        throw incomplete_absorption(
            "solve_survival_noise_averaged: time cap reached with residual survival "
                + std::to_string(tr.residual),
            tr.residual);

    const double gend = w0(tr.t_end) * tr.p.back() + w1(tr.t_end) * tr.y.back();
    tr.tail_rate = gend / tr.residual;

    const double te = tr.t_end, res = tr.residual, lam = tr.tail_rate;
    tr.survival = detail::tail_extended([sol](double t) { return t < 0.0 ? 1.0 : (*sol).eval(t)[0]; },
                                        te, res, lam);
    tr.density = detail::tail_extended(
        [sol, w0, w1](double t) {
            if (t < 0.0) return 0.0;
            const auto s = (*sol).eval(t);
            return w0(t) * s[0] + w1(t) * s[1];
        },
        te, res * lam, lam);
    tr.noise_correlation = [sol, te](double t) {
        if (t < 0.0) return 0.0;
        const auto s = (*sol).eval(std::min(t, te));
        return s[1];
    };
    return tr;
}

template <class Rate0, class Rate1>
SurvivalTrace solve_noise_averaged_stiff(Rate0 w0, Rate1 w1, double nu,
                                         const SolveOptions& opts) {
    opts.validate();
    if (!(nu > 0.0)) throw domain_error("solve_survival_noise_averaged: nu must be > 0");

    auto generator = [w0, w1, nu](double t, double& m00, double& m01, double& m11) {
        const double r0 = w0(t), r1 = w1(t);
        m00 = -r0;
        m01 = -r1;
        m11 = -(r0 + nu);
    };
    auto stop = [&](double, const std::array<double, 2>& s) {
        return s[0] < opts.survival_floor;
    };
    auto sol = std::make_shared<Linear2Solution>(integrate_linear2(
        generator, {1.0, 0.0}, 0.0, opts.t_cap, opts.ode_rel_tol, opts.ode_abs_tol, stop));

    SurvivalTrace tr;
    tr.t = sol->t;
    tr.p.reserve(tr.t.size());
    tr.y.reserve(tr.t.size());
    for (const auto& s : sol->s) {
        tr.p.push_back(s[0]);
        tr.y.push_back(s[1]);
    }
    tr.t_start = 0.0;
    tr.t_end = tr.t.back();
    tr.residual = tr.p.back();
    tr.complete = tr.residual < opts.survival_floor;
    tr.options = opts;
    if (!tr.complete)
        throw incomplete_absorption(
            "solve_survival_noise_averaged: time cap reached with residual survival "
                + std::to_string(tr.residual),
            tr.residual);

    const double gend = w0(tr.t_end) * tr.p.back() + w1(tr.t_end) * tr.y.back();
    tr.tail_rate = gend / tr.residual;

    const double te = tr.t_end, res = tr.residual, lam = tr.tail_rate;
    tr.survival = tail_extended([sol](double t) { return t < 0.0 ? 1.0 : (*sol).eval(t)[0]; }, te,
                                res, lam);
    tr.density = tail_extended(
        [sol, w0, w1](double t) {
            if (t < 0.0) return 0.0;
            const auto s = (*sol).eval(t);
            return w0(t) * s[0] + w1(t) * s[1];
        },
        te, res * lam, lam);
    tr.noise_correlation = [sol, te](double t) {
        if (t < 0.0) return 0.0;
        return (*sol).eval(std::min(t, te))[1];
    };
    return tr;
}

} // namespace detail

// Integrate the noise-averaged pair
//   dP/dt = -W0(t) P - W1(t) y,   dy/dt = -W1(t) P - (W0(t) + nu) y
// from P(0) = 1, y(0) = 0 (uncorrelated preparation) until the floor. Large
// switching rates make the pair stiff; those use the exponential-midpoint
// integrator, which is exact for time-independent rates.
template <class Rate0, class Rate1>
SurvivalTrace solve_survival_noise_averaged(Rate0 w0, Rate1 w1, double nu,
                                            const SolveOptions& opts = {}) {
    if (nu > detail::stiff_switch_rate)
        return detail::solve_noise_averaged_stiff(std::move(w0), std::move(w1), nu, opts);
    return detail::solve_noise_averaged_explicit(std::move(w0), std::move(w1), nu, opts);
}

// Closed-form bi-exponential survival of the dichotomous zero-bias problem,
// built from the static component rates.
struct BiExponential {
    double c1{1.0}, c2{0.0};
    double gamma1{0.0}, gamma2{0.0};
    double splitting{0.0};  // d = sqrt(nu^2 + 4 w1^2)
    double w0{0.0}, w1{0.0};
    double nu{0.0};

    double survival(double t) const {
        return c1 * std::exp(-gamma1 * t) + c2 * std::exp(-gamma2 * t);
    }
    double density(double t) const {
        return c1 * gamma1 * std::exp(-gamma1 * t) + c2 * gamma2 * std::exp(-gamma2 * t);
    }
    // y(t) recovered from the averaged equation of motion
    double correlation(double t) const {
        if (w1 == 0.0) return 0.0;
        return (c1 * (gamma1 - w0) * std::exp(-gamma1 * t)
                + c2 * (gamma2 - w0) * std::exp(-gamma2 * t))
               / w1;
    }
    double mean_first_passage() const { return c1 / gamma1 + c2 / gamma2; }
};

// Static zero-bias component rates for a dichotomous tunneling element.
inline std::pair<double, double> static_noise_rates(double nu, double delta_amp,
                                                    const BathParams& bath,
                                                    const QuadratureConfig& cfg = {}) {
    if (!(delta_amp >= 0.0 && delta_amp < delta0))
        throw domain_error("static_noise_rates: amplitude must be in [0, 1)");
    if (nu < 0.0) throw domain_error("static_noise_rates: nu must be >= 0");
    const double a0 = a_nu(0.0, bath, cfg);
    const double an = (nu == 0.0) ? a0 : a_nu(nu, bath, cfg);
    return {delta0 * delta0 * a0 + delta_amp * delta_amp * an,
            delta0 * delta_amp * (a0 + an)};
}

inline BiExponential analytic_survival_dichotomous(double nu, double delta_amp,
                                                   const BathParams& bath,
                                                   const QuadratureConfig& cfg = {}) {
    if (!(delta_amp >= 0.0 && delta_amp < delta0))
        throw domain_error("analytic_survival_dichotomous: amplitude must be in [0, 1)");
    if (nu < 0.0) throw domain_error("analytic_survival_dichotomous: nu must be >= 0");
    const auto [w0, w1] = static_noise_rates(nu, delta_amp, bath, cfg);
    BiExponential b;
    b.w0 = w0;
    b.w1 = w1;
    b.nu = nu;
    b.splitting = std::sqrt(nu * nu + 4.0 * w1 * w1);
    if (b.splitting == 0.0) {
        b.c1 = 1.0;
        b.c2 = 0.0;
        b.gamma1 = b.gamma2 = w0;
        return b;
    }
    b.c1 = (b.splitting + nu) / (2.0 * b.splitting);
    b.c2 = (b.splitting - nu) / (2.0 * b.splitting);
    b.gamma1 = 0.5 * (2.0 * w0 + nu - b.splitting);
    b.gamma2 = 0.5 * (2.0 * w0 + nu + b.splitting);
    return b;
}

// Analytic MFPT of the dichotomous zero-bias problem as a function of the
// switching rate.
inline double mfpt_analytic(double nu, double delta_amp, const BathParams& bath,
                            const QuadratureConfig& cfg = {}) {
    const auto [w0, w1] = static_noise_rates(nu, delta_amp, bath, cfg);
    const double denom = w0 * w0 + nu * w0 - w1 * w1;
    if (!(denom > 0.0))
        throw domain_error("mfpt_analytic: non-positive denominator; amplitude too close to "
                           "the bare tunneling element");
    return (w0 + nu) / denom;
}

// Wrap the closed-form solution as a dense trace so the pdf/moment machinery
// applies to it unchanged.
inline SurvivalTrace analytic_trace(const BiExponential& sol, const SolveOptions& opts = {}) {
    opts.validate();
    SurvivalTrace tr;
    tr.options = opts;
    tr.t_start = 0.0;
    const double slow = std::min(sol.gamma1, sol.gamma2);
    if (!(slow > 0.0)) throw domain_error("analytic_trace: non-decaying solution");
    double te = -std::log(opts.survival_floor) / slow;
    while (sol.survival(te) >= opts.survival_floor) te *= 1.25;
    tr.t_end = te;
    tr.residual = sol.survival(te);
    tr.tail_rate = sol.density(te) / tr.residual;
    tr.complete = true;
    const std::size_t n = 512;
    tr.t.resize(n + 1);
    tr.p.resize(n + 1);
    tr.y.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        const double t = te * static_cast<double>(i) / static_cast<double>(n);
        tr.t[i] = t;
        tr.p[i] = sol.survival(t);
        tr.y[i] = sol.correlation(t);
    }
    tr.survival = detail::tail_extended([sol](double t) { return t < 0.0 ? 1.0 : sol.survival(t); },
                                        te, tr.residual, tr.tail_rate);
    tr.density = detail::tail_extended([sol](double t) { return t < 0.0 ? 0.0 : sol.density(t); },
                                       te, tr.residual * tr.tail_rate, tr.tail_rate);
    tr.noise_correlation = [sol](double t) { return t < 0.0 ? 0.0 : sol.correlation(t); };
    return tr;
}

namespace detail {

inline double factorial(int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

inline double binomial(int n, int k) {
    return factorial(n) / (factorial(k) * factorial(n - k));
}

// int t^order * g(t) dt over the computed support, plus the closed-form tail
// moment of the exponential continuation beyond t_end.
inline double moment_of_density(const std::function<double(double)>& g, double t_start,
                                double t_end, double residual, double tail_rate, int order) {
    auto f = [&](double t) { return std::pow(t, order) * g(t); };
    std::vector<double> bps;
    const int chunks = 64;
    for (int i = 1; i < chunks; ++i)
        bps.push_back(t_start + (t_end - t_start) * static_cast<double>(i) / chunks);
    const auto r = integrate_adaptive(f, t_start, t_end, 1e-300, 1e-9, bps, 200000);
    double tail = 0.0;
    if (residual > 0.0) {
        if (!(tail_rate > 0.0))
            throw numerical_error("moment_of_density: non-positive tail rate with residual mass");
        for (int k = 0; k <= order; ++k)
            tail += binomial(order, k) * std::pow(t_end, order - k) * factorial(k)
                    / std::pow(tail_rate, k);
        tail *= residual;
    }
    return r.value + tail;
}

} // namespace detail

// First-passage density extracted from a complete trace. Values come from the
// equation of motion on the dense output, never from differencing the stored
// nodes. The leading n_moments moments are tabulated on the way out.
inline FptPdf fpt_pdf(const SurvivalTrace& trace, std::size_t n_points = 1200,
                      int n_moments = 2) {
    if (!trace.complete) throw usage_error("fpt_pdf: trace did not reach absorption");
    if (n_points < 2) throw domain_error("fpt_pdf: need at least 2 output points");
    FptPdf pdf;
    pdf.t_start = trace.t_start;
    pdf.t_end = trace.t_end;
    pdf.tail_rate = trace.tail_rate;
    pdf.normalization_defect = trace.residual;
    pdf.eval = trace.density;
    pdf.t = detail::pdf_grid(trace.t_start, trace.t_end, n_points);
    pdf.g.resize(pdf.t.size());
    for (std::size_t i = 0; i < pdf.t.size(); ++i) pdf.g[i] = trace.density(pdf.t[i]);
    for (int k = 1; k <= n_moments; ++k)
        pdf.moments.push_back(detail::moment_of_density(pdf.eval, pdf.t_start, pdf.t_end,
                                                        pdf.normalization_defect, pdf.tail_rate,
                                                        k));
    return pdf;
}


// n-th moment of a first-passage density; order 1 is the MFPT.
inline double fpt_moment(const FptPdf& pdf, int order) {
    if (order < 1) throw domain_error("fpt_moment: order must be >= 1");
    if (!(pdf.normalization_defect < 1e-4))
        throw usage_error("fpt_moment: density is not normalized (defect "
                          + std::to_string(pdf.normalization_defect) + ")");
    return detail::moment_of_density(pdf.eval, pdf.t_start, pdf.t_end, pdf.normalization_defect,
                                     pdf.tail_rate, order);
}

// Moment taken directly from a trace, skipping the grid snapshot.
inline double fpt_moment(const SurvivalTrace& trace, int order) {
    if (order < 1) throw domain_error("fpt_moment: order must be >= 1");
    if (!trace.complete) throw usage_error("fpt_moment: trace did not reach absorption");
    return detail::moment_of_density(trace.density, trace.t_start, trace.t_end, trace.residual,
                                     trace.tail_rate, order);
}

// One dynamical configuration: what drives the tunneling element and the bias,
// in which mode the rates are evaluated, and with what tolerances.
struct DynamicsConfig {
    TunnelingModulation tunneling{};
    BiasModulation bias{};
    BathParams bath{};
    QuadratureConfig quadrature{};
    RateMode mode{RateMode::Stationary};
    SolveOptions solve{};
    std::size_t cache_samples{512};

    bool has_periodic_component() const {
        return tunneling.kind == TunnelingModulation::Kind::Periodic
               || bias.kind == BiasModulation::Kind::Periodic;
    }
    bool is_noise_averaged() const {
        return tunneling.kind == TunnelingModulation::Kind::Dichotomous;
    }
    double drive_period() const {
        if (tunneling.kind == TunnelingModulation::Kind::Periodic) return tunneling.period();
        if (bias.kind == BiasModulation::Kind::Periodic) return bias.period();
        throw usage_error("DynamicsConfig: no periodic component");
    }
};

namespace detail {

// Survival solve for one drive phase, choosing the plain or noise-averaged
// equation as the configuration requires. Stationary caches are built once by
// the caller and shifted per phase.
struct PhaseSolver {
    DynamicsConfig cfg;
    // stationary caches at phase 0
    std::shared_ptr<RateFunction> fwd_cached;
    std::shared_ptr<RateFunction> w0_cached, w1_cached;

    explicit PhaseSolver(const DynamicsConfig& c) : cfg(c) {
        if (cfg.is_noise_averaged()) {
            auto w0 = RateFunction::noise_component(0, RateMode::Stationary, cfg.tunneling,
                                                    cfg.bias, cfg.bath, cfg.quadrature);
            auto w1 = RateFunction::noise_component(1, RateMode::Stationary, cfg.tunneling,
                                                    cfg.bias, cfg.bath, cfg.quadrature);
            w0_cached = std::make_shared<RateFunction>(build_periodic_cache(w0, cfg.cache_samples));
            w1_cached = std::make_shared<RateFunction>(build_periodic_cache(w1, cfg.cache_samples));
        } else {
            auto fwd = RateFunction::deterministic(RateDirection::Forward, RateMode::Stationary,
                                                   cfg.tunneling, cfg.bias, cfg.bath,
                                                   cfg.quadrature);
            fwd_cached = std::make_shared<RateFunction>(build_periodic_cache(fwd, cfg.cache_samples));
        }
    }

    SurvivalTrace solve(double phase) const {
        if (cfg.is_noise_averaged()) {
            RateFunction w0 = w0_cached->with_phase(phase);
            RateFunction w1 = w1_cached->with_phase(phase);
            if (cfg.mode == RateMode::Improved) {
                auto i0 = RateFunction::noise_component(0, RateMode::Improved, cfg.tunneling,
                                                        with_phase(cfg.bias, phase), cfg.bath,
                                                        cfg.quadrature);
                auto i1 = RateFunction::noise_component(1, RateMode::Improved, cfg.tunneling,
                                                        with_phase(cfg.bias, phase), cfg.bath,
                                                        cfg.quadrature);
                return solve_survival_noise_averaged(TransientRate(i0, w0), TransientRate(i1, w1),
                                                     cfg.tunneling.switch_rate, cfg.solve);
            }
            return solve_survival_noise_averaged(w0, w1, cfg.tunneling.switch_rate, cfg.solve);
        }
        RateFunction fwd = fwd_cached->with_phase(phase);
        if (cfg.mode == RateMode::Improved) {
            auto imp = RateFunction::deterministic(RateDirection::Forward, RateMode::Improved,
                                                   with_phase(cfg.tunneling, phase),
                                                   with_phase(cfg.bias, phase), cfg.bath,
                                                   cfg.quadrature);
            return solve_survival(TransientRate(imp, fwd), cfg.solve);
        }
        return solve_survival(fwd, cfg.solve);
    }

    static TunnelingModulation with_phase(TunnelingModulation m, double phi) {
        if (m.kind == TunnelingModulation::Kind::Periodic) m.phase = phi;
        return m;
    }
    static BiasModulation with_phase(BiasModulation b, double phi) {
        if (b.kind == BiasModulation::Kind::Periodic) b.phase = phi;
        return b;
    }
};

} // namespace detail

struct PhaseAveragedPdf {
    FptPdf average;
    std::vector<double> phases;
    std::vector<FptPdf> per_phase;
    std::vector<double> per_phase_mfpt;
    double mfpt{0.0};          // phase average of the per-phase first moments
    long total_solver_nodes{0};
};

// Solve the survival problem for n_phases uniformly spaced initial drive
// phases and average the first-passage densities.
inline PhaseAveragedPdf phase_averaged_pdf(const DynamicsConfig& cfg, std::size_t n_phases = 40,
                                           std::size_t n_points = 1200, int threads = 1) {
    if (!cfg.has_periodic_component())
        throw usage_error("phase_averaged_pdf: configuration has no periodic component");
    if (n_phases == 0) throw domain_error("phase_averaged_pdf: n_phases must be > 0");

    detail::PhaseSolver solver(cfg);
    PhaseAveragedPdf out;
    out.phases.resize(n_phases);
    out.per_phase.resize(n_phases);
    out.per_phase_mfpt.resize(n_phases);
    std::vector<long> nodes(n_phases, 0);

    parallel_for(n_phases, threads, [&](std::size_t k) {
        const double phi = 2.0 * std::numbers::pi * static_cast<double>(k)
                           / static_cast<double>(n_phases);
        out.phases[k] = phi;
        try {
            SurvivalTrace tr = solver.solve(phi);
            nodes[k] = static_cast<long>(tr.t.size());
            out.per_phase[k] = fpt_pdf(tr, n_points, 1);
            out.per_phase_mfpt[k] = out.per_phase[k].moments[0];
        } catch (const incomplete_absorption&) {
            throw;
        } catch (const std::exception& e) {
            throw numerical_error("phase_averaged_pdf: phase " + std::to_string(phi) + ": "
                                  + e.what());
        }
    });
    for (long n : nodes) out.total_solver_nodes += n;

    double mfpt_sum = 0.0, defect_sum = 0.0, t_end_max = 0.0, tail_min = 0.0;
    for (std::size_t k = 0; k < n_phases; ++k) {
        mfpt_sum += out.per_phase_mfpt[k];
        defect_sum += out.per_phase[k].normalization_defect;
        t_end_max = std::max(t_end_max, out.per_phase[k].t_end);
        tail_min = (k == 0) ? out.per_phase[k].tail_rate
                            : std::min(tail_min, out.per_phase[k].tail_rate);
    }
    out.mfpt = mfpt_sum / static_cast<double>(n_phases);

    auto evals = std::make_shared<std::vector<std::function<double(double)>>>();
    evals->reserve(n_phases);
    for (const auto& p : out.per_phase) evals->push_back(p.eval);

    FptPdf& avg = out.average;
    avg.t_start = 0.0;
    avg.t_end = t_end_max;
    avg.tail_rate = tail_min;
    avg.normalization_defect = defect_sum / static_cast<double>(n_phases);
    avg.moments = {out.mfpt};
    avg.eval = [evals](double t) {
        double s = 0.0;
        for (const auto& e : *evals) s += e(t);
        return s / static_cast<double>(evals->size());
    };
    avg.t = detail::pdf_grid(0.0, t_end_max, n_points);
    avg.g.resize(avg.t.size());
    for (std::size_t i = 0; i < avg.t.size(); ++i) avg.g[i] = avg.eval(avg.t[i]);
    return out;
}

// Cyclostationary population of the target state over one drive period.
struct PeriodicPopulation {
    double period{0.0};
    std::vector<double> s;
    std::vector<double> p_right;
    PeriodicSpline interp;
    long periods_to_converge{0};

    double operator()(double time) const { return interp(time); }
};

// Iterate the two-state master equation (both states reflecting) over whole
// periods from P_R = 0 until the one-period map reaches its fixed point.
template <class FwdRate, class BwdRate>
PeriodicPopulation asymptotic_populations(FwdRate fwd, BwdRate bwd, double period,
                                          double tol = 1e-8, long period_cap = 100000,
                                          std::size_t samples = 256) {
    if (!(period > 0.0)) throw domain_error("asymptotic_populations: period must be > 0");
    if (!(tol > 0.0)) throw domain_error("asymptotic_populations: tol must be > 0");

    OdeOptions oo;
    oo.rel_tol = 1e-10;
    oo.abs_tol = 1e-13;
    auto rhs = [&](double t, const std::array<double, 1>& q, std::array<double, 1>& d) {
        d[0] = fwd(t) * (1.0 - q[0]) - bwd(t) * q[0];
    };

    std::vector<double> prev(samples, -1.0), cur(samples);
    double q0 = 0.0;
    for (long pd = 0; pd < period_cap; ++pd) {
        const double t0 = static_cast<double>(pd) * period;
        auto sol = integrate_ode<1>(rhs, {q0}, t0, t0 + period, oo);
        for (std::size_t j = 0; j < samples; ++j) {
            const double sj = period * static_cast<double>(j) / static_cast<double>(samples);
            cur[j] = sol.eval(t0 + sj)[0];
        }
        q0 = sol.states().back()[0];
        double diff = 0.0;
        for (std::size_t j = 0; j < samples; ++j) diff = std::max(diff, std::abs(cur[j] - prev[j]));
        prev = cur;
        if (diff < tol) {
            PeriodicPopulation out;
            out.period = period;
            out.p_right = cur;
            out.s.resize(samples);
            for (std::size_t j = 0; j < samples; ++j)
                out.s[j] = period * static_cast<double>(j) / static_cast<double>(samples);
            out.interp = PeriodicSpline(cur, period);
            out.periods_to_converge = pd + 1;
            return out;
        }
    }
    throw numerical_error("asymptotic_populations: no fixed point within the period cap");
}

struct ResidenceResult {
    FptPdf pdf;
    PeriodicPopulation entrance_weight;  // asymptotic target-state population
    double period{0.0};
    bool extrapolated{false};  // nonzero bias: outside the validated zero-bias setup
};

// Residence-time density of the driven problem: first-passage densities of
// particles re-entering the decaying state at cyclostationary times s,
// weighted by the backward flux at s, averaged over one drive period.
inline ResidenceResult residence_time_pdf(const DynamicsConfig& cfg,
                                          std::size_t entrance_points = 128,
                                          std::size_t n_points = 1200, int threads = 1) {
    if (cfg.is_noise_averaged())
        throw usage_error("residence_time_pdf: defined for deterministic modulations only");
    if (entrance_points < 4)
        throw domain_error("residence_time_pdf: need at least 4 entrance points");

    // rates stay phase-locked to absolute time; stationary mode throughout
    auto fwd = build_periodic_cache(
        RateFunction::deterministic(RateDirection::Forward, RateMode::Stationary, cfg.tunneling,
                                    cfg.bias, cfg.bath, cfg.quadrature),
        cfg.cache_samples);
    auto bwd = build_periodic_cache(
        RateFunction::deterministic(RateDirection::Backward, RateMode::Stationary, cfg.tunneling,
                                    cfg.bias, cfg.bath, cfg.quadrature),
        cfg.cache_samples);

    const bool constant_config = !cfg.has_periodic_component();
    const double period = constant_config ? 1.0 : cfg.drive_period();

    ResidenceResult out;
    out.period = period;
    out.extrapolated = cfg.bias.kind != BiasModulation::Kind::Zero;
    out.entrance_weight = asymptotic_populations(fwd, bwd, period);

    std::vector<SurvivalTrace> traces(entrance_points);
    std::vector<double> weights(entrance_points);
    parallel_for(entrance_points, threads, [&](std::size_t j) {
        const double sj = period * static_cast<double>(j) / static_cast<double>(entrance_points);
        traces[j] = solve_survival(fwd, cfg.solve, sj);
        weights[j] = bwd(sj) * out.entrance_weight(sj);
    });

    double wsum = 0.0;
    for (double w : weights) wsum += w;
    if (!(wsum > 0.0))
        throw numerical_error("residence_time_pdf: vanishing entrance weight normalization");

    double span = 0.0, defect = 0.0, tail = 0.0;
    for (std::size_t j = 0; j < entrance_points; ++j) {
        const double sj = period * static_cast<double>(j) / static_cast<double>(entrance_points);
        span = std::max(span, traces[j].t_end - sj);
        defect += weights[j] * traces[j].residual;
        tail = (j == 0) ? traces[j].tail_rate : std::min(tail, traces[j].tail_rate);
    }
    defect /= wsum;

    auto shared_traces = std::make_shared<std::vector<SurvivalTrace>>(std::move(traces));
    auto shared_weights = std::make_shared<std::vector<double>>(std::move(weights));
    const double inv_wsum = 1.0 / wsum;
    const double step = period / static_cast<double>(entrance_points);

    FptPdf& pdf = out.pdf;
    pdf.t_start = 0.0;
    pdf.t_end = span;
    pdf.tail_rate = tail;
    pdf.normalization_defect = defect;
    pdf.eval = [shared_traces, shared_weights, inv_wsum, step](double u) {
        double acc = 0.0;
        for (std::size_t j = 0; j < shared_traces->size(); ++j) {
            const double sj = step * static_cast<double>(j);
            acc += (*shared_weights)[j] * (*shared_traces)[j].density(sj + u);
        }
        return acc * inv_wsum;
    };
    pdf.t = detail::pdf_grid(0.0, span, n_points);
    pdf.g.resize(pdf.t.size());
    for (std::size_t i = 0; i < pdf.t.size(); ++i) pdf.g[i] = pdf.eval(pdf.t[i]);
    for (int k = 1; k <= 2; ++k)
        pdf.moments.push_back(
            detail::moment_of_density(pdf.eval, 0.0, span, defect, tail, k));
    return out;
}

} // namespace qra
