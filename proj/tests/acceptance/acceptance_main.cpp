// acceptance_main.cpp — end-to-end acceptance suite. Runs each numbered
// criterion at its stated tolerance and prints one pass/fail line per
// criterion; exits nonzero if any requested criterion fails.

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "qra/qra.hpp"

using namespace qra;

namespace {

const BathParams ref_bath{0.7, 10.0, 0.2};
const QuadratureConfig quad{};

struct Outcome {
    bool pass{false};
    std::string detail;
};

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof buf, f, args);
    va_end(args);
    return buf;
}

double rel_gap(double value, double reference) {
    return std::abs(value - reference) / std::abs(reference);
}

RateFunction cached_noise_rate(int index, double amp, double nu, const BathParams& bath,
                               BiasModulation bias = BiasModulation::zero()) {
    return build_periodic_cache(RateFunction::noise_component(
        index, RateMode::Stationary, TunnelingModulation::dichotomous(amp, nu), bias, bath, quad));
}

// 1. the two static rate coefficients against their reference values
Outcome criterion_1() {
    const double a0 = a_nu(0.0, ref_bath, quad);
    const double at = a_nu(0.06, ref_bath, quad);
    const double d0 = rel_gap(a0, 1.985e-2);
    const double dt = rel_gap(at, 2.102e-2);
    return {d0 < 5e-3 && dt < 5e-3,
            fmt("a(0)=%.6e (ref 1.985e-2, dev %.3f%%), a(0.06)=%.6e (ref 2.102e-2, dev %.3f%%), "
                "tol 0.5%%",
                a0, 100 * d0, at, 100 * dt)};
}

// 2. static mean first-passage time, independent of the switching rate
Outcome criterion_2() {
    const double ref = 1.0 / 1.985e-2;
    const double t1a = mfpt_analytic(0.37, 0.0, ref_bath, quad);
    const double t1b = mfpt_analytic(123.0, 0.0, ref_bath, quad);
    const double d = std::max(rel_gap(t1a, ref), rel_gap(t1b, ref));
    return {d < 5e-3 && rel_gap(t1a, t1b) < 1e-12,
            fmt("t1(amp=0)=%.4f (ref %.4f, dev %.3f%%), tol 0.5%%", t1a, ref, 100 * d)};
}

// 3. fast- and slow-switching limits at amplitude 0.3
Outcome criterion_3() {
    const double statics = 1.0 / a_nu(0.0, ref_bath, quad);
    const double fast = mfpt_analytic(1e3, 0.3, ref_bath, quad);
    const double slow = mfpt_analytic(1e-4, 0.3, ref_bath, quad);
    const double dfast = rel_gap(fast, statics);
    const double dslow = rel_gap(slow, 66.31);
    return {dfast < 0.02 && dslow < 0.02,
            fmt("t1(nu=1e3)=%.3f vs static %.3f (dev %.2f%%); t1(nu=1e-4)=%.3f vs 66.31 "
                "(dev %.2f%%), tol 2%%",
                fast, statics, 100 * dfast, slow, 100 * dslow)};
}

// 4. resonant-activation crossing rate, approximate and exact
Outcome criterion_4() {
    const double approx = crossing_rate_approx(0.2, ref_bath, quad);
    const double exact = crossing_rate_exact(0.2, ref_bath, quad);
    const bool in_band = std::abs(approx - 0.0588) <= 5e-4;
    const double gap = rel_gap(exact, approx);
    const bool near_anchor = approx > 0.05 && approx < 0.07 && exact > 0.05 && exact < 0.07;
    return {in_band && gap < 0.05 && near_anchor,
            fmt("approx=%.5f (band 0.0588+-0.0005), exact=%.5f (gap %.3f%%, tol 5%%)", approx,
                exact, 100 * gap)};
}

// 5. coupled equations against the closed-form solution on a parameter grid
Outcome criterion_5() {
    const auto nus = log_grid(1e-2, 1e2, 5);
    double worst = 0.0;
    for (double amp : {0.0, 0.1, 0.2, 0.3, 0.4}) {
        for (double nu : nus) {
            auto w0 = cached_noise_rate(0, amp, nu, ref_bath);
            auto w1 = cached_noise_rate(1, amp, nu, ref_bath);
            const auto tr = solve_survival_noise_averaged(w0, w1, nu);
            const auto bi = analytic_survival_dichotomous(nu, amp, ref_bath, quad);
            for (double t = 0.0; t <= tr.t_end; t += tr.t_end / 257.0)
                worst = std::max(worst, std::abs(tr.survival(t) - bi.survival(t)));
        }
    }
    return {worst < 1e-6, fmt("max |closed form - coupled solve| = %.3e over 5x5 grid, tol 1e-6",
                              worst)};
}

// 6. Monte Carlo ensemble against the exact averaging
Outcome criterion_6() {
    McConfig mc;
    mc.tunneling = TunnelingModulation::dichotomous(0.3, 0.3);
    mc.bath = ref_bath;
    mc.t_end = 100.0;
    mc.grid_points = 21;
    const auto res = mc_survival(mc, 5000, 20260809);
    const auto bi = analytic_survival_dichotomous(0.3, 0.3, ref_bath, quad);

    double worst_zp = 0.0, worst_zy = 0.0;
    for (double probe : {10.0, 50.0, 100.0}) {
        std::size_t j = 0;
        while (res.t[j] < probe - 1e-9) ++j;
        worst_zp = std::max(worst_zp,
                            std::abs(res.p_mean[j] - bi.survival(probe)) / res.p_stderr[j]);
        worst_zy = std::max(worst_zy,
                            std::abs(res.y_mean[j] - bi.correlation(probe)) / res.y_stderr[j]);
    }

    // resolving power: the band separates the bi-exponential from the static
    // exponential where they differ most
    std::size_t j60 = 0;
    while (res.t[j60] < 60.0 - 1e-9) ++j60;
    const double a0 = a_nu(0.0, ref_bath, quad);
    const double gap = std::abs(bi.survival(60.0) - std::exp(-a0 * 60.0));
    const double power = gap / res.p_stderr[j60];
    const bool bounded = res.p_min >= 0.0 && res.p_max <= 1.0 + 1e-12;

    return {worst_zp < 3.0 && worst_zy < 3.0 && power > 5.0 && bounded,
            fmt("max |z| survival=%.2f, correlator=%.2f (tol 3 sigma); separating power at t=60: "
                "%.1f sigma (need > 5); path-wise survival in [%.2e, %.5f]",
                worst_zp, worst_zy, power, res.p_min, res.p_max)};
}

// 7. density hygiene across the studied configurations
Outcome criterion_7() {
    std::vector<std::string> problems;

    auto check_pdf = [&](const FptPdf& pdf, const std::string& name, double norm_tol,
                         bool improved) {
        double gmin = 0.0;
        for (double g : pdf.g) gmin = std::min(gmin, g);
        if (gmin < -1e-12) problems.push_back(name + ": negative density " + fmt("%.2e", gmin));
        const double mass = integrate_adaptive([&](double t) { return pdf.eval(t); }, pdf.t_start,
                                               pdf.t_end, 1e-12, 1e-8, {}, 200000)
                                .value
                            + pdf.normalization_defect;
        if (std::abs(mass - 1.0) > norm_tol)
            problems.push_back(name + ": normalization " + fmt("%.6f", mass));
        if (improved && pdf.eval(0.0) != 0.0)
            problems.push_back(name + ": improved-mode density must start at zero");
    };

    for (RateMode mode : {RateMode::Stationary, RateMode::Improved}) {
        const bool imp = mode == RateMode::Improved;
        const char* tag = imp ? "improved" : "stationary";

        DynamicsConfig statics;
        statics.bath = ref_bath;
        statics.mode = mode;
        detail::PhaseSolver s1(statics);
        check_pdf(fpt_pdf(s1.solve(0.0), 1200), std::string("static/") + tag, 1e-4, imp);

        DynamicsConfig noisy;
        noisy.tunneling = TunnelingModulation::dichotomous(0.3, 0.3);
        noisy.bath = ref_bath;
        noisy.mode = mode;
        detail::PhaseSolver s2(noisy);
        check_pdf(fpt_pdf(s2.solve(0.0), 1200), std::string("noise/") + tag, 1e-4, imp);
    }

    DynamicsConfig driven;
    driven.tunneling = TunnelingModulation::periodic(0.3, 0.1, 0.0);
    driven.bath = ref_bath;
    detail::PhaseSolver s3(driven);
    check_pdf(fpt_pdf(s3.solve(0.0), 1600), "driven-tunneling", 1e-4, false);

    DynamicsConfig biased;
    biased.bias = BiasModulation::periodic(0.3, 0.1, 0.0);
    biased.bath = ref_bath;
    detail::PhaseSolver s4(biased);
    check_pdf(fpt_pdf(s4.solve(0.0), 1600), "driven-bias", 1e-4, false);

    const auto res = residence_time_pdf(driven, 128, 1600);
    check_pdf(res.pdf, "residence", 1e-3, false);

    if (problems.empty()) return {true, "all densities non-negative, normalized, and correctly "
                                        "zero at the origin in improved mode"};
    std::string all;
    for (const auto& p : problems) all += (all.empty() ? "" : "; ") + p;
    return {false, all};
}

// 8. resonant-activation shape of the noise sweep at amplitude 0.3
Outcome criterion_8() {
    ScanConfig sc;
    sc.dynamics.tunneling = TunnelingModulation::dichotomous(0.3, 1.0);
    sc.dynamics.bath = ref_bath;
    sc.kind = SweepKind::NoiseRate;
    sc.grid = log_grid(1e-4, 1e3, 57);
    const auto res = scan_mfpt(sc);

    const double statics = res.limits.static_value;
    const double adiab = res.limits.adiabatic_value;
    const double mn = *std::min_element(res.mfpt.begin(), res.mfpt.end());
    const bool ordering = mn < statics && statics < adiab;
    const bool gaps = (statics - mn) > 0.05 * statics && (adiab - statics) > 0.05 * statics;
    const double dlo = rel_gap(res.mfpt.front(), adiab);
    const double dhi = rel_gap(res.mfpt.back(), statics);
    return {ordering && gaps && dlo < 0.02 && dhi < 0.02,
            fmt("min=%.3f < static=%.3f < adiabatic=%.3f; end deviations %.2f%% / %.2f%% "
                "(tol 2%%), gaps > 5%%: %s",
                mn, statics, adiab, 100 * dlo, 100 * dhi, gaps ? "yes" : "no")};
}

// 9. resonant-activation shape of the periodically driven sweep
Outcome criterion_9() {
    ScanConfig sc;
    sc.dynamics.tunneling = TunnelingModulation::periodic(0.2, 1.0, 0.0);
    sc.dynamics.bath = ref_bath;
    sc.kind = SweepKind::DriveFrequencyTunneling;
    sc.grid = log_grid(3e-3, 10.0, 20);
    sc.n_phases = 40;
    const auto res = scan_mfpt(sc);

    const double statics = res.limits.static_value;
    const auto it = std::min_element(res.mfpt.begin(), res.mfpt.end());
    const bool interior = it != res.mfpt.begin() && *it < statics;
    const double dhi = rel_gap(res.mfpt.back(), statics);
    return {interior && dhi < 0.02,
            fmt("interior minimum %.3f at W=%.3g below static %.3f: %s; t1(W=10)=%.3f, "
                "deviation from static %.2f%% (tol 2%%)",
                *it, res.grid[static_cast<std::size_t>(it - res.mfpt.begin())], statics,
                interior ? "yes" : "no", res.mfpt.back(), 100 * dhi)};
}

// 10. crossing rate decreases with the coupling strength
Outcome criterion_10() {
    std::vector<double> stars;
    for (double alpha : {0.6, 0.7, 0.8}) {
        BathParams bath = ref_bath;
        bath.alpha = alpha;
        stars.push_back(crossing_rate_exact(0.2, bath, quad));
    }
    const bool ordered = stars[0] > stars[1] && stars[1] > stars[2];
    return {ordered, fmt("nu*(alpha=0.6)=%.4f > nu*(0.7)=%.4f > nu*(0.8)=%.4f: %s", stars[0],
                         stars[1], stars[2], ordered ? "yes" : "no")};
}

// 11. combined noise and bias driving: fast-bias consistency with the
// noise-only curve, and the slow-bias plateau against the bias-sweep minimum
Outcome criterion_11() {
    // (a) fast bias drive barely perturbs the noise-only passage time
    ScanConfig sc;
    sc.dynamics.tunneling = TunnelingModulation::dichotomous(0.2, 1.0);
    sc.dynamics.bias = BiasModulation::periodic(0.3, 10.0, 0.0);
    sc.dynamics.bath = ref_bath;
    sc.kind = SweepKind::Combined;
    sc.grid = log_grid(1e-2, 1e3, 7);
    sc.n_phases = 40;
    const auto fast = scan_mfpt(sc);
    double worst_a = 0.0;
    for (std::size_t i = 0; i < fast.grid.size(); ++i)
        worst_a = std::max(worst_a,
                           rel_gap(fast.mfpt[i],
                                   mfpt_analytic(fast.grid[i], 0.2, ref_bath, quad)));

    // (b) the large-rate plateau of the slow-bias curve reproduces the
    // minimum of the bias-frequency sweep
    ScanConfig bias_sweep;
    bias_sweep.dynamics.bias = BiasModulation::periodic(0.3, 1.0, 0.0);
    bias_sweep.dynamics.bath = ref_bath;
    bias_sweep.kind = SweepKind::DriveFrequencyBias;
    bias_sweep.grid = log_grid(0.05, 2.0, 13);
    bias_sweep.n_phases = 40;
    const auto sweep = scan_mfpt(bias_sweep);
    const double sweep_min = *std::min_element(sweep.mfpt.begin(), sweep.mfpt.end());

    DynamicsConfig plateau;
    plateau.tunneling = TunnelingModulation::dichotomous(0.2, 1e3);
    plateau.bias = BiasModulation::periodic(0.3, 0.25, 0.0);
    plateau.bath = ref_bath;
    const auto avg = phase_averaged_pdf(plateau, 40, 2);
    const double worst_b = rel_gap(avg.mfpt, sweep_min);

    return {worst_a < 0.02 && worst_b < 0.02,
            fmt("fast-bias max deviation from noise-only curve %.2f%% (tol 2%%); plateau "
                "t1=%.3f vs sweep minimum %.3f (dev %.2f%%, tol 2%%)",
                100 * worst_a, avg.mfpt, sweep_min, 100 * worst_b)};
}

using CriterionFn = Outcome (*)();
const CriterionFn criteria[] = {criterion_1, criterion_2, criterion_3, criterion_4,
                                criterion_5, criterion_6, criterion_7, criterion_8,
                                criterion_9, criterion_10, criterion_11};

} // namespace

int main(int argc, char** argv) {
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) {
        const int n = std::atoi(argv[i]);
        if (n < 1 || n > 11) {
            std::fprintf(stderr, "usage: %s [criterion 1..11]...\n", argv[0]);
            return 2;
        }
        selected.push_back(n);
    }
    if (selected.empty())
        for (int n = 1; n <= 11; ++n) selected.push_back(n);

    int failures = 0;
    for (int n : selected) {
        Outcome out;
        try {
            out = criteria[n - 1]();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        std::printf("[%s] criterion %2d: %s\n", out.pass ? "PASS" : "FAIL", n,
                    out.detail.c_str());
        std::fflush(stdout);
        if (!out.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
