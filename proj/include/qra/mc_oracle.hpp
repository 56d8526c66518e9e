// mc_oracle.hpp — brute-force validation of the exact noise averaging by
// Monte Carlo over telegraph-noise realizations

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "qra/dynamics.hpp"
#include "qra/errors.hpp"
#include "qra/modulation.hpp"
#include "qra/ode.hpp"
#include "qra/parallel.hpp"
#include "qra/rates.hpp"

namespace qra {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// One telegraph-noise realization covering [-t_hist, t_end]. The history
// depth exists because the rate memory integral reads the noise back to
// t - tau_max.
struct NoisePath {
    double t_hist{0.0};
    double t_end{0.0};
    int initial_state{1};              // state at -t_hist
    std::vector<double> switch_times;  // ascending, in (-t_hist, t_end]
    std::uint64_t seed{0};

    int state_at(double t) const {
        const auto it = std::upper_bound(switch_times.begin(), switch_times.end(), t);
        const auto flips = static_cast<std::size_t>(it - switch_times.begin());
        return (flips % 2 == 0) ? initial_state : -initial_state;
    }

    std::size_t switches_in(double a, double b) const {
        const auto lo = std::lower_bound(switch_times.begin(), switch_times.end(), a);
        const auto hi = std::upper_bound(switch_times.begin(), switch_times.end(), b);
        return static_cast<std::size_t>(hi - lo);
    }
};

// Stationary telegraph path: equiprobable initial state and exponential
// switching gaps. The flip rate is nu/2, which realizes the exp(-nu*lag)
// autocorrelation that the averaged equations are built on (each flip changes
// the sign, so the correlation decays at twice the flip rate). Identical
// seeds give identical paths.
inline NoisePath sample_noise_path(double nu, double t_hist, double t_end, std::uint64_t seed) {
    if (!(nu > 0.0)) throw domain_error("sample_noise_path: nu must be > 0");
    if (t_hist < 0.0) throw domain_error("sample_noise_path: t_hist must be >= 0");
    if (!(t_end > -t_hist)) throw domain_error("sample_noise_path: empty time window");

    NoisePath path;
    path.t_hist = t_hist;
    path.t_end = t_end;
    path.seed = seed;
    std::mt19937_64 rng(splitmix64(seed));
    path.initial_state = (rng() & 1u) ? 1 : -1;
    std::exponential_distribution<double> gap(0.5 * nu);
    double t = -t_hist;
    for (;;) {
        t += gap(rng);
        if (t > t_end) break;
        path.switch_times.push_back(t);
    }
    return path;
}

// Forward rate along one noise realization, with quadrature panels split at
// the switching times inside the memory window.
inline double path_rate(double t, const NoisePath& path, const TunnelingModulation& mod,
                        const BiasModulation& bias, const BathParams& bath,
                        const QuadratureConfig& cfg = {}) {
    if (mod.kind != TunnelingModulation::Kind::Dichotomous)
        throw usage_error("path_rate: requires dichotomous modulation");
    mod.validate();
    bias.validate();
    bath.validate();
    cfg.validate();
    if (t < 0.0 || t > path.t_end) throw domain_error("path_rate: t outside the path window");

    const double tau_max = decay_cutoff(0.0, bath, cfg.tail_cut);
    if (t - tau_max < -path.t_hist - 1e-12)
        throw usage_error("path_rate: insufficient noise history for the memory window");

    auto delta_at = [&](double u) {
        return delta0 + mod.amplitude * static_cast<double>(path.state_at(u));
    };
    auto f = [&](double tau) {
        const auto q = correlation_exponent(tau, bath);
        const double z = zeta(t, t - tau, bias);
        return delta_at(t - tau) * std::exp(-q.q_real) * std::cos(q.q_imag - z);
    };

    const double osc = (bias.kind == BiasModulation::Kind::Periodic) ? bias.frequency : 0.0;
    auto bps = detail::rate_breakpoints(tau_max, bath, 0.0, osc);
    const auto lo = std::lower_bound(path.switch_times.begin(), path.switch_times.end(),
                                     t - tau_max);
    const auto hi = std::upper_bound(path.switch_times.begin(), path.switch_times.end(), t);
    for (auto it = lo; it != hi; ++it) bps.push_back(t - *it);

    const auto r = integrate_adaptive(f, 0.0, tau_max, cfg.abs_tol, cfg.rel_tol, bps);
    return 0.5 * delta_at(t) * r.value;
}

struct McConfig {
    TunnelingModulation tunneling{};  // dichotomous
    BiasModulation bias{};            // zero or periodic
    BathParams bath{};
    QuadratureConfig quadrature{1e-8, 1e-6, 1e-12};  // per-path rates; sampling noise dominates
    double t_end{100.0};
    std::size_t grid_points{21};
    double ode_rel_tol{1e-6};
    double ode_abs_tol{1e-12};
    int threads{1};
};

struct McResult {
    std::vector<double> t;
    std::vector<double> p_mean, p_stderr;
    std::vector<double> y_mean, y_stderr;
    std::size_t n_paths{0};
    double p_min{1.0}, p_max{1.0};  // path-wise extremes across the whole grid
};

// Ensemble of per-path survival solves. Each path integrates the survival
// equation piecewise between its switching times; the ensemble estimates the
// averaged survival and the noise-population correlator with standard errors.
inline McResult mc_survival(const McConfig& cfg, std::size_t n_paths, std::uint64_t seed) {
    if (cfg.tunneling.kind != TunnelingModulation::Kind::Dichotomous)
        throw usage_error("mc_survival: requires dichotomous modulation");
    cfg.tunneling.validate();
    cfg.bias.validate();
    cfg.bath.validate();
    cfg.quadrature.validate();
    if (n_paths < 2) throw domain_error("mc_survival: need at least 2 paths");
    if (cfg.grid_points < 2) throw domain_error("mc_survival: need at least 2 grid points");
    if (!(cfg.t_end > 0.0)) throw domain_error("mc_survival: t_end must be > 0");

    const double tau_max = decay_cutoff(0.0, cfg.bath, cfg.quadrature.tail_cut);
    const std::size_t m = cfg.grid_points;

    std::vector<double> grid(m);
    for (std::size_t j = 0; j < m; ++j)
        grid[j] = cfg.t_end * static_cast<double>(j) / static_cast<double>(m - 1);

    // per-path values kept so the reduction is independent of thread order
    std::vector<double> pbuf(n_paths * m), ybuf(n_paths * m);

    parallel_for(n_paths, cfg.threads, [&](std::size_t i) {
        const std::uint64_t path_seed = splitmix64(seed ^ (0xd1b54a32d192ed03ULL * (i + 1)));
        const NoisePath path =
            sample_noise_path(cfg.tunneling.switch_rate, tau_max, cfg.t_end, path_seed);

        auto rate = [&](double t) {
            return path_rate(t, path, cfg.tunneling, cfg.bias, cfg.bath, cfg.quadrature);
        };
        OdeOptions oo;
        oo.rel_tol = cfg.ode_rel_tol;
        oo.abs_tol = cfg.ode_abs_tol;

        // segment edges: switching times inside [0, t_end]
        std::vector<double> edges;
        edges.push_back(0.0);
        for (double s : path.switch_times)
            if (s > 0.0 && s < cfg.t_end) edges.push_back(s);
        edges.push_back(cfg.t_end);

        double p = 1.0;
        std::size_t jg = 0;
        while (jg < m && grid[jg] <= 0.0) {
            pbuf[i * m + jg] = p;
            ybuf[i * m + jg] = p * static_cast<double>(path.state_at(grid[jg]));
            ++jg;
        }
        auto rhs = [&](double t, const std::array<double, 1>& s, std::array<double, 1>& d) {
            d[0] = -rate(t) * s[0];
        };
        for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
            auto sol = integrate_ode<1>(rhs, {p}, edges[e], edges[e + 1], oo);
            while (jg < m && grid[jg] <= edges[e + 1]) {
                const double pj = sol.eval(grid[jg])[0];
                pbuf[i * m + jg] = pj;
                ybuf[i * m + jg] = pj * static_cast<double>(path.state_at(grid[jg]));
                ++jg;
            }
            p = sol.states().back()[0];
        }
    });

    McResult out;
    out.t = grid;
    out.n_paths = n_paths;
    out.p_mean.resize(m);
    out.p_stderr.resize(m);
    out.y_mean.resize(m);
    out.y_stderr.resize(m);

    // two-pass compensated reduction in fixed path order
    auto reduce = [&](const std::vector<double>& buf, std::vector<double>& mean,
                      std::vector<double>& err) {
        const double n = static_cast<double>(n_paths);
        for (std::size_t j = 0; j < m; ++j) {
            double sum = 0.0, comp = 0.0;
            for (std::size_t i = 0; i < n_paths; ++i) {
                const double v = buf[i * m + j] - comp;
                const double t = sum + v;
                comp = (t - sum) - v;
                sum = t;
            }
            const double mu = sum / n;
            double ss = 0.0;
            for (std::size_t i = 0; i < n_paths; ++i) {
                const double d = buf[i * m + j] - mu;
                ss += d * d;
            }
            mean[j] = mu;
            err[j] = std::sqrt(ss / (n * (n - 1.0)));
        }
    };
    reduce(pbuf, out.p_mean, out.p_stderr);
    reduce(ybuf, out.y_mean, out.y_stderr);
    for (double v : pbuf) {
        out.p_min = std::min(out.p_min, v);
        out.p_max = std::max(out.p_max, v);
    }
    return out;
}

} // namespace qra
