// ode.hpp — Dormand–Prince 5(4) integrator with dense output

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "qra/errors.hpp"

namespace qra {

struct OdeOptions {
    double rel_tol{1e-8};
    double abs_tol{1e-12};
    double max_step{std::numeric_limits<double>::infinity()};
    double initial_step{0.0};  // 0 = automatic
    long max_steps{50'000'000};
};

// Dense solution on [t0, t_end]: accepted nodes plus a quartic interpolant
// per step, so states can be evaluated anywhere without re-integration.
template <std::size_t N>
class OdeSolution {
public:
    using State = std::array<double, N>;

    const std::vector<double>& times() const { return t_; }
    const std::vector<State>& states() const { return y_; }
    double t_front() const { return t_.front(); }
    double t_back() const { return t_.back(); }

    State eval(double t) const {
        if (t_.size() == 1 || t <= t_.front()) return y_.front();
        if (t >= t_.back()) return y_.back();
        // binary search for the step containing t
        std::size_t lo = 0, hi = t_.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            if (t_[mid] <= t) lo = mid;
            else hi = mid;
        }
        const double h = t_[lo + 1] - t_[lo];
        const double theta = (t - t_[lo]) / h;
        const auto& c = coeff_[lo];
        State out;
        const double th1 = 1.0 - theta;
        for (std::size_t i = 0; i < N; ++i)
            out[i] = c[0][i]
                     + theta * (c[1][i] + th1 * (c[2][i] + theta * (c[3][i] + th1 * c[4][i])));
        return out;
    }

private:
    template <std::size_t M, class F, class Stop>
    friend OdeSolution<M> integrate_ode(F&& rhs, std::array<double, M> y0, double t0,
                                        double t_end, const OdeOptions& opt, Stop&& stop);

    std::vector<double> t_;
    std::vector<State> y_;
    std::vector<std::array<State, 5>> coeff_;
};

namespace detail {

// Butcher tableau of the Dormand–Prince 5(4) pair.
inline constexpr double dp_c[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
inline constexpr double dp_a[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
inline constexpr double dp_e[7] = {71.0 / 57600,   0.0,          -71.0 / 16695, 71.0 / 1920,
                                   -17253.0 / 339200, 22.0 / 525, -1.0 / 40};
inline constexpr double dp_d[7] = {-12715105075.0 / 11282082432.0,
                                   0.0,
                                   87487479700.0 / 32700410799.0,
                                   -10690763975.0 / 1880347072.0,
                                   701980252875.0 / 199316789632.0,
                                   -1453857185.0 / 822651844.0,
                                   69997945.0 / 29380423.0};

} // namespace detail

// Integrate y' = rhs(t, y) from t0 to t_end with adaptive steps. `stop` is
// checked after each accepted step; returning true ends the integration
// early (the last accepted node stays in the solution).
template <std::size_t N, class F, class Stop>
OdeSolution<N> integrate_ode(F&& rhs, std::array<double, N> y0, double t0, double t_end,
                             const OdeOptions& opt, Stop&& stop) {
    using State = std::array<double, N>;
    if (!(t_end >= t0)) throw domain_error("integrate_ode: requires t_end >= t0");

    OdeSolution<N> sol;
    sol.t_.push_back(t0);
    sol.y_.push_back(y0);

    State y = y0, k[7];
    double t = t0;
    rhs(t, y, k[0]);

    auto err_norm = [&](const State& a, const State& b, const State& e) {
        double s = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sc = opt.abs_tol + opt.rel_tol * std::max(std::abs(a[i]), std::abs(b[i]));
            const double q = e[i] / sc;
            s += q * q;
        }
        return std::sqrt(s / static_cast<double>(N));
    };

    double h = opt.initial_step;
    if (h <= 0.0) {
        double fn = 0.0, yn = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            fn = std::max(fn, std::abs(k[0][i]));
            yn = std::max(yn, std::abs(y[i]));
        }
        h = (fn > 0.0) ? 0.01 * std::max(yn, 1e-6) / fn : 1e-3;
        h = std::min(h, t_end - t0);
    }
    h = std::min(h, opt.max_step);
    if (h <= 0.0) h = 1e-6;

    long steps = 0;
    while (t < t_end) {
        if (++steps > opt.max_steps)
            throw numerical_error("integrate_ode: step budget exhausted");
        h = std::min({h, opt.max_step, t_end - t});

        State ytmp, ynew, errv;
        for (int s = 1; s < 7; ++s) {
            for (std::size_t i = 0; i < N; ++i) {
                double acc = 0.0;
                for (int j = 0; j < s; ++j) acc += detail::dp_a[s][j] * k[j][i];
                ytmp[i] = y[i] + h * acc;
            }
            rhs(t + detail::dp_c[s] * h, ytmp, k[s]);
        }
        ynew = ytmp;  // stage 7 evaluates at (t + h, y_new): FSAL
        for (std::size_t i = 0; i < N; ++i) {
            double acc = 0.0;
            for (int j = 0; j < 7; ++j) acc += detail::dp_e[j] * k[j][i];
            errv[i] = h * acc;
        }
        const double err = err_norm(y, ynew, errv);

        if (err <= 1.0) {
            // accept: store dense coefficients for this step
            std::array<State, 5> c;
            for (std::size_t i = 0; i < N; ++i) {
                double dsum = 0.0;
                for (int j = 0; j < 7; ++j) dsum += detail::dp_d[j] * k[j][i];
                const double dy = ynew[i] - y[i];
                const double bspl = h * k[0][i] - dy;
                c[0][i] = y[i];
                c[1][i] = dy;
                c[2][i] = bspl;
                c[3][i] = dy - h * k[6][i] - bspl;
                c[4][i] = h * dsum;
            }
            sol.coeff_.push_back(c);
            t += h;
            y = ynew;
            k[0] = k[6];  // FSAL
            sol.t_.push_back(t);
            sol.y_.push_back(y);
            if (stop(t, y)) break;
            const double fac = std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, 5.0);
            h *= fac;
        } else {
            h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
            if (!(h > 0.0) || t + h == t)
                throw numerical_error("integrate_ode: step size underflow");
        }
    }
    return sol;
}

template <std::size_t N, class F>
OdeSolution<N> integrate_ode(F&& rhs, std::array<double, N> y0, double t0, double t_end,
                             const OdeOptions& opt = {}) {
    return integrate_ode<N>(std::forward<F>(rhs), y0, t0, t_end, opt,
                            [](double, const std::array<double, N>&) { return false; });
}

} // namespace qra
