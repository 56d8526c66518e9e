// interp.hpp — periodic cubic spline on a uniform grid

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "qra/errors.hpp"

namespace qra {

// Natural periodic cubic spline through n uniformly spaced samples over one
// period [0, T). Evaluation wraps, so s(t + T) == s(t) to machine precision.
class PeriodicSpline {
public:
    PeriodicSpline() = default;

    PeriodicSpline(std::vector<double> values, double period)
        : v_(std::move(values)), period_(period) {
        if (v_.size() < 3) throw domain_error("PeriodicSpline: need at least 3 samples");
        if (!(period_ > 0.0)) throw domain_error("PeriodicSpline: period must be > 0");
        h_ = period_ / static_cast<double>(v_.size());
        solve_second_derivatives();
    }

    double period() const { return period_; }
    std::size_t size() const { return v_.size(); }

    double operator()(double t) const {
        const std::size_t n = v_.size();
        double u = std::fmod(t, period_);
        if (u < 0.0) u += period_;
        double j_real = std::floor(u / h_);
        std::size_t j = static_cast<std::size_t>(j_real);
        if (j >= n) j = n - 1;  // fmod edge
        const double x = (u - static_cast<double>(j) * h_) / h_;
        const std::size_t j1 = (j + 1) % n;
        const double a = 1.0 - x;
        return a * v_[j] + x * v_[j1]
               + (h_ * h_ / 6.0)
                     * ((a * a * a - a) * m_[j] + (x * x * x - x) * m_[j1]);
    }

private:
    // Cyclic tridiagonal system for the second derivatives, uniform spacing:
    // m_{i-1} + 4 m_i + m_{i+1} = 6 (v_{i-1} - 2 v_i + v_{i+1}) / h^2.
    // Solved with the Sherman–Morrison correction over a Thomas sweep.
    void solve_second_derivatives() {
        const std::size_t n = v_.size();
        std::vector<double> rhs(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double prev = v_[(i + n - 1) % n];
            const double next = v_[(i + 1) % n];
            rhs[i] = 6.0 * (prev - 2.0 * v_[i] + next) / (h_ * h_);
        }
        const double diag = 4.0, off = 1.0;
        const double gamma = -diag;
        std::vector<double> d(n, diag);
        d[0] -= gamma;
        d[n - 1] -= off * off / gamma;

        auto thomas = [&](const std::vector<double>& b) {
            std::vector<double> c(n), x(n);
            c[0] = off / d[0];
            x[0] = b[0] / d[0];
            for (std::size_t i = 1; i < n; ++i) {
                const double m = d[i] - off * c[i - 1];
                c[i] = off / m;
                x[i] = (b[i] - off * x[i - 1]) / m;
            }
            for (std::size_t i = n - 1; i-- > 0;) x[i] -= c[i] * x[i + 1];
            return x;
        };

        std::vector<double> u(n, 0.0);
        u[0] = gamma;
        u[n - 1] = off;
        const auto y = thomas(rhs);
        const auto z = thomas(u);
        const double fact = (y[0] + off * y[n - 1] / gamma)
                            / (1.0 + z[0] + off * z[n - 1] / gamma);
        m_.resize(n);
        for (std::size_t i = 0; i < n; ++i) m_[i] = y[i] - fact * z[i];
    }

    std::vector<double> v_;
    std::vector<double> m_;
    double period_{0.0};
    double h_{0.0};
};

} // namespace qra
