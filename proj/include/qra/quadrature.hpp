// quadrature.hpp — adaptive Gauss–Kronrod panels and bracketed root finding

#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <span>
#include <vector>

#include "qra/errors.hpp"

namespace qra {

struct QuadratureConfig {
    double abs_tol{1e-10};
    double rel_tol{1e-8};
    double tail_cut{1e-12};  // envelope level defining the truncation point of decaying integrals

    void validate() const {
        if (!(abs_tol > 0.0)) throw domain_error("QuadratureConfig: abs_tol must be > 0");
        if (!(rel_tol > 0.0)) throw domain_error("QuadratureConfig: rel_tol must be > 0");
        if (!(tail_cut > 0.0)) throw domain_error("QuadratureConfig: tail_cut must be > 0");
    }
};

struct QuadratureResult {
    double value{0.0};
    double error{0.0};
    int panels{0};
};

namespace detail {

// Gauss 7 / Kronrod 15 pair on [-1, 1].
inline constexpr double gk_nodes[8] = {
    0.000000000000000000000000000000000,
    0.207784955007898467600689403773245,
    0.405845151377397166906606412076961,
    0.586087235467691130294144838258730,
    0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,
    0.949107912342758524526189684047851,
    0.991455371120812639206854697526329};
inline constexpr double kronrod_w[8] = {
    0.209482141084727828012999174891714,
    0.204432940075298892414161999234649,
    0.190350578064785409913256402421014,
    0.169004726639267902826583426598550,
    0.140653259715525918745189590510238,
    0.104790010322250183839876322541518,
    0.063092092629978553290700663189204,
    0.022935322010529224963732008058970};
inline constexpr double gauss_w[4] = {
    0.417959183673469387755102040816327,
    0.381830050505118944950369775488975,
    0.279705391489276667901467771423780,
    0.129484966168869693270611432679082};

template <class F>
inline void gk15(F&& f, double a, double b, double& value, double& err) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double f0 = f(mid);
    double kron = kronrod_w[0] * f0;
    double gauss = gauss_w[0] * f0;
    for (int i = 1; i < 8; ++i) {
        const double dx = half * gk_nodes[i];
        const double fs = f(mid + dx) + f(mid - dx);
        kron += kronrod_w[i] * fs;
        if (i % 2 == 0) gauss += gauss_w[i / 2] * fs;
    }
    value = kron * half;
    const double diff = 200.0 * std::abs((kron - gauss) * half);
    err = diff * std::sqrt(diff);
}

struct Panel {
    double err, a, b, value;
    bool operator<(const Panel& o) const { return err < o.err; }
};

} // namespace detail

// Adaptive quadrature of f over [a, b]. Optional breakpoints seed the initial
// panel set (kinks, boundary layers, oscillation caps); panels are then
// bisected worst-error-first until sum(err) <= max(abs_tol, rel_tol*|sum|).
template <class F>
QuadratureResult integrate_adaptive(F&& f, double a, double b, double abs_tol, double rel_tol,
                                    std::span<const double> breakpoints = {},
                                    int max_panels = 20000) {
    if (!(b >= a)) throw domain_error("integrate_adaptive: requires b >= a");
    if (a == b) return {0.0, 0.0, 0};

    std::vector<double> edges;
    edges.push_back(a);
    for (double x : breakpoints)
        if (x > a && x < b) edges.push_back(x);
    edges.push_back(b);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    std::priority_queue<detail::Panel> heap;
    double total = 0.0, total_err = 0.0;
    auto push = [&](double lo, double hi) {
        double v, e;
        detail::gk15(f, lo, hi, v, e);
        total += v;
        total_err += e;
        heap.push({e, lo, hi, v});
    };
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) push(edges[i], edges[i + 1]);

    int panels = static_cast<int>(edges.size()) - 1;
    while (total_err > std::max(abs_tol, rel_tol * std::abs(total))) {
        if (panels >= max_panels)
            throw numerical_error("integrate_adaptive: panel budget exhausted", total_err);
        const detail::Panel worst = heap.top();
        heap.pop();
        total -= worst.value;
        total_err -= worst.err;
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b)
            throw numerical_error("integrate_adaptive: interval underflow", total_err);
        push(worst.a, mid);
        push(mid, worst.b);
        ++panels;
    }
    return {total, total_err, panels};
}

// Bracketed bisection for a continuous sign-changing function; derivative-free.
// Returns the midpoint of the final bracket of relative width rel_tol.
template <class F>
double bisect(F&& f, double lo, double hi, double rel_tol = 1e-10, int max_iter = 200) {
    if (!(hi > lo)) throw domain_error("bisect: requires hi > lo");
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw numerical_error("bisect: no sign change in bracket");
    for (int i = 0; i < max_iter; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if (hi - lo <= rel_tol * std::max(std::abs(lo), std::abs(hi))) break;
    }
    return 0.5 * (lo + hi);
}

} // namespace qra
