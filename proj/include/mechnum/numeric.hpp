#pragma once

#include <cmath>
#include <functional>

namespace mechnum {

/// Golden-section search for the maximizer of a unimodal function on
/// [lo, hi]. Converges to the boundary when f is monotone on the interval.
template <class F>
double golden_section_max(F&& f, double lo, double hi, double rel_tol = 1e-8) {
    constexpr double invphi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    const double span0 = hi - lo;
    while (b - a > rel_tol * std::max(1.0, std::abs(a) + std::abs(b)) &&
           b - a > 1e-15 * span0) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        }
    }
    return 0.5 * (a + b);
}

/// Root of a nonincreasing function h on [lo, hi] by bisection.
/// Returns lo if h(lo) <= 0 and hi if h(hi) >= 0 (boundary solutions).
template <class F>
double decreasing_root(F&& h, double lo, double hi, int iters = 80) {
    if (h(lo) <= 0.0) return lo;
    if (h(hi) >= 0.0) return hi;
    double a = lo, b = hi;
    for (int i = 0; i < iters; ++i) {
        double m = 0.5 * (a + b);
        if (h(m) > 0.0)
            a = m;
        else
            b = m;
    }
    return 0.5 * (a + b);
}

/// Central finite difference; h defaults to a scale-aware step.
template <class F>
double central_diff(F&& f, double x, double h = 0.0) {
    if (h <= 0.0) h = 1e-6 * std::max(1.0, std::abs(x));
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

} // namespace mechnum
