#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "rvde/error.hpp"

namespace rvde::quad {

struct Result {
    double value;
    double error;
    bool converged;
};

namespace detail {

inline constexpr int kOrder = 16;

struct Rule {
    std::array<double, kOrder> nodes{};
    std::array<double, kOrder> weights{};
};

// Gauss-Legendre nodes on [-1, 1] via Newton iteration on P_N.
inline Rule make_rule() {
    Rule rule;
    constexpr int n = kOrder;
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        rule.nodes[i] = x;
        rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

inline const Rule& rule() {
    static const Rule r = make_rule();
    return r;
}

template <class F>
double apply(F& f, double a, double b) {
    const Rule& r = rule();
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double sum = 0.0;
    for (int i = 0; i < kOrder; ++i) sum += r.weights[i] * f(mid + half * r.nodes[i]);
    return half * sum;
}

template <class F>
void adapt(F& f, double a, double b, double whole, double tol, int depth, Result& out) {
    const double mid = 0.5 * (a + b);
    const double left = apply(f, a, mid);
    const double right = apply(f, mid, b);
    const double diff = std::abs(left + right - whole);
    if (diff <= tol || depth <= 0 || !(mid > a && mid < b)) {
        out.value += left + right;
        out.error += diff;
        if (diff > tol) out.converged = false;
        return;
    }
    adapt(f, a, mid, left, 0.5 * tol, depth - 1, out);
    adapt(f, mid, b, right, 0.5 * tol, depth - 1, out);
}

}  // namespace detail

/// Adaptive Gauss-Legendre (16 points per panel, bisection refinement) of f on
/// [a, b]. Panels are accepted when the two-half estimate agrees with the whole
/// panel to within its share of `abs_tol`.
template <class F>
Result integrate(F&& f, double a, double b, double abs_tol, int max_depth = 60) {
    Result out{0.0, 0.0, true};
    if (a == b) return out;
    auto& fn = f;
    const double whole = detail::apply(fn, a, b);
    detail::adapt(fn, a, b, whole, abs_tol, max_depth, out);
    return out;
}

/// Integral over [a, +inf) through the map t = a + s / (1 - s), s in [0, 1).
template <class F>
Result integrate_to_infinity(F&& f, double a, double abs_tol, int max_depth = 60) {
    auto mapped = [&](double s) {
        const double one_minus = 1.0 - s;
        const double t = a + s / one_minus;
        const double v = f(t);
        return v == 0.0 ? 0.0 : v / (one_minus * one_minus);
    };
    return integrate(mapped, 0.0, 1.0, abs_tol, max_depth);
}

/// Throws IntegrationError unless the result converged.
inline double value_or_throw(const Result& r) {
    if (!r.converged || !std::isfinite(r.value)) throw IntegrationError(r.error);
    return r.value;
}

}  // namespace rvde::quad
