#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "rvde/error.hpp"
#include "rvde/quadrature.hpp"

namespace rvde {

enum class KernelFamily { exponential, rational, gaussian };

/// Decreasing radial profile K with K(0) = 1 on (A, +inf).
///
///  - exponential: K(t) = e^{-t},        A = -inf
///  - rational(k): K(t) = (t + 1)^{-k},  A = -1
///  - gaussian:    K(t) = e^{-t^2 / 2}   (baselines only; even, so no half-line)
class Kernel {
  public:
    static Kernel exponential() { return Kernel(KernelFamily::exponential, 0); }
    static Kernel rational(int k) {
        if (k < 1) throw ParameterError("rational kernel exponent must be >= 1");
        return Kernel(KernelFamily::rational, k);
    }
    static Kernel gaussian() { return Kernel(KernelFamily::gaussian, 0); }

    KernelFamily family() const noexcept { return family_; }
    /// Exponent k of the rational family (0 otherwise).
    int exponent() const noexcept { return k_; }

    double domain_bound() const noexcept {
        return family_ == KernelFamily::rational ? -1.0
                                                 : -std::numeric_limits<double>::infinity();
    }

    std::string name() const {
        switch (family_) {
            case KernelFamily::exponential: return "exponential";
            case KernelFamily::rational: return "rational(k=" + std::to_string(k_) + ")";
            case KernelFamily::gaussian: return "gaussian";
        }
        return "?";
    }

    bool operator==(const Kernel&) const = default;

  private:
    Kernel(KernelFamily f, int k) : family_(f), k_(k) {}

    KernelFamily family_;
    int k_;
};

namespace detail {

inline void check_domain(const Kernel& kernel, double t) {
    if (std::isnan(t) || !(t > kernel.domain_bound())) {
        throw DomainError("kernel argument " + std::to_string(t) + " outside domain of " +
                          kernel.name());
    }
}

}  // namespace detail

inline double profile(const Kernel& kernel, double t) {
    detail::check_domain(kernel, t);
    switch (kernel.family()) {
        case KernelFamily::exponential: return std::exp(-t);
        case KernelFamily::rational: return std::pow(t + 1.0, -kernel.exponent());
        case KernelFamily::gaussian: return std::exp(-0.5 * t * t);
    }
    return 0.0;
}

/// log K(t); finite wherever K(t) > 0, even when K(t) underflows.
inline double log_profile(const Kernel& kernel, double t) {
    detail::check_domain(kernel, t);
    switch (kernel.family()) {
        case KernelFamily::exponential: return -t;
        case KernelFamily::rational: return -kernel.exponent() * std::log1p(t);
        case KernelFamily::gaussian: return -0.5 * t * t;
    }
    return 0.0;
}

inline double profile_derivative(const Kernel& kernel, double t) {
    detail::check_domain(kernel, t);
    switch (kernel.family()) {
        case KernelFamily::exponential: return -std::exp(-t);
        case KernelFamily::rational: {
            const int k = kernel.exponent();
            return -k * std::pow(t + 1.0, -k - 1);
        }
        case KernelFamily::gaussian: return -t * std::exp(-0.5 * t * t);
    }
    return 0.0;
}

inline double log_unit_sphere_area(int n) {
    if (n < 1) throw ParameterError("dimension must be >= 1");
    return std::log(2.0) + 0.5 * n * std::log(std::numbers::pi) - std::lgamma(0.5 * n);
}

/// Surface area of the unit sphere S^{n-1}: 2 pi^{n/2} / Gamma(n/2).
inline double unit_sphere_area(int n) { return std::exp(log_unit_sphere_area(n)); }

inline double log_tail_integral(const Kernel& kernel, int n) {
    if (n < 1) throw ParameterError("dimension must be >= 1");
    switch (kernel.family()) {
        case KernelFamily::exponential: return std::lgamma(n);
        case KernelFamily::rational: {
            const int k = kernel.exponent();
            if (k <= n) {
                throw NotIntegrable("rational kernel with k=" + std::to_string(k) +
                                    " is not integrable against t^{n-1} for n=" +
                                    std::to_string(n));
            }
            return std::lgamma(n) + std::lgamma(k - n) - std::lgamma(k);
        }
        case KernelFamily::gaussian:
            return (0.5 * n - 1.0) * std::log(2.0) + std::lgamma(0.5 * n);
    }
    return 0.0;
}

/// int_0^inf t^{n-1} K(t) dt.
inline double tail_integral(const Kernel& kernel, int n) {
    return std::exp(log_tail_integral(kernel, n));
}

/// Rejects kernels that violate the RVDE kernel conditions for dimension n.
inline void require_rvde_admissible(const Kernel& kernel, int n) {
    if (kernel.family() == KernelFamily::gaussian) {
        throw KernelNotAdmissible(
            "the gaussian profile is integrable on the whole line and cannot drive RVDE");
    }
    (void)log_tail_integral(kernel, n);
}

namespace detail {

// Every closed form below evaluates the scale-free shape
//     H_n(x) = int_0^1 s^{n-1} K(x s) ds,
// so that int_0^l t^{n-1} K(beta t) dt = l^n H_n(beta l).

inline double log_shape_quadrature(const Kernel& kernel, int n, double x) {
    auto f = [&](double s) {
        return s == 0.0 ? (n == 1 ? profile(kernel, 0.0) : 0.0)
                        : std::pow(s, n - 1) * profile(kernel, x * s);
    };
    // Scale the tolerance by a first estimate so tiny or huge values keep
    // their relative accuracy.
    const double rough = quad::integrate(f, 0.0, 1.0, std::numeric_limits<double>::infinity(), 0)
                             .value;
    const double tol = 1e-13 * std::max(std::abs(rough), std::numeric_limits<double>::min());
    return std::log(quad::value_or_throw(quad::integrate(f, 0.0, 1.0, tol)));
}

inline double log_shape_exponential(int n, double x) {
    if (x == 0.0) return -std::log(static_cast<double>(n));
    if (std::abs(x) <= 1.0 || (x < 0.0 && -x <= n + 10.0)) {
        // sum_j (-x)^j / (j! (n + j)); all terms positive for x < 0.
        double term = 1.0;
        double sum = 1.0 / n;
        for (int j = 1; j < 400; ++j) {
            term *= -x / j;
            const double add = term / (n + j);
            sum += add;
            if (std::abs(add) <= 1e-17 * std::abs(sum)) break;
        }
        return std::log(sum);
    }
    if (x > 0.0) {
        const double p = boost::math::gamma_p(static_cast<double>(n), x);
        return std::lgamma(n) + std::log(p) - n * std::log(x);
    }
    // x < -(n + 10): H = e^b J_n(b) with J_n(b) = int_0^1 s^{n-1} e^{-b(1-s)} ds,
    // J_1 = (1 - e^{-b}) / b and J_k = (1 - (k-1) J_{k-1}) / b, stable for b > n.
    const double b = -x;
    double j = -std::expm1(-b) / b;
    for (int k = 2; k <= n; ++k) j = (1.0 - (k - 1) * j) / b;
    return b + std::log(j);
}

inline double log_shape_rational(int n, int k, double x) {
    const int m = k - n - 1;
    if (m < 0) return log_shape_quadrature(Kernel::rational(k), n, x);
    // Substituting u = s (1 + x) / (1 + x s):
    //   H = (1 + x)^{-n} int_0^1 u^{n-1} (1 - w u)^m du,  w = x / (1 + x).
    const double lead = -n * std::log1p(x);
    if (m == 0) return lead - std::log(static_cast<double>(n));
    const double w = x / (1.0 + x);
    if (x <= 0.0 || w <= 0.1) {
        double sum = 0.0;
        double binom = 1.0;
        double power = 1.0;
        for (int j = 0; j <= m; ++j) {
            sum += binom * power / (n + j);
            binom = binom * (m - j) / (j + 1);
            power *= -w;
        }
        return lead + std::log(sum);
    }
    // Alternating sum cancels for large w; use the incomplete beta function.
    const double a = n;
    const double b = m + 1;
    const double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    return lead + lbeta + std::log(boost::math::ibeta(a, b, w)) - n * std::log(w);
}

inline double log_shape_gaussian(int n, double x) {
    const double y = 0.5 * x * x;
    if (y == 0.0) return -std::log(static_cast<double>(n));
    if (y <= 1.0) {
        double term = 1.0;
        double sum = 1.0 / n;
        for (int j = 1; j < 200; ++j) {
            term *= -y / j;
            const double add = term / (n + 2 * j);
            sum += add;
            if (std::abs(add) <= 1e-17 * std::abs(sum)) break;
        }
        return std::log(sum);
    }
    const double p = boost::math::gamma_p(0.5 * n, y);
    return (0.5 * n - 1.0) * std::log(2.0) + std::lgamma(0.5 * n) + std::log(p) -
           n * std::log(std::abs(x));
}

inline double log_shape(const Kernel& kernel, int n, double x) {
    switch (kernel.family()) {
        case KernelFamily::exponential: return log_shape_exponential(n, x);
        case KernelFamily::rational: return log_shape_rational(n, kernel.exponent(), x);
        case KernelFamily::gaussian: return log_shape_gaussian(n, x);
    }
    return 0.0;
}

inline void check_radial_args(const Kernel& kernel, double beta, double l, int n) {
    if (n < 1) throw ParameterError("dimension must be >= 1");
    if (!(l > 0.0)) throw ParameterError("ray length must be positive");
    if (!std::isfinite(beta)) throw DomainError("beta must be finite");
    if (std::isinf(l)) {
        if (!(beta > 0.0)) throw DomainError("an unbounded ray needs beta > 0");
        return;
    }
    if (!(beta * l > kernel.domain_bound())) {
        throw DomainError("beta " + std::to_string(beta) + " <= A / l for l = " +
                          std::to_string(l));
    }
}

}  // namespace detail

/// log of int_0^l t^{n-1} K(beta t) dt; l may be +inf when beta > 0.
inline double log_radial_integral(const Kernel& kernel, double beta, double l, int n) {
    detail::check_radial_args(kernel, beta, l, n);
    if (std::isinf(l)) return log_tail_integral(kernel, n) - n * std::log(beta);
    if (beta == 0.0) return n * std::log(l) - std::log(static_cast<double>(n));
    return n * std::log(l) + detail::log_shape(kernel, n, beta * l);
}

/// int_0^l t^{n-1} K(beta t) dt, by closed forms (incomplete gamma / beta
/// functions, terminating hypergeometric sums) with quadrature fallback.
inline double radial_integral(const Kernel& kernel, double beta, double l, int n) {
    return std::exp(log_radial_integral(kernel, beta, l, n));
}

/// The same integral by adaptive Gauss-Legendre quadrature only.
inline double radial_integral_quadrature(const Kernel& kernel, double beta, double l, int n,
                                         double abs_tol) {
    detail::check_radial_args(kernel, beta, l, n);
    auto f = [&](double t) {
        if (t == 0.0) return n == 1 ? 1.0 : 0.0;
        return std::pow(t, n - 1) * profile(kernel, beta * t);
    };
    if (std::isinf(l)) return quad::value_or_throw(quad::integrate_to_infinity(f, 0.0, abs_tol));
    return quad::value_or_throw(quad::integrate(f, 0.0, l, abs_tol));
}

/// d/d beta of the radial integral, int_0^l t^n K'(beta t) dt, through the
/// kernel identities K' = -K (exponential), K'_k = -k K_{k+1} (rational) and
/// K'(t) = -t K(t) (gaussian).
inline double radial_integral_dbeta(const Kernel& kernel, double beta, double l, int n) {
    switch (kernel.family()) {
        case KernelFamily::exponential: return -radial_integral(kernel, beta, l, n + 1);
        case KernelFamily::rational: {
            const int k = kernel.exponent();
            return -k * radial_integral(Kernel::rational(k + 1), beta, l, n + 1);
        }
        case KernelFamily::gaussian: return -beta * radial_integral(kernel, beta, l, n + 2);
    }
    return 0.0;
}

}  // namespace rvde
