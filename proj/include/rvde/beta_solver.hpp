#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "rvde/error.hpp"
#include "rvde/kernels.hpp"

namespace rvde {

/// One Newton-Raphson iterate for the radial bandwidth equation
///     int_0^l t^{n-1} K(beta t) dt = alpha,
/// written in the closed form obtained by integrating dF/dbeta by parts:
///     beta + (beta / n) (1 - (l^n K(beta l) - n alpha) / (l^n K(beta l) - n I(beta))).
inline double newton_update(const Kernel& kernel, int n, double alpha, double l, double beta) {
    const double integral = radial_integral(kernel, beta, l, n);
    const double boundary = std::exp(n * std::log(l) + log_profile(kernel, beta * l));
    return beta + (beta / n) * (1.0 - (boundary - n * alpha) / (boundary - n * integral));
}

/// Limit of beta(l) as l -> inf: (tail_integral(K, n) / alpha)^{1/n}.
inline double solve_beta_at_infinity(const Kernel& kernel, int n, double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ParameterError("alpha must be > 0");
    return std::exp((log_tail_integral(kernel, n) - std::log(alpha)) / n);
}

/// Ray length at which beta vanishes: (n alpha)^{1/n}.
inline double beta_zero_length(int n, double alpha) {
    return std::pow(n * alpha, 1.0 / n);
}

struct SolveOptions {
    double tolerance = 1e-10;  ///< residual bound, scaled by max(1, alpha)
    int max_iterations = 200;
    std::optional<double> initial;  ///< defaults to the asymptote
};

struct SolveReport {
    double beta = 0.0;
    double residual = 0.0;
    int iterations = 0;
    int bisection_steps = 0;
};

/// Solves the radial bandwidth equation for beta at a finite ray length l.
///
/// Newton iterates use the closed-form update above and start from the
/// asymptote unless an initial value is given. The root is kept inside a
/// sign-change bracket; any iterate that is not finite or leaves the bracket
/// is replaced by the bracket midpoint, so the solve is robust even where
/// Newton alone would overshoot out of the kernel domain.
inline SolveReport solve_beta_report(const Kernel& kernel, int n, double alpha, double l,
                                     const SolveOptions& options = {}) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ParameterError("alpha must be > 0");
    if (!(l > 0.0) || !std::isfinite(l)) throw ParameterError("l must be positive and finite");
    if (n < 1) throw ParameterError("dimension must be >= 1");
    require_rvde_admissible(kernel, n);

    const double tol = options.tolerance * std::max(1.0, alpha);
    auto residual = [&](double beta) { return radial_integral(kernel, beta, l, n) - alpha; };

    SolveReport report;
    const double at_zero = std::exp(n * std::log(l)) / n - alpha;
    if (at_zero == 0.0) return report;

    // Bracket [lo, hi] with residual(lo) > 0 > residual(hi); the residual is
    // strictly decreasing in beta.
    const double asymptote = solve_beta_at_infinity(kernel, n, alpha);
    double lo = 0.0;
    double hi = 0.0;
    double f_lo = at_zero;
    double f_hi = at_zero;
    if (at_zero > 0.0) {
        hi = asymptote;
        f_hi = residual(hi);
        while (f_hi > 0.0 && std::isfinite(hi)) {  // rounding when l is huge
            if (f_hi <= tol) return {hi, f_hi, 0, 0};
            hi *= 2.0;
            f_hi = residual(hi);
        }
    } else {
        const double bound = kernel.domain_bound();
        double x = std::isinf(bound) ? -1.0 : -0.5;
        for (int i = 0; i < 2000; ++i) {
            lo = x / l;
            f_lo = residual(lo);
            if (f_lo > 0.0) break;
            x = std::isinf(bound) ? 2.0 * x : 0.5 * (x + bound);
        }
        if (!(f_lo > 0.0)) throw ConvergenceError(lo, f_lo);
    }

    double best = std::abs(f_lo) < std::abs(f_hi) ? lo : hi;
    double best_residual = std::min(std::abs(f_lo), std::abs(f_hi));
    auto record = [&](double beta, double f) {
        if (f > 0.0) {
            lo = beta;
            f_lo = f;
        } else {
            hi = beta;
            f_hi = f;
        }
        if (std::abs(f) < best_residual) {
            best = beta;
            best_residual = std::abs(f);
        }
    };

    double current = options.initial.value_or(asymptote);
    const double scale = 1e-3 / l;
    for (int it = 0; it < options.max_iterations; ++it) {
        report.iterations = it + 1;
        double next = std::numeric_limits<double>::quiet_NaN();
        if (current > lo && current < hi) {
            try {
                next = newton_update(kernel, n, alpha, l, current);
            } catch (const DomainError&) {
            }
        } else if (it == 0) {
            // The initial guess may sit outside a tight bracket (for instance
            // the asymptote when beta < 0); its Newton step can still be useful.
            try {
                next = newton_update(kernel, n, alpha, l, current);
            } catch (const DomainError&) {
            }
        }
        // A Newton step that does not move the iterate means it is a root to
        // working precision.
        if (next == current && std::abs(current - best) == 0.0 && best_residual <= tol) break;
        if (!std::isfinite(next) || !(next > lo && next < hi) || next == current) {
            next = 0.5 * (lo + hi);
            ++report.bisection_steps;
        }
        const double f = residual(next);
        const double step = std::abs(next - current);
        record(next, f);
        current = next;
        if (f == 0.0) break;
        // Newton converges quadratically, so once the step is tiny the
        // remaining error is far below it.
        if (std::abs(f) <= tol && step <= 1e-13 * (std::abs(next) + scale)) break;
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * (std::abs(lo) + std::abs(hi)))
            break;
    }

    report.beta = best;
    report.residual = best_residual;
    if (!(best_residual <= tol)) throw ConvergenceError(best, best_residual);
    return report;
}

inline double solve_beta(const Kernel& kernel, int n, double alpha, double l,
                         const SolveOptions& options = {}) {
    return solve_beta_report(kernel, n, alpha, l, options).beta;
}

/// Tabulated beta(l) on a log-spaced grid, interpolated by cubic Hermite
/// segments in log(l) with exact node slopes from implicit differentiation
/// (dbeta/dl = -l^{n-1} K(beta l) / dI/dbeta), limited to keep every segment
/// monotone. The grid runs from zero_l / 100 to where beta is within a
/// relative 1e-11 of its asymptote. Shorter lengths are solved directly;
/// longer ones, and +inf, map to the asymptote.
class BetaTable {
  public:
    struct Node {
        double l;
        double beta;
    };

    static constexpr double saturation = 1e-11;

    static BetaTable build(const Kernel& kernel, int n, double alpha, std::size_t grid_size = 256,
                           double tolerance = 1e-10) {
        if (grid_size < 16) throw ParameterError("beta grid needs at least 16 nodes");
        require_rvde_admissible(kernel, n);
        if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ParameterError("alpha must be > 0");

        BetaTable table(kernel, n, alpha, tolerance);
        const double l_min = table.zero_l_ / 100.0;
        double l_max = table.zero_l_;
        for (int i = 0; i < 200; ++i) {
            if (table.solve(l_max) >= (1.0 - saturation) * table.asymptote_) break;
            l_max *= 2.0;
        }
        // Shrink to the saturation length itself; past it beta is flat to
        // working precision and nodes there would not be strictly increasing.
        double l_low = l_max / 2.0;
        for (int i = 0; i < 40 && l_max > 1.001 * l_low; ++i) {
            const double mid = std::sqrt(l_low * l_max);
            (table.solve(mid) >= (1.0 - saturation) * table.asymptote_ ? l_max : l_low) = mid;
        }

        // Align the log grid so zero_l is a node: beta(zero_l) = 0 exactly.
        table.u_min_ = std::log(l_min);
        const double decades = std::log(table.zero_l_) - table.u_min_;
        const double span = std::log(l_max) - table.u_min_;
        const auto below = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::floor(decades / span * (grid_size - 1))));
        table.u_step_ = decades / static_cast<double>(below);
        l_max = std::exp(table.u_min_ + table.u_step_ * static_cast<double>(grid_size - 1));
        table.nodes_.resize(grid_size);
        table.slopes_.resize(grid_size);
        std::optional<double> warm;
        for (std::size_t i = 0; i < grid_size; ++i) {
            const double l = i == below           ? table.zero_l_
                             : i + 1 == grid_size ? l_max
                                                  : std::exp(table.u_min_ + table.u_step_ * i);
            SolveOptions opts{tolerance, 200, warm};
            const double beta = solve_beta(kernel, n, alpha, l, opts);
            table.nodes_[i] = {l, beta};
            warm = beta;
            // d beta / d log(l)
            const double dens = std::exp(n * std::log(l) + log_profile(kernel, beta * l));
            table.slopes_[i] = -dens / radial_integral_dbeta(kernel, beta, l, n);
        }
        for (std::size_t i = 1; i < grid_size; ++i) {
            if (!(table.nodes_[i].beta > table.nodes_[i - 1].beta)) {
                throw ConvergenceError(table.nodes_[i].beta, 0.0);
            }
        }
        table.limit_slopes();
        return table;
    }

    double lookup(double l) const {
        if (std::isinf(l) && l > 0.0) return asymptote_;
        if (!(l > 0.0)) throw ParameterError("ray length must be positive");
        if (l < nodes_.front().l) return std::min(solve(l), nodes_.front().beta);
        // The grid ends where beta is within saturation of the asymptote.
        if (l >= nodes_.back().l) return l == nodes_.back().l ? nodes_.back().beta : asymptote_;
        const double u = std::log(l);
        const auto last = nodes_.size() - 1;
        auto i = static_cast<std::size_t>(std::clamp((u - u_min_) / u_step_, 0.0,
                                                     static_cast<double>(last - 1)));
        // Grid nodes are exp() of the uniform u values; correct for rounding.
        while (i > 0 && l < nodes_[i].l) --i;
        while (i + 1 < last && l > nodes_[i + 1].l) ++i;
        if (l == nodes_[i].l) return nodes_[i].beta;
        if (l == nodes_[i + 1].l) return nodes_[i + 1].beta;
        const double u0 = std::log(nodes_[i].l);
        const double h = std::log(nodes_[i + 1].l) - u0;
        const double s = (u - u0) / h;
        const double s2 = s * s;
        const double s3 = s2 * s;
        return (2 * s3 - 3 * s2 + 1) * nodes_[i].beta + (s3 - 2 * s2 + s) * h * slopes_[i] +
               (-2 * s3 + 3 * s2) * nodes_[i + 1].beta + (s3 - s2) * h * slopes_[i + 1];
    }

    /// Direct solve (no interpolation).
    double solve(double l) const {
        return solve_beta(kernel_, n_, alpha_, l, SolveOptions{tolerance_, 200, std::nullopt});
    }

    const Kernel& kernel() const noexcept { return kernel_; }
    int dim() const noexcept { return n_; }
    double alpha() const noexcept { return alpha_; }
    double asymptote() const noexcept { return asymptote_; }
    double zero_l() const noexcept { return zero_l_; }
    double tolerance() const noexcept { return tolerance_; }
    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    /// Node slopes d beta / d log(l) after monotonicity limiting.
    const std::vector<double>& slopes() const noexcept { return slopes_; }

  private:
    BetaTable(const Kernel& kernel, int n, double alpha, double tolerance)
        : kernel_(kernel),
          n_(n),
          alpha_(alpha),
          tolerance_(tolerance),
          asymptote_(solve_beta_at_infinity(kernel, n, alpha)),
          zero_l_(beta_zero_length(n, alpha)) {}

    // Fritsch-Carlson limiter: keeps each Hermite segment monotone.
    void limit_slopes() {
        for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
            const double h = std::log(nodes_[i + 1].l) - std::log(nodes_[i].l);
            const double secant = (nodes_[i + 1].beta - nodes_[i].beta) / h;
            slopes_[i] = std::max(0.0, slopes_[i]);
            slopes_[i + 1] = std::max(0.0, slopes_[i + 1]);
            const double a = slopes_[i] / secant;
            const double b = slopes_[i + 1] / secant;
            const double r2 = a * a + b * b;
            if (r2 > 9.0) {
                const double tau = 3.0 / std::sqrt(r2);
                slopes_[i] = tau * a * secant;
                slopes_[i + 1] = tau * b * secant;
            }
        }
    }

    Kernel kernel_;
    int n_;
    double alpha_;
    double tolerance_;
    double asymptote_;
    double zero_l_;
    double u_min_ = 0.0;
    double u_step_ = 1.0;
    std::vector<Node> nodes_;
    std::vector<double> slopes_;
};

inline BetaTable build_beta_table(const Kernel& kernel, int n, double alpha,
                                  std::size_t grid_size = 256, double tolerance = 1e-10) {
    return BetaTable::build(kernel, n, alpha, grid_size, tolerance);
}

inline double lookup_beta(const BetaTable& table, double l) { return table.lookup(l); }

}  // namespace rvde
