#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "rvde/beta_solver.hpp"
#include "rvde/error.hpp"
#include "rvde/geometry.hpp"
#include "rvde/kernels.hpp"
#include "rvde/parallel.hpp"

namespace rvde {

struct RvdeOptions {
    std::size_t beta_grid_size = 256;
    double beta_tol = 1e-10;
};

struct MidpointMode {
    std::size_t p;
    std::size_t q;
    std::vector<double> midpoint;
};

struct SegmentMode {
    std::size_t p;
    std::size_t q;
};

/// Modes of a fitted RVDE, classified through the Gabriel graph truncated at
/// length 2 epsilon, epsilon = (n alpha)^{1/n}.
struct ModeSet {
    std::vector<std::size_t> point_modes;
    std::vector<MidpointMode> midpoint_modes;
    std::vector<SegmentMode> segment_modes;
    double epsilon = 0.0;
};

/// Radial Voronoi density estimator
///     f(x) = K(beta(l(x)) d(x, p)) / (alpha m |S^{n-1}|),
/// p the nearest generator and l(x) the length of the ray from p through x
/// inside the Voronoi cell of p. Immutable once fitted.
class RvdeModel {
  public:
    static RvdeModel fit(std::shared_ptr<const PointSet> points, const Kernel& kernel,
                         double alpha, const RvdeOptions& options = {}) {
        if (!points) throw EmptyDataset();
        if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ParameterError("alpha must be > 0");
        const int n = static_cast<int>(points->dim());
        require_rvde_admissible(kernel, n);
        auto table = BetaTable::build(kernel, n, alpha, options.beta_grid_size, options.beta_tol);
        return RvdeModel(std::move(points), kernel, alpha, std::move(table));
    }

    static RvdeModel fit(PointSet points, const Kernel& kernel, double alpha,
                         const RvdeOptions& options = {}) {
        return fit(std::make_shared<const PointSet>(std::move(points)), kernel, alpha, options);
    }

    double log_density(std::span<const double> x) const {
        if (x.size() != points_->dim()) throw DimensionError(points_->dim(), x.size());
        const Neighbor near = points_->nearest(x);
        if (near.distance == 0.0) return -log_norm_;
        const auto p = (*points_)[near.id];
        std::vector<double> direction(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) direction[i] = (x[i] - p[i]) / near.distance;
        const double l = cast_ray(*points_, near.id, direction).length;
        const double beta = table_.lookup(l);
        // x lies in C(p), so d <= l and beta d stays inside the kernel domain.
        const double d = std::min(near.distance, l);
        return log_profile(kernel_, beta * d) - log_norm_;
    }

    double density(std::span<const double> x) const { return std::exp(log_density(x)); }

    /// Draws `count` samples (row-major count x n). Sample i uses its own
    /// substream derived from (seed, i), so output does not depend on threads.
    Matrix sample(std::uint64_t seed, std::size_t count, unsigned threads = 1) const {
        if (count < 1) throw ParameterError("sample count must be >= 1");
        const std::size_t n = points_->dim();
        Matrix out(count, n);
        parallel_for(count, threads, [&](std::size_t i) {
            SplitMix64 rng(derive_seed(seed, i));
            draw(rng, out.row(i));
        });
        return out;
    }

    ModeSet modes(unsigned threads = 1) const {
        const GabrielGraph graph = gabriel_graph(*points_, threads);
        const int n = static_cast<int>(points_->dim());
        ModeSet modes;
        modes.epsilon = beta_zero_length(n, alpha_);
        const double two_eps = 2.0 * modes.epsilon;
        const double tol = 1e-9 * (1.0 + two_eps);
        std::vector<bool> linked(points_->size(), false);
        for (const auto& e : graph.edges) {
            if (e.length > two_eps + tol) continue;
            linked[e.p] = linked[e.q] = true;
            if (std::abs(e.length - two_eps) <= tol) {
                modes.segment_modes.push_back({e.p, e.q});
            } else {
                std::vector<double> mid(points_->dim());
                for (std::size_t i = 0; i < mid.size(); ++i)
                    mid[i] = 0.5 * ((*points_)[e.p][i] + (*points_)[e.q][i]);
                modes.midpoint_modes.push_back({e.p, e.q, std::move(mid)});
            }
        }
        for (std::size_t p = 0; p < linked.size(); ++p)
            if (!linked[p]) modes.point_modes.push_back(p);
        return modes;
    }

    const PointSet& points() const noexcept { return *points_; }
    std::shared_ptr<const PointSet> shared_points() const noexcept { return points_; }
    const Kernel& kernel() const noexcept { return kernel_; }
    double alpha() const noexcept { return alpha_; }
    const BetaTable& beta_table() const noexcept { return table_; }
    /// 1 / (alpha m |S^{n-1}|)
    double norm_const() const noexcept { return std::exp(-log_norm_); }

  private:
    RvdeModel(std::shared_ptr<const PointSet> points, const Kernel& kernel, double alpha,
              BetaTable table)
        : points_(std::move(points)), kernel_(kernel), alpha_(alpha), table_(std::move(table)) {
        const int n = static_cast<int>(points_->dim());
        log_norm_ = std::log(alpha_) + std::log(static_cast<double>(points_->size())) +
                    log_unit_sphere_area(n);
    }

    void draw(SplitMix64& rng, std::span<double> out) const {
        const std::size_t n = points_->dim();
        const int dim = static_cast<int>(n);
        const std::size_t p = static_cast<std::size_t>(rng.uniform() * points_->size());
        const auto origin = (*points_)[std::min(p, points_->size() - 1)];

        std::vector<double> sigma(n);
        std::normal_distribution<double> normal;
        double norm2 = 0.0;
        do {
            norm2 = 0.0;
            for (auto& s : sigma) {
                s = normal(rng);
                norm2 += s * s;
            }
        } while (!(norm2 > 0.0));
        const double inv = 1.0 / std::sqrt(norm2);
        for (auto& s : sigma) s *= inv;

        const double l = cast_ray(*points_, std::min(p, points_->size() - 1), sigma).length;
        const double beta = table_.lookup(l);
        const double u = rng.uniform();
        const double t = invert_radial_cdf(beta, l, dim, u);
        for (std::size_t i = 0; i < n; ++i) out[i] = origin[i] + t * sigma[i];
    }

    // Solves int_0^t s^{n-1} K(beta s) ds = u * total for t in [0, l] by
    // bisection; total is alpha for finite l by construction of beta.
    double invert_radial_cdf(double beta, double l, int n, double u) const {
        const double log_total = log_radial_integral(kernel_, beta, l, n);
        const double log_target = std::log(u) + log_total;
        double lo = 0.0;
        double hi = l;
        if (std::isinf(l)) {
            hi = 1.0 / beta;
            while (log_radial_integral(kernel_, beta, hi, n) < log_target) hi *= 2.0;
        }
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            if (log_radial_integral(kernel_, beta, mid, n) < log_target)
                lo = mid;
            else
                hi = mid;
            if (hi - lo <= 1e-10 * hi) break;
        }
        return 0.5 * (lo + hi);
    }

    std::shared_ptr<const PointSet> points_;
    Kernel kernel_;
    double alpha_;
    BetaTable table_;
    double log_norm_ = 0.0;
};

inline RvdeModel fit(PointSet points, const Kernel& kernel, double alpha,
                     const RvdeOptions& options = {}) {
    return RvdeModel::fit(std::move(points), kernel, alpha, options);
}

inline double log_density(const RvdeModel& model, std::span<const double> x) {
    return model.log_density(x);
}

inline Matrix sample(const RvdeModel& model, std::uint64_t seed, std::size_t count) {
    return model.sample(seed, count);
}

inline ModeSet modes(const RvdeModel& model) { return model.modes(); }

/// Type-7 quantile (linear interpolation between order statistics) of
/// values at probability q in [0, 1].
inline double quantile_type7(std::vector<double> values, double q) {
    if (values.empty()) throw ParameterError("quantile of an empty set");
    std::sort(values.begin(), values.end());
    q = std::clamp(q, 0.0, 1.0);
    const double h = (values.size() - 1) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - lo) * (values[hi] - values[lo]);
}

/// Gabriel-graph heuristic for alpha: 2 epsilon is the ((m - 1) / |E|)
/// quantile of the edge lengths, so the truncated graph keeps about m - 1
/// edges (no cycles). Returns alpha = epsilon^n / n.
inline double select_alpha(const GabrielGraph& graph, std::size_t dim) {
    if (graph.vertex_count < 2) throw NeedsTwoPoints();
    if (graph.edges.empty()) throw ParameterError("Gabriel graph has no edges");
    std::vector<double> lengths;
    lengths.reserve(graph.edges.size());
    for (const auto& e : graph.edges) lengths.push_back(e.length);
    const double ratio = static_cast<double>(graph.vertex_count - 1) /
                         static_cast<double>(graph.edges.size());
    const double epsilon = 0.5 * quantile_type7(std::move(lengths), ratio);
    const double n = static_cast<double>(dim);
    return std::pow(epsilon, n) / n;
}

inline double select_alpha(const PointSet& points, unsigned threads = 1) {
    if (points.size() < 2) throw NeedsTwoPoints();
    return select_alpha(gabriel_graph(points, threads), points.dim());
}

}  // namespace rvde
