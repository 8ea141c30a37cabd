#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "rvde/error.hpp"
#include "rvde/geometry.hpp"
#include "rvde/kernels.hpp"
#include "rvde/parallel.hpp"

namespace rvde {

namespace detail {

/// Streaming log-sum-exp accumulator.
class LogSumExp {
  public:
    void add(double v) {
        if (v == -std::numeric_limits<double>::infinity()) return;
        if (v <= max_) {
            sum_ += std::exp(v - max_);
        } else {
            sum_ = sum_ * std::exp(max_ - v) + 1.0;
            max_ = v;
        }
    }
    double value() const {
        return sum_ == 0.0 ? -std::numeric_limits<double>::infinity() : max_ + std::log(sum_);
    }

  private:
    double max_ = -std::numeric_limits<double>::infinity();
    double sum_ = 0.0;
};

inline void check_bandwidth(double h) {
    if (!(h > 0.0) || !std::isfinite(h)) throw ParameterError("bandwidth must be > 0");
}

}  // namespace detail

/// Kernel density estimator with the radially symmetric normalized kernel
/// K_n(v) = K(|v|) / (|S^{n-1}| int_0^inf t^{n-1} K(t) dt).
class KdeModel {
  public:
    static KdeModel fit(std::shared_ptr<const PointSet> points, const Kernel& kernel, double h) {
        if (!points) throw EmptyDataset();
        detail::check_bandwidth(h);
        return KdeModel(std::move(points), kernel, h);
    }

    /// Evaluated in log space, so -inf only when every term is exactly zero.
    double log_density(std::span<const double> x) const {
        if (x.size() != points_->dim()) throw DimensionError(points_->dim(), x.size());
        detail::LogSumExp acc;
        const double inv_h = 1.0 / h_;
        for (std::size_t p = 0; p < points_->size(); ++p)
            acc.add(log_profile(kernel_, distance(x, (*points_)[p]) * inv_h));
        return acc.value() + log_norm_;
    }

    double density(std::span<const double> x) const { return std::exp(log_density(x)); }

    const Kernel& kernel() const noexcept { return kernel_; }
    double bandwidth() const noexcept { return h_; }
    const PointSet& points() const noexcept { return *points_; }
    /// 1 / (m h^n |S^{n-1}| tail_integral(K, n))
    double norm_const() const noexcept { return std::exp(log_norm_); }

  private:
    KdeModel(std::shared_ptr<const PointSet> points, const Kernel& kernel, double h)
        : points_(std::move(points)), kernel_(kernel), h_(h) {
        const int n = static_cast<int>(points_->dim());
        log_norm_ = -std::log(static_cast<double>(points_->size())) - n * std::log(h_) -
                    log_unit_sphere_area(n) - log_tail_integral(kernel_, n);
    }

    std::shared_ptr<const PointSet> points_;
    Kernel kernel_;
    double h_;
    double log_norm_ = 0.0;
};

inline double kde_log_density(const KdeModel& model, std::span<const double> x) {
    return model.log_density(x);
}

/// Local bandwidth factors lambda_p = (g / f_p)^{1/2} from log pilot
/// densities, g their geometric mean. Returns (g, lambdas).
inline std::pair<double, std::vector<double>> bandwidth_factors(std::span<const double> log_pilot) {
    if (log_pilot.empty()) throw EmptyDataset();
    double mean_log = 0.0;
    for (std::size_t p = 0; p < log_pilot.size(); ++p) {
        if (!std::isfinite(log_pilot[p])) throw PilotUnderflow(p);
        mean_log += log_pilot[p];
    }
    mean_log /= static_cast<double>(log_pilot.size());
    std::vector<double> lambdas(log_pilot.size());
    for (std::size_t p = 0; p < lambdas.size(); ++p)
        lambdas[p] = std::exp(0.5 * (mean_log - log_pilot[p]));
    return {std::exp(mean_log), std::move(lambdas)};
}

/// Adaptive KDE: per-point bandwidths h_p = h lambda_p with
/// lambda_p = (g / f_pilot(p))^{1/2}, g the geometric mean of the pilot
/// densities at the data points. The pilot is a KDE with the same h.
class AdaKdeModel {
  public:
    static AdaKdeModel fit(std::shared_ptr<const PointSet> points, const Kernel& kernel, double h,
                           unsigned threads = 1) {
        KdeModel pilot = KdeModel::fit(points, kernel, h);
        const std::size_t m = points->size();
        std::vector<double> log_pilot(m);
        parallel_for(m, threads,
                     [&](std::size_t p) { log_pilot[p] = pilot.log_density((*points)[p]); });
        auto [g, lambdas] = bandwidth_factors(log_pilot);
        return AdaKdeModel(std::move(pilot), g, std::move(lambdas));
    }

    double log_density(std::span<const double> x) const {
        const PointSet& pts = base_.points();
        if (x.size() != pts.dim()) throw DimensionError(pts.dim(), x.size());
        detail::LogSumExp acc;
        for (std::size_t p = 0; p < pts.size(); ++p) {
            acc.add(log_profile(base_.kernel(), distance(x, pts[p]) / local_h_[p]) -
                    dim_ * log_local_h_[p]);
        }
        return acc.value() + log_norm_;
    }

    double density(std::span<const double> x) const { return std::exp(log_density(x)); }

    const KdeModel& pilot() const noexcept { return base_; }
    double geometric_mean() const noexcept { return g_; }
    const std::vector<double>& lambdas() const noexcept { return lambdas_; }
    const std::vector<double>& local_bandwidths() const noexcept { return local_h_; }

  private:
    AdaKdeModel(KdeModel base, double g, std::vector<double> lambdas)
        : base_(std::move(base)), g_(g), lambdas_(std::move(lambdas)) {
        const PointSet& pts = base_.points();
        dim_ = static_cast<double>(pts.dim());
        local_h_.resize(lambdas_.size());
        log_local_h_.resize(lambdas_.size());
        for (std::size_t p = 0; p < lambdas_.size(); ++p) {
            local_h_[p] = base_.bandwidth() * lambdas_[p];
            log_local_h_[p] = std::log(local_h_[p]);
        }
        const int n = static_cast<int>(pts.dim());
        log_norm_ = -std::log(static_cast<double>(pts.size())) - log_unit_sphere_area(n) -
                    log_tail_integral(base_.kernel(), n);
    }

    KdeModel base_;
    double g_;
    std::vector<double> lambdas_;
    std::vector<double> local_h_;
    std::vector<double> log_local_h_;
    double dim_ = 1.0;
    double log_norm_ = 0.0;
};

inline AdaKdeModel adakde_fit(std::shared_ptr<const PointSet> points, const Kernel& kernel,
                              double h) {
    return AdaKdeModel::fit(std::move(points), kernel, h);
}

inline double adakde_log_density(const AdaKdeModel& model, std::span<const double> x) {
    return model.log_density(x);
}

/// Monte-Carlo ray lengths l(p, sigma) for mc_samples uniform directions per
/// generator. They depend only on the points and the seed, so one set serves
/// every bandwidth of a sweep.
struct CvdeRays {
    std::size_t mc_samples = 0;
    std::vector<double> lengths;  // m x mc_samples, row-major
};

inline CvdeRays cast_cvde_rays(const PointSet& points, std::size_t mc_samples,
                               std::uint64_t seed, unsigned threads = 1) {
    if (mc_samples < 1) throw ParameterError("CVDE needs at least one Monte-Carlo direction");
    const std::size_t m = points.size();
    const std::size_t n = points.dim();
    CvdeRays rays{mc_samples, std::vector<double>(m * mc_samples)};
    parallel_for(m, threads, [&](std::size_t p) {
        SplitMix64 rng(derive_seed(seed, p));
        std::normal_distribution<double> normal;
        std::vector<double> sigma(n);
        for (std::size_t s = 0; s < mc_samples; ++s) {
            double norm2 = 0.0;
            do {
                norm2 = 0.0;
                for (auto& v : sigma) {
                    v = normal(rng);
                    norm2 += v * v;
                }
            } while (!(norm2 > 0.0));
            const double inv = 1.0 / std::sqrt(norm2);
            for (auto& v : sigma) v *= inv;
            rays.lengths[p * mc_samples + s] = cast_ray(points, p, sigma).length;
        }
    });
    return rays;
}

/// Compactified Voronoi density estimator: f(x) = K(d(x, p) / h) / (m vol_p),
/// vol_p = int_{C(p)} K(d(y, p) / h) dy estimated radially as
/// |S^{n-1}| mean_sigma int_0^{l(p, sigma)} t^{n-1} K(t / h) dt.
/// Piecewise smooth, discontinuous across cell boundaries.
class CvdeModel {
  public:
    static CvdeModel fit(std::shared_ptr<const PointSet> points, const Kernel& kernel, double h,
                         const CvdeRays& rays) {
        if (!points) throw EmptyDataset();
        detail::check_bandwidth(h);
        if (rays.mc_samples < 1) throw ParameterError("CVDE needs at least one direction");
        const std::size_t m = points->size();
        if (rays.lengths.size() != m * rays.mc_samples)
            throw ParameterError("ray table does not match the point set");
        const int n = static_cast<int>(points->dim());
        const double log_area = log_unit_sphere_area(n);
        std::vector<double> log_volumes(m);
        for (std::size_t p = 0; p < m; ++p) {
            detail::LogSumExp acc;
            for (std::size_t s = 0; s < rays.mc_samples; ++s)
                acc.add(log_radial_integral(kernel, 1.0 / h, rays.lengths[p * rays.mc_samples + s],
                                            n));
            log_volumes[p] = log_area + acc.value() - std::log(static_cast<double>(rays.mc_samples));
        }
        return CvdeModel(std::move(points), kernel, h, rays.mc_samples, std::move(log_volumes));
    }

    static CvdeModel fit(std::shared_ptr<const PointSet> points, const Kernel& kernel, double h,
                         std::size_t mc_samples, std::uint64_t seed, unsigned threads = 1) {
        if (!points) throw EmptyDataset();
        detail::check_bandwidth(h);
        const CvdeRays rays = cast_cvde_rays(*points, mc_samples, seed, threads);
        return fit(std::move(points), kernel, h, rays);
    }

    double log_density(std::span<const double> x) const {
        const Neighbor near = points_->nearest(x);
        return log_profile(kernel_, near.distance / h_) - log_m_ - log_volumes_[near.id];
    }

    double density(std::span<const double> x) const { return std::exp(log_density(x)); }

    std::vector<double> volumes() const {
        std::vector<double> v(log_volumes_.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(log_volumes_[i]);
        return v;
    }
    const Kernel& kernel() const noexcept { return kernel_; }
    double bandwidth() const noexcept { return h_; }
    std::size_t mc_samples() const noexcept { return mc_samples_; }
    const PointSet& points() const noexcept { return *points_; }

  private:
    CvdeModel(std::shared_ptr<const PointSet> points, const Kernel& kernel, double h,
              std::size_t mc_samples, std::vector<double> log_volumes)
        : points_(std::move(points)),
          kernel_(kernel),
          h_(h),
          mc_samples_(mc_samples),
          log_volumes_(std::move(log_volumes)),
          log_m_(std::log(static_cast<double>(points_->size()))) {}

    std::shared_ptr<const PointSet> points_;
    Kernel kernel_;
    double h_;
    std::size_t mc_samples_;
    std::vector<double> log_volumes_;
    double log_m_;
};

inline CvdeModel cvde_fit(std::shared_ptr<const PointSet> points, const Kernel& kernel, double h,
                          std::size_t mc_samples, std::uint64_t seed) {
    return CvdeModel::fit(std::move(points), kernel, h, mc_samples, seed);
}

inline double cvde_log_density(const CvdeModel& model, std::span<const double> x) {
    return model.log_density(x);
}

/// Places RVDE on the bandwidth axis of the baselines:
/// alpha = h^n int_0^inf K(t) dt, with the one-dimensional tail integral
/// exactly as in the benchmark convention (note the mixed n-dimensional scale).
inline double alpha_from_bandwidth(const Kernel& kernel, int n, double h) {
    detail::check_bandwidth(h);
    if (n < 1) throw ParameterError("dimension must be >= 1");
    double tail = 0.0;
    switch (kernel.family()) {
        case KernelFamily::exponential: tail = 1.0; break;
        case KernelFamily::rational:
            if (kernel.exponent() <= 1) throw NotIntegrable("rational kernel needs k > 1");
            tail = 1.0 / (kernel.exponent() - 1);
            break;
        case KernelFamily::gaussian: tail = std::sqrt(std::numbers::pi / 2.0); break;
    }
    return std::pow(h, n) * tail;
}

/// Inverse of alpha_from_bandwidth.
inline double bandwidth_from_alpha(const Kernel& kernel, int n, double alpha) {
    return std::pow(alpha / alpha_from_bandwidth(kernel, 1, 1.0), 1.0 / n);
}

}  // namespace rvde
