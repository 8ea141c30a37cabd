#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "rvde/baselines.hpp"
#include "support/oracles.hpp"

using namespace rvde;
using Catch::Approx;

namespace {

std::shared_ptr<const PointSet> shared(std::vector<std::vector<double>> rows) {
    return std::make_shared<const PointSet>(Matrix::from_rows(rows));
}

Matrix random_matrix(std::size_t m, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Matrix out(m, n);
    for (auto& v : out.values) v = normal(rng);
    return out;
}

}  // namespace

TEST_CASE("KDE single point values", "[kde]") {
    const double x[] = {0.0};
    const auto g = KdeModel::fit(shared({{0.0}}), Kernel::gaussian(), 1.0);
    CHECK(g.log_density(x) == Approx(-0.5 * std::log(2 * std::numbers::pi)).epsilon(1e-14));
    const auto e = KdeModel::fit(shared({{0.0}}), Kernel::exponential(), 1.0);
    CHECK(e.log_density(x) == Approx(std::log(0.5)).epsilon(1e-14));
    const double y[] = {1.5};
    const auto wide = KdeModel::fit(shared({{0.0}}), Kernel::exponential(), 2.0);
    CHECK(wide.density(y) == Approx(0.25 * std::exp(-0.75)).epsilon(1e-14));
    CHECK_THROWS_AS(KdeModel::fit(shared({{0.0}}), Kernel::exponential(), 0.0), ParameterError);
    const double bad[] = {0.0, 0.0};
    CHECK_THROWS_AS(e.log_density(bad), DimensionError);
}

TEST_CASE("KDE is the average of single-point estimators", "[kde]") {
    const auto both = KdeModel::fit(shared({{-1.0, 0.0}, {1.0, 0.5}}), Kernel::rational(4), 0.7);
    const auto a = KdeModel::fit(shared({{-1.0, 0.0}}), Kernel::rational(4), 0.7);
    const auto b = KdeModel::fit(shared({{1.0, 0.5}}), Kernel::rational(4), 0.7);
    for (double t : {-2.0, 0.0, 0.3, 1.9}) {
        const double x[] = {t, 0.1 * t};
        CHECK(both.density(x) == Approx(0.5 * (a.density(x) + b.density(x))).epsilon(1e-13));
    }
}

TEST_CASE("KDE stays finite far from the data", "[kde]") {
    const auto k = KdeModel::fit(shared({{0.0}}), Kernel::gaussian(), 0.01);
    const double far[] = {100.0};
    const double v = k.log_density(far);
    CHECK(std::isfinite(v));
    CHECK(v == Approx(-0.5 * 1e8 - std::log(0.01) - 0.5 * std::log(2 * std::numbers::pi)));
}

TEST_CASE("KDE integrates to one", "[kde]") {
    for (const auto& k : {Kernel::gaussian(), Kernel::exponential()}) {
        const auto model = KdeModel::fit(shared({{0.0, 0.0}, {1.0, 0.5}}), k, 0.5);
        // Midpoint rule on a wide box.
        const double lo = -12.0;
        const double hi = 13.0;
        const int cells = 800;
        const double step = (hi - lo) / cells;
        double mass = 0.0;
        for (int i = 0; i < cells; ++i)
            for (int j = 0; j < cells; ++j) {
                const double x[] = {lo + (i + 0.5) * step, lo + (j + 0.5) * step};
                mass += model.density(x);
            }
        CHECK(mass * step * step == Approx(1.0).margin(0.01));
    }
}

TEST_CASE("adaptive bandwidth factors", "[adakde]") {
    const double pilot[] = {std::log(0.25), std::log(1.0)};
    const auto [g, lambdas] = bandwidth_factors(pilot);
    CHECK(g == Approx(0.5).epsilon(1e-15));
    REQUIRE(lambdas.size() == 2);
    CHECK(lambdas[0] == Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(lambdas[1] == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));

    const double underflow[] = {0.0, -std::numeric_limits<double>::infinity()};
    try {
        bandwidth_factors(underflow);
        FAIL("underflow accepted");
    } catch (const PilotUnderflow& e) {
        CHECK(e.index() == 1);
    }
    CHECK_THROWS_AS(bandwidth_factors({}), EmptyDataset);
}

TEST_CASE("AdaKDE on a symmetric ring equals a rescaled KDE", "[adakde]") {
    std::vector<std::vector<double>> ring;
    for (int i = 0; i < 8; ++i) {
        const double a = 2 * std::numbers::pi * i / 8;
        ring.push_back({std::cos(a), std::sin(a)});
    }
    const auto pts = shared(ring);
    const auto ada = AdaKdeModel::fit(pts, Kernel::gaussian(), 0.4);
    for (double l : ada.lambdas()) CHECK(l == Approx(1.0).epsilon(1e-12));
    const auto kde = KdeModel::fit(pts, Kernel::gaussian(), 0.4);
    for (double t : {0.0, 0.4, 1.3}) {
        const double x[] = {t, 0.5 * t};
        CHECK(ada.log_density(x) == Approx(kde.log_density(x)).epsilon(1e-12));
    }
}

TEST_CASE("AdaKDE widens bandwidths at outliers", "[adakde]") {
    const auto ada = AdaKdeModel::fit(shared({{0.0}, {0.1}, {0.2}, {0.15}, {5.0}}),
                                      Kernel::exponential(), 0.3);
    const auto& l = ada.lambdas();
    for (std::size_t i = 0; i < 4; ++i) CHECK(l[4] > l[i]);
}

TEST_CASE("AdaKDE pilot includes each point's own term", "[adakde]") {
    // Far apart points with a narrow kernel: the pilot at each point is the
    // self term alone, so it stays finite and the factors are all equal.
    const auto ada = AdaKdeModel::fit(shared({{0.0}, {1e4}}), Kernel::gaussian(), 0.01);
    CHECK(ada.lambdas()[0] == Approx(1.0).epsilon(1e-12));
    CHECK(ada.lambdas()[1] == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("CVDE single point has the analytic volume", "[cvde]") {
    const auto model = CvdeModel::fit(shared({{0.0}}), Kernel::exponential(), 1.0, 50, 1);
    CHECK(model.volumes()[0] == Approx(2.0).epsilon(1e-14));
    for (double t : {-1.0, 0.0, 2.5}) {
        const double x[] = {t};
        CHECK(model.density(x) == Approx(0.5 * std::exp(-std::abs(t))).epsilon(1e-14));
    }
}

TEST_CASE("CVDE two points in one dimension", "[cvde]") {
    const auto model = CvdeModel::fit(shared({{0.0}, {1.0}}), Kernel::exponential(), 1.0, 4000, 2);
    // One bounded ray to 0.5 and one unbounded ray: vol = (1 - e^{-1/2}) + 1.
    const double want = 2.0 - std::exp(-0.5);
    CHECK(want == Approx(1.39347).epsilon(1e-5));
    // Each direction contributes 2 (1 - e^{-1/2}) or 2 with probability 1/2.
    const double se = std::exp(-0.5) / std::sqrt(4000.0);
    CHECK(std::abs(model.volumes()[0] - want) <= 3 * se);
    CHECK(std::abs(model.volumes()[1] - want) <= 3 * se);
    CHECK_THROWS_AS(CvdeModel::fit(shared({{0.0}}), Kernel::exponential(), 1.0, 0, 1),
                    ParameterError);
}

TEST_CASE("CVDE cells carry equal mass", "[cvde]") {
    // 1-D: each cell has a left and a right ray, so the Monte-Carlo volume
    // is a two-valued average with a known standard error.
    const auto pts = shared({{0.0}, {0.7}, {3.0}});
    const double h = 0.5;
    const std::size_t draws = 200;
    const auto model = CvdeModel::fit(pts, Kernel::exponential(), h, draws, 3);
    const double bounds[] = {-40.0, 0.35, 1.85, 45.0};
    const double centers[] = {0.0, 0.7, 3.0};
    auto ray = [&](double l) { return std::isinf(l) ? h : h * (1.0 - std::exp(-l / h)); };
    for (int c = 0; c < 3; ++c) {
        boost::math::quadrature::gauss_kronrod<double, 61> gk;
        const double mass = gk.integrate(
            [&](double t) {
                const double x[] = {t};
                return model.density(x);
            },
            bounds[c], bounds[c + 1], 15, 1e-12);
        const double left = ray(c == 0 ? INFINITY : centers[c] - bounds[c]);
        const double right = ray(c == 2 ? INFINITY : bounds[c + 1] - centers[c]);
        const double exact = left + right;
        const double se = std::abs(left - right) / std::sqrt(static_cast<double>(draws));
        CHECK(std::abs(mass - 1.0 / 3.0) <= 3.0 * (1.0 / 3.0) * se / exact + 1e-9);
        // With the exact volume the cell mass is exactly 1/m.
        CHECK(mass * model.volumes()[c] / exact == Approx(1.0 / 3.0).epsilon(1e-8));
    }
}

TEST_CASE("CVDE jumps across a cell boundary", "[cvde]") {
    const auto model = CvdeModel::fit(shared({{0.0}, {1.0}, {1.4}}), Kernel::exponential(), 1.0, 10, 4);
    const double left[] = {0.5 - 1e-9};
    const double right[] = {0.5 + 1e-9};
    const double a = model.density(left);
    const double b = model.density(right);
    CHECK(std::abs(a - b) > 1e-2 * std::max(a, b));
}

TEST_CASE("CVDE is deterministic and thread independent", "[cvde]") {
    const auto pts = std::make_shared<const PointSet>(random_matrix(50, 3, 5));
    const auto a = CvdeModel::fit(pts, Kernel::rational(4), 0.5, 20, 99, 1);
    const auto b = CvdeModel::fit(pts, Kernel::rational(4), 0.5, 20, 99, 3);
    CHECK(a.volumes() == b.volumes());
    const auto rays = cast_cvde_rays(*pts, 20, 99);
    const auto c = CvdeModel::fit(pts, Kernel::rational(4), 0.5, rays);
    CHECK(a.volumes() == c.volumes());
}

TEST_CASE("bandwidth to alpha conversion", "[convert]") {
    CHECK(alpha_from_bandwidth(Kernel::exponential(), 2, 2.0) == Approx(4.0).epsilon(1e-15));
    CHECK(alpha_from_bandwidth(Kernel::rational(11), 10, 1.0) == Approx(0.1).epsilon(1e-15));
    CHECK(alpha_from_bandwidth(Kernel::gaussian(), 1, 1.0) ==
          Approx(std::sqrt(std::numbers::pi / 2)).epsilon(1e-15));
    CHECK(alpha_from_bandwidth(Kernel::rational(3), 3, 2.0) ==
          Approx(8.0 * alpha_from_bandwidth(Kernel::rational(3), 3, 1.0)).epsilon(1e-15));
    CHECK_THROWS_AS(alpha_from_bandwidth(Kernel::rational(1), 2, 1.0), NotIntegrable);
    CHECK_THROWS_AS(alpha_from_bandwidth(Kernel::exponential(), 2, -1.0), ParameterError);
    double previous = 0.0;
    for (double h = 0.01; h < 10.0; h *= 1.3) {
        const double a = alpha_from_bandwidth(Kernel::rational(6), 5, h);
        CHECK(a > previous);
        CHECK(bandwidth_from_alpha(Kernel::rational(6), 5, a) == Approx(h).epsilon(1e-13));
        previous = a;
    }
}
