#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "rvde/error.hpp"
#include "rvde/parallel.hpp"

namespace rvde {

/// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}
    Matrix(std::size_t r, std::size_t c, std::vector<double> v)
        : rows(r), cols(c), values(std::move(v)) {
        if (values.size() != rows * cols) throw ParameterError("matrix size mismatch");
    }

    static Matrix from_rows(const std::vector<std::vector<double>>& rows_in) {
        Matrix m;
        m.rows = rows_in.size();
        m.cols = rows_in.empty() ? 0 : rows_in.front().size();
        m.values.reserve(m.rows * m.cols);
        for (const auto& r : rows_in) {
            if (r.size() != m.cols) throw DimensionError(m.cols, r.size());
            m.values.insert(m.values.end(), r.begin(), r.end());
        }
        return m;
    }

    std::span<const double> row(std::size_t i) const {
        return {values.data() + i * cols, cols};
    }
    std::span<double> row(std::size_t i) { return {values.data() + i * cols, cols}; }

    double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
    double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }

    bool operator==(const Matrix&) const = default;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline double distance(std::span<const double> a, std::span<const double> b) noexcept {
    return std::sqrt(squared_distance(a, b));
}

struct Neighbor {
    std::size_t id;
    double distance;
};

/// The generator set P: an m x n array of distinct finite points plus an exact
/// k-d tree for nearest-neighbor queries. Immutable after construction.
class PointSet {
  public:
    explicit PointSet(Matrix points) : points_(std::move(points)) {
        if (points_.rows == 0) throw EmptyDataset();
        if (points_.cols == 0) throw ParameterError("points must have dimension >= 1");
        for (std::size_t i = 0; i < points_.values.size(); ++i) {
            if (!std::isfinite(points_.values[i])) {
                throw ParameterError("non-finite coordinate at row " +
                                     std::to_string(i / points_.cols));
            }
        }
        reject_duplicates();
        build_index();
    }

    std::size_t size() const noexcept { return points_.rows; }
    std::size_t dim() const noexcept { return points_.cols; }
    std::span<const double> operator[](std::size_t i) const { return points_.row(i); }
    const Matrix& matrix() const noexcept { return points_; }

    /// Closest generator to x; ties resolve to the lowest row id.
    Neighbor nearest(std::span<const double> x) const {
        if (x.size() != dim()) throw DimensionError(dim(), x.size());
        Best best{std::numeric_limits<double>::infinity(), 0};
        search(0, x, best);
        return {best.id, std::sqrt(best.d2)};
    }

  private:
    struct Node {
        std::uint32_t begin;
        std::uint32_t end;
        std::int32_t left = -1;
        std::int32_t right = -1;
        std::int32_t axis = -1;
        double split = 0.0;
    };

    struct Best {
        double d2;
        std::size_t id;
    };

    static constexpr std::uint32_t kLeafSize = 8;

    void reject_duplicates() const {
        std::vector<std::size_t> order(size());
        std::iota(order.begin(), order.end(), 0);
        auto less = [&](std::size_t a, std::size_t b) {
            auto ra = points_.row(a);
            auto rb = points_.row(b);
            if (std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end()))
                return true;
            if (std::lexicographical_compare(rb.begin(), rb.end(), ra.begin(), ra.end()))
                return false;
            return a < b;
        };
        std::sort(order.begin(), order.end(), less);
        for (std::size_t i = 1; i < order.size(); ++i) {
            auto a = points_.row(order[i - 1]);
            auto b = points_.row(order[i]);
            if (std::equal(a.begin(), a.end(), b.begin())) {
                throw DuplicatePoints(std::min(order[i - 1], order[i]),
                                      std::max(order[i - 1], order[i]));
            }
        }
    }

    void build_index() {
        order_.resize(size());
        std::iota(order_.begin(), order_.end(), std::uint32_t{0});
        nodes_.clear();
        nodes_.reserve(2 * size() / kLeafSize + 2);
        build(0, static_cast<std::uint32_t>(size()));
    }

    std::int32_t build(std::uint32_t begin, std::uint32_t end) {
        const auto id = static_cast<std::int32_t>(nodes_.size());
        nodes_.push_back(Node{begin, end});
        if (end - begin <= kLeafSize) return id;

        std::size_t axis = 0;
        double widest = -1.0;
        for (std::size_t d = 0; d < dim(); ++d) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            for (std::uint32_t i = begin; i < end; ++i) {
                const double v = points_(order_[i], d);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            if (hi - lo > widest) {
                widest = hi - lo;
                axis = d;
            }
        }
        const std::uint32_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](std::uint32_t a, std::uint32_t b) {
                             return points_(a, axis) < points_(b, axis);
                         });
        const double split = points_(order_[mid], axis);
        const auto left = build(begin, mid);
        const auto right = build(mid, end);
        Node& node = nodes_[static_cast<std::size_t>(id)];
        node.axis = static_cast<std::int32_t>(axis);
        node.split = split;
        node.left = left;
        node.right = right;
        return id;
    }

    void search(std::int32_t node_id, std::span<const double> x, Best& best) const {
        const Node& node = nodes_[static_cast<std::size_t>(node_id)];
        if (node.axis < 0) {
            for (std::uint32_t i = node.begin; i < node.end; ++i) {
                const std::size_t id = order_[i];
                const double d2 = squared_distance(x, points_.row(id));
                if (d2 < best.d2 || (d2 == best.d2 && id < best.id)) best = {d2, id};
            }
            return;
        }
        // Left subtree holds coordinates <= split, right subtree >= split.
        const double diff = x[static_cast<std::size_t>(node.axis)] - node.split;
        const auto near = diff < 0.0 ? node.left : node.right;
        const auto far = diff < 0.0 ? node.right : node.left;
        search(near, x, best);
        // Ties must still be visited: a lower id might sit on the far side.
        if (diff * diff <= best.d2) search(far, x, best);
    }

    Matrix points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
};

inline PointSet build_point_set(Matrix points) { return PointSet(std::move(points)); }

inline Neighbor nearest(const PointSet& ps, std::span<const double> x) { return ps.nearest(x); }

/// Exit of a ray from its Voronoi cell: length and the generator whose
/// bisector bounds it (`bound_by == size()` when the ray is unbounded).
struct RayHit {
    double length;
    std::size_t bound_by;
};

/// Casts the ray p + t * direction through the cell of p. The direction need
/// not be normalized here; the returned length is in units of |direction|.
inline RayHit cast_ray(const PointSet& ps, std::size_t p, std::span<const double> direction) {
    const auto origin = ps[p];
    const std::size_t n = ps.dim();
    RayHit hit{std::numeric_limits<double>::infinity(), ps.size()};
    for (std::size_t q = 0; q < ps.size(); ++q) {
        if (q == p) continue;
        const auto other = ps[q];
        double along = 0.0;
        double d2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double delta = other[i] - origin[i];
            along += direction[i] * delta;
            d2 += delta * delta;
        }
        // q never bounds a ray that points away from it.
        if (along <= 0.0) continue;
        const double lq = d2 / (2.0 * along);
        if (lq < hit.length) hit = {lq, q};
    }
    return hit;
}

/// Length of the segment of the ray from generator p along a unit direction
/// that stays inside the Voronoi cell of p; +inf for unbounded directions.
inline double ray_length(const PointSet& ps, std::size_t p, std::span<const double> direction) {
    if (p >= ps.size()) throw ParameterError("generator id out of range");
    if (direction.size() != ps.dim()) throw DimensionError(ps.dim(), direction.size());
    double norm2 = 0.0;
    for (double v : direction) norm2 += v * v;
    if (!(norm2 > 0.0) || !std::isfinite(norm2)) throw DegenerateDirection();
    if (std::abs(std::sqrt(norm2) - 1.0) > 1e-9) {
        throw ParameterError("ray direction must have unit norm");
    }
    return cast_ray(ps, p, direction).length;
}

struct GabrielEdge {
    std::size_t p;
    std::size_t q;
    double length;

    bool operator==(const GabrielEdge&) const = default;
};

struct GabrielGraph {
    std::size_t vertex_count = 0;
    std::vector<GabrielEdge> edges;  // p < q, sorted lexicographically
};

/// Gabriel graph: (p, q) is an edge iff no third generator lies strictly inside
/// the ball with diameter pq. Points on the sphere keep the edge, so the
/// midpoint belongs to C(p) and C(q) as closed cells.
///
/// Any r strictly inside that ball is strictly closer to p than q is, so for
/// each p only the neighbors preceding q in distance order are tested.
inline GabrielGraph gabriel_graph(const PointSet& ps, unsigned threads = 1) {
    const std::size_t m = ps.size();
    const std::size_t n = ps.dim();
    std::vector<std::vector<GabrielEdge>> per_vertex(m);

    parallel_for(m, threads, [&](std::size_t p) {
        std::vector<double> d2(m);
        for (std::size_t q = 0; q < m; ++q) d2[q] = squared_distance(ps[p], ps[q]);
        std::vector<std::size_t> order;
        order.reserve(m);
        for (std::size_t q = 0; q < m; ++q)
            if (q != p) order.push_back(q);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return d2[a] < d2[b] || (d2[a] == d2[b] && a < b);
        });

        const auto pp = ps[p];
        for (std::size_t pos = 0; pos < order.size(); ++pos) {
            const std::size_t q = order[pos];
            if (q < p) continue;
            const auto qq = ps[q];
            // |r - mid|^2 - |p - q|^2 / 4 == <r - p, r - q>
            const double slack = 1e-9 * 0.25 * d2[q];
            bool blocked = false;
            for (std::size_t j = 0; j < pos && !blocked; ++j) {
                const std::size_t r = order[j];
                if (d2[r] >= d2[q]) break;
                const auto rr = ps[r];
                double dot = 0.0;
                for (std::size_t i = 0; i < n; ++i) dot += (rr[i] - pp[i]) * (rr[i] - qq[i]);
                blocked = dot < -slack;
            }
            if (!blocked) per_vertex[p].push_back({p, q, std::sqrt(d2[q])});
        }
        std::sort(per_vertex[p].begin(), per_vertex[p].end(),
                  [](const GabrielEdge& a, const GabrielEdge& b) { return a.q < b.q; });
    });

    GabrielGraph graph;
    graph.vertex_count = m;
    for (auto& edges : per_vertex)
        graph.edges.insert(graph.edges.end(), edges.begin(), edges.end());
    return graph;
}

}  // namespace rvde
