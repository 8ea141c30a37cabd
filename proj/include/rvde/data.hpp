#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rvde/error.hpp"
#include "rvde/geometry.hpp"
#include "rvde/parallel.hpp"

namespace rvde {

enum class SyntheticFamily { gaussian, laplace, dirichlet, gaussian_mixture };

inline std::string to_string(SyntheticFamily f) {
    switch (f) {
        case SyntheticFamily::gaussian: return "gaussian";
        case SyntheticFamily::laplace: return "laplace";
        case SyntheticFamily::dirichlet: return "dirichlet";
        case SyntheticFamily::gaussian_mixture: return "mixture";
    }
    return "?";
}

/// Synthetic benchmark distributions in n dimensions:
///  - gaussian: standard normal
///  - laplace: independent standard Laplace coordinates
///  - dirichlet: (n+1)-part Dirichlet with concentration 1/(n+1), last
///    coordinate dropped so the data has a proper density in R^n
///  - gaussian_mixture: 0.5 N(-0.5 e1, 0.1^2 I) + 0.5 N(0.5 e1, 10^2 I)
struct SyntheticSpec {
    SyntheticFamily family = SyntheticFamily::gaussian;
    int n = 1;
    double dirichlet_concentration = 0.0;  ///< 0 selects 1 / (n + 1)
    double mixture_offset = 0.5;
    double mixture_sigma1 = 0.1;
    double mixture_sigma2 = 10.0;
    double mixture_weight1 = 0.5;

    double concentration() const {
        return dirichlet_concentration > 0.0 ? dirichlet_concentration : 1.0 / (n + 1);
    }

    void validate() const {
        if (n < 1) throw ParameterError("dimension must be >= 1");
        if (dirichlet_concentration < 0.0) throw ParameterError("concentration must be > 0");
        if (!(mixture_sigma1 > 0.0) || !(mixture_sigma2 > 0.0))
            throw ParameterError("mixture standard deviations must be > 0");
        if (!(mixture_weight1 > 0.0 && mixture_weight1 < 1.0))
            throw ParameterError("mixture weight must lie in (0, 1)");
    }
};

struct LabeledSample {
    PointSet train;
    Matrix test;
    SyntheticSpec spec;
    std::uint64_t seed;
};

namespace detail {

inline void draw_synthetic(const SyntheticSpec& spec, std::mt19937_64& rng, std::span<double> out) {
    const auto n = static_cast<std::size_t>(spec.n);
    switch (spec.family) {
        case SyntheticFamily::gaussian: {
            std::normal_distribution<double> normal;
            for (auto& v : out) v = normal(rng);
            break;
        }
        case SyntheticFamily::laplace: {
            std::exponential_distribution<double> expo;
            for (auto& v : out) v = expo(rng) - expo(rng);
            break;
        }
        case SyntheticFamily::dirichlet: {
            std::gamma_distribution<double> gamma(spec.concentration(), 1.0);
            std::vector<double> parts(n + 1);
            double total = 0.0;
            do {
                total = 0.0;
                for (auto& g : parts) {
                    g = gamma(rng);
                    total += g;
                }
            } while (!(total > 0.0));
            for (std::size_t i = 0; i < n; ++i) out[i] = parts[i] / total;
            break;
        }
        case SyntheticFamily::gaussian_mixture: {
            std::uniform_real_distribution<double> unit;
            std::normal_distribution<double> normal;
            const bool first = unit(rng) < spec.mixture_weight1;
            const double sigma = first ? spec.mixture_sigma1 : spec.mixture_sigma2;
            for (auto& v : out) v = sigma * normal(rng);
            out[0] += first ? -spec.mixture_offset : spec.mixture_offset;
            break;
        }
    }
}

inline double log_normal_isotropic(std::span<const double> x, double shift0, double sigma) {
    double q = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double z = (x[i] - (i == 0 ? shift0 : 0.0)) / sigma;
        q += z * z;
    }
    const double n = static_cast<double>(x.size());
    return -0.5 * q - n * std::log(sigma) - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

}  // namespace detail

/// count x n i.i.d. draws; deterministic for a given seed.
inline Matrix draw_synthetic(const SyntheticSpec& spec, std::size_t count, std::uint64_t seed) {
    spec.validate();
    Matrix out(count, static_cast<std::size_t>(spec.n));
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < count; ++i) detail::draw_synthetic(spec, rng, out.row(i));
    return out;
}

inline LabeledSample generate(const SyntheticSpec& spec, std::size_t m_train, std::size_t m_test,
                              std::uint64_t seed) {
    if (m_train < 1 || m_test < 1) throw ParameterError("sample sizes must be >= 1");
    spec.validate();
    Matrix train = draw_synthetic(spec, m_train, derive_seed(seed, 1));
    Matrix test = draw_synthetic(spec, m_test, derive_seed(seed, 2));
    return {PointSet(std::move(train)), std::move(test), spec, seed};
}

/// Exact log-pdf; -inf outside the support.
inline double true_log_density(const SyntheticSpec& spec, std::span<const double> x) {
    if (x.size() != static_cast<std::size_t>(spec.n))
        throw DimensionError(static_cast<std::size_t>(spec.n), x.size());
    const double n = spec.n;
    switch (spec.family) {
        case SyntheticFamily::gaussian: return detail::log_normal_isotropic(x, 0.0, 1.0);
        case SyntheticFamily::laplace: {
            double s = 0.0;
            for (double v : x) s += std::abs(v);
            return -n * std::log(2.0) - s;
        }
        case SyntheticFamily::dirichlet: {
            const double a = spec.concentration();
            double sum = 0.0;
            double log_prod = 0.0;
            for (double v : x) {
                if (!(v > 0.0)) return -std::numeric_limits<double>::infinity();
                sum += v;
                log_prod += std::log(v);
            }
            const double last = 1.0 - sum;
            if (!(last > 0.0)) return -std::numeric_limits<double>::infinity();
            log_prod += std::log(last);
            return std::lgamma((n + 1) * a) - (n + 1) * std::lgamma(a) + (a - 1.0) * log_prod;
        }
        case SyntheticFamily::gaussian_mixture: {
            const double a = std::log(spec.mixture_weight1) +
                             detail::log_normal_isotropic(x, -spec.mixture_offset,
                                                          spec.mixture_sigma1);
            const double b = std::log1p(-spec.mixture_weight1) +
                             detail::log_normal_isotropic(x, spec.mixture_offset,
                                                          spec.mixture_sigma2);
            const double hi = std::max(a, b);
            return hi + std::log1p(std::exp(std::min(a, b) - hi));
        }
    }
    return 0.0;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline std::optional<double> parse_number(std::string_view cell) {
    cell = trim(cell);
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) return std::nullopt;
    return v;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                           : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

}  // namespace detail

struct CsvOptions {
    bool minmax = false;  ///< rescale each column to [0, 1]
};

/// Parses comma-separated numeric rows. A first row with any non-numeric cell
/// is treated as a header. Blank lines are skipped; NaN/inf are rejected.
inline Matrix parse_csv(std::istream& in, const CsvOptions& options = {}) {
    Matrix out;
    std::string line;
    std::size_t line_no = 0;
    bool first_content = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_commas(line);
        std::vector<double> row;
        row.reserve(cells.size());
        std::optional<std::size_t> bad;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const auto v = detail::parse_number(cells[c]);
            if (!v) {
                bad = c;
                break;
            }
            row.push_back(*v);
        }
        if (bad) {
            if (first_content) {
                first_content = false;
                continue;  // header
            }
            throw ParseError(line_no, *bad + 1, "non-numeric cell '" + std::string(cells[*bad]) + "'");
        }
        first_content = false;
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (!std::isfinite(row[c])) throw ParseError(line_no, c + 1, "non-finite value");
        }
        if (out.rows == 0) {
            out.cols = row.size();
        } else if (row.size() != out.cols) {
            throw ParseError(line_no, 0,
                             "expected " + std::to_string(out.cols) + " columns, found " +
                                 std::to_string(row.size()));
        }
        out.values.insert(out.values.end(), row.begin(), row.end());
        ++out.rows;
    }
    if (out.rows == 0) throw EmptyDataset();
    if (options.minmax) {
        for (std::size_t c = 0; c < out.cols; ++c) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            for (std::size_t r = 0; r < out.rows; ++r) {
                lo = std::min(lo, out(r, c));
                hi = std::max(hi, out(r, c));
            }
            const double span = hi - lo;
            for (std::size_t r = 0; r < out.rows; ++r)
                out(r, c) = span > 0.0 ? (out(r, c) - lo) / span : 0.0;
        }
    }
    return out;
}

inline Matrix load_csv_matrix(const std::string& path, const CsvOptions& options = {}) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    return parse_csv(in, options);
}

inline PointSet load_csv(const std::string& path, const CsvOptions& options = {}) {
    return PointSet(load_csv_matrix(path, options));
}

/// Removes exact duplicate rows, keeping the first occurrence.
inline Matrix drop_duplicate_rows(const Matrix& m, std::size_t* removed = nullptr) {
    std::vector<std::size_t> order(m.rows);
    std::iota(order.begin(), order.end(), 0);
    auto row_less = [&](std::size_t a, std::size_t b) {
        auto ra = m.row(a);
        auto rb = m.row(b);
        return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
    };
    std::stable_sort(order.begin(), order.end(), row_less);
    std::vector<bool> keep(m.rows, true);
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (!row_less(order[i - 1], order[i]) && !row_less(order[i], order[i - 1]))
            keep[order[i]] = false;
    }
    Matrix out;
    out.cols = m.cols;
    for (std::size_t r = 0; r < m.rows; ++r) {
        if (!keep[r]) continue;
        auto row = m.row(r);
        out.values.insert(out.values.end(), row.begin(), row.end());
        ++out.rows;
    }
    if (removed) *removed = m.rows - out.rows;
    return out;
}

inline Matrix select_rows(const Matrix& m, std::span<const std::size_t> rows) {
    Matrix out(rows.size(), m.cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto src = m.row(rows[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

/// Uniform split without replacement: round(fraction * m) rows go to the
/// first part, in their original order. Deterministic per seed.
inline std::pair<Matrix, Matrix> subsample_split(const Matrix& rows, double fraction,
                                                 std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw ParameterError("fraction must lie in (0, 1)");
    const auto take = static_cast<std::size_t>(std::llround(fraction * rows.rows));
    if (take == 0 || take == rows.rows) throw ParameterError("split leaves an empty part");
    std::vector<std::size_t> idx(rows.rows);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    // Fisher-Yates with an explicit index draw (portable across libraries).
    for (std::size_t i = idx.size() - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
        std::swap(idx[i], idx[j]);
    }
    std::vector<std::size_t> first(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
    std::vector<std::size_t> second(idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end());
    std::sort(first.begin(), first.end());
    std::sort(second.begin(), second.end());
    return {select_rows(rows, first), select_rows(rows, second)};
}

inline std::pair<PointSet, PointSet> subsample_split(const PointSet& ps, double fraction,
                                                     std::uint64_t seed) {
    auto [a, b] = subsample_split(ps.matrix(), fraction, seed);
    return {PointSet(std::move(a)), PointSet(std::move(b))};
}

inline void write_csv(std::ostream& out, const Matrix& m) {
    char buf[32];
    for (std::size_t r = 0; r < m.rows; ++r) {
        for (std::size_t c = 0; c < m.cols; ++c) {
            const auto res = std::to_chars(buf, buf + sizeof buf, m(r, c));
            if (c) out << ',';
            out.write(buf, res.ptr - buf);
        }
        out << '\n';
    }
}

}  // namespace rvde
