#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rvde/baselines.hpp"
#include "rvde/config.hpp"
#include "rvde/data.hpp"
#include "rvde/estimator.hpp"
#include "rvde/parallel.hpp"

namespace rvde {

using LogDensityFn = std::function<double(std::span<const double>)>;

struct LoglikStats {
    double mean = 0.0;           ///< -inf when any test point underflows
    double std_over_test = 0.0;  ///< sample std of the finite log-densities
    std::size_t underflows = 0;
    std::size_t count = 0;
};

/// Mean test log-likelihood. Points with f = 0 are counted as underflows and
/// force the mean to -inf (no clipping). Values are reduced in index order,
/// so the result does not depend on the thread count.
inline LoglikStats evaluate_loglik(const LogDensityFn& log_density, const Matrix& test,
                                   unsigned threads = 1) {
    if (test.rows == 0) throw EmptyDataset();
    std::vector<double> values(test.rows);
    parallel_for(test.rows, threads, [&](std::size_t i) { values[i] = log_density(test.row(i)); });
    LoglikStats s;
    s.count = test.rows;
    double sum = 0.0;
    std::size_t finite = 0;
    for (double v : values) {
        if (v == -std::numeric_limits<double>::infinity()) {
            ++s.underflows;
        } else {
            sum += v;
            ++finite;
        }
    }
    const double finite_mean = finite ? sum / static_cast<double>(finite) : 0.0;
    double ss = 0.0;
    for (double v : values)
        if (v != -std::numeric_limits<double>::infinity()) ss += (v - finite_mean) * (v - finite_mean);
    s.std_over_test = finite > 1 ? std::sqrt(ss / static_cast<double>(finite - 1)) : 0.0;
    s.mean = s.underflows ? -std::numeric_limits<double>::infinity() : finite_mean;
    return s;
}

/// Empirical Hellinger distance (1 / 2N) sum_i (sqrt f(x_i) - sqrt rho(x_i))^2
/// over the test points. This is a test-set average, not the integral distance.
inline double evaluate_hellinger(const LogDensityFn& log_density, const LogDensityFn& log_truth,
                                 const Matrix& test, unsigned threads = 1) {
    if (test.rows == 0) throw EmptyDataset();
    std::vector<double> terms(test.rows);
    parallel_for(test.rows, threads, [&](std::size_t i) {
        const double a = std::exp(0.5 * log_density(test.row(i)));
        const double b = std::exp(0.5 * log_truth(test.row(i)));
        terms[i] = (a - b) * (a - b);
    });
    double sum = 0.0;
    for (double t : terms) sum += t;
    return sum / (2.0 * static_cast<double>(test.rows));
}

/// Train/test data of one run.
struct Dataset {
    std::shared_ptr<const PointSet> train;
    Matrix test;
    std::optional<SyntheticSpec> truth;
    std::size_t duplicates_dropped = 0;
};

/// Builds the data of one run. Synthetic sets are redrawn from run_seed. CSV
/// data keeps a fixed test split (seeded by the dataset seed) and resamples
/// the training part from run_seed when train_fraction < 1.
inline Dataset materialize(const config::DatasetConfig& cfg, std::uint64_t run_seed) {
    Dataset d;
    if (cfg.is_synthetic()) {
        SyntheticSpec spec = cfg.synthetic;
        auto sample = generate(spec, cfg.m_train, cfg.m_test, run_seed);
        d.train = std::make_shared<const PointSet>(std::move(sample.train));
        d.test = std::move(sample.test);
        d.truth = spec;
        return d;
    }
    Matrix train;
    if (cfg.kind == "points") {
        train = cfg.points;
        d.test = cfg.test_points ? *cfg.test_points : cfg.points;
    } else {
        const CsvOptions opts{cfg.minmax};
        Matrix all = load_csv_matrix(cfg.path, opts);
        if (!cfg.test_path.empty()) {
            d.test = load_csv_matrix(cfg.test_path, opts);
            if (d.test.cols != all.cols) throw DimensionError(all.cols, d.test.cols);
            train = std::move(all);
        } else {
            auto [test, rest] = subsample_split(all, cfg.test_fraction, derive_seed(cfg.seed, 0));
            d.test = std::move(test);
            train = std::move(rest);
        }
        if (cfg.train_fraction < 1.0)
            train = subsample_split(train, cfg.train_fraction, derive_seed(run_seed, 1)).first;
    }
    train = drop_duplicate_rows(train, &d.duplicates_dropped);
    d.train = std::make_shared<const PointSet>(std::move(train));
    return d;
}

using AnyModel = std::variant<RvdeModel, KdeModel, AdaKdeModel, CvdeModel>;

inline double model_log_density(const AnyModel& model, std::span<const double> x) {
    return std::visit([&](const auto& m) { return m.log_density(x); }, model);
}

/// alpha used by an RVDE estimator config: explicit, converted from h, or
/// selected by the Gabriel-graph heuristic.
inline double resolve_alpha(const config::EstimatorConfig& cfg, const PointSet& train,
                            unsigned threads = 1) {
    const int n = static_cast<int>(train.dim());
    if (cfg.alpha) return *cfg.alpha;
    if (cfg.h) return alpha_from_bandwidth(cfg.kernel.resolve(n), n, *cfg.h);
    return select_alpha(train, threads);
}

inline AnyModel fit_model(const config::EstimatorConfig& cfg,
                          std::shared_ptr<const PointSet> train, unsigned threads = 1) {
    const int n = static_cast<int>(train->dim());
    const Kernel kernel = cfg.kernel.resolve(n);
    if (cfg.estimator == "rvde")
        return RvdeModel::fit(train, kernel, resolve_alpha(cfg, *train, threads), cfg.rvde);
    const double h = cfg.h.value();
    if (cfg.estimator == "kde") return KdeModel::fit(std::move(train), kernel, h);
    if (cfg.estimator == "adakde") return AdaKdeModel::fit(std::move(train), kernel, h, threads);
    if (cfg.estimator == "cvde")
        return CvdeModel::fit(std::move(train), kernel, h, cfg.mc_samples, cfg.seed, threads);
    throw ParameterError("unknown estimator '" + cfg.estimator + "'");
}

/// One (estimator, bandwidth, run) cell of a sweep.
struct SweepRow {
    std::string estimator;
    std::string kernel;
    double h = 0.0;
    double alpha = 0.0;
    std::size_t run = 0;
    std::uint64_t seed = 0;
    double loglik_mean = std::numeric_limits<double>::quiet_NaN();
    double loglik_std_over_test = std::numeric_limits<double>::quiet_NaN();
    std::size_t underflows = 0;
    double hellinger = std::numeric_limits<double>::quiet_NaN();  ///< NaN when not requested
    double fit_sec = 0.0;
    double eval_sec = 0.0;
    std::string error;  ///< empty on success

    bool ok() const { return error.empty(); }
};

/// Statistics across runs of one (estimator, bandwidth) group. Failed rows
/// are excluded; std is the sample standard deviation (0 for a single run).
struct AggregateRow {
    std::string estimator;
    std::string kernel;
    double h = 0.0;      ///< mean over runs (only varies for the heuristic row)
    double alpha = 0.0;  ///< mean over runs
    std::size_t runs = 0;
    std::size_t failures = 0;
    double loglik_mean = std::numeric_limits<double>::quiet_NaN();
    double loglik_std = std::numeric_limits<double>::quiet_NaN();
    std::size_t underflows = 0;
    double hellinger_mean = std::numeric_limits<double>::quiet_NaN();
    double hellinger_std = std::numeric_limits<double>::quiet_NaN();
    double fit_sec = 0.0;
    double eval_sec = 0.0;
    double total_sec = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<AggregateRow> aggregates;
    std::map<std::string, AggregateRow> best;  ///< highest mean loglik per estimator
    std::string started_at;
    std::string finished_at;
};

inline constexpr const char* heuristic_estimator = "rvde-heuristic";
inline constexpr const char* results_schema = "# rvde-sweep-results v1";

namespace detail {

inline double mean_of(const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double std_of(const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    if (v.size() == 1) return 0.0;
    const double m = mean_of(v);
    if (!std::isfinite(m)) return std::numeric_limits<double>::quiet_NaN();
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace detail

/// Groups rows by (estimator, h); all heuristic rows form one group. Groups
/// keep the order of their first row.
inline std::vector<AggregateRow> aggregate_rows(const std::vector<SweepRow>& rows) {
    std::vector<AggregateRow> out;
    std::vector<std::vector<const SweepRow*>> members;
    for (const auto& r : rows) {
        const bool heuristic = r.estimator == heuristic_estimator;
        std::size_t g = 0;
        for (; g < out.size(); ++g)
            if (out[g].estimator == r.estimator && out[g].kernel == r.kernel &&
                (heuristic || out[g].h == r.h))
                break;
        if (g == out.size()) {
            AggregateRow a;
            a.estimator = r.estimator;
            a.kernel = r.kernel;
            a.h = r.h;
            out.push_back(a);
            members.emplace_back();
        }
        members[g].push_back(&r);
    }
    for (std::size_t g = 0; g < out.size(); ++g) {
        auto& a = out[g];
        std::vector<double> hs, alphas, ll, hel, fit, ev, tot;
        for (const SweepRow* r : members[g]) {
            if (!r->ok()) {
                ++a.failures;
                continue;
            }
            hs.push_back(r->h);
            alphas.push_back(r->alpha);
            ll.push_back(r->loglik_mean);
            if (!std::isnan(r->hellinger)) hel.push_back(r->hellinger);
            fit.push_back(r->fit_sec);
            ev.push_back(r->eval_sec);
            tot.push_back(r->fit_sec + r->eval_sec);
            a.underflows += r->underflows;
        }
        a.runs = ll.size();
        if (!hs.empty()) {
            a.h = detail::mean_of(hs);
            a.alpha = detail::mean_of(alphas);
        } else {
            a.alpha = members[g].front()->alpha;
        }
        a.loglik_mean = detail::mean_of(ll);
        a.loglik_std = detail::std_of(ll);
        a.hellinger_mean = detail::mean_of(hel);
        a.hellinger_std = detail::std_of(hel);
        a.fit_sec = fit.empty() ? 0.0 : detail::mean_of(fit);
        a.eval_sec = ev.empty() ? 0.0 : detail::mean_of(ev);
        a.total_sec = tot.empty() ? 0.0 : detail::mean_of(tot);
    }
    return out;
}

/// Best bandwidth per estimator by mean test log-likelihood; ties keep the
/// smaller bandwidth (earlier group).
inline std::map<std::string, AggregateRow> best_rows(const std::vector<AggregateRow>& aggregates) {
    std::map<std::string, AggregateRow> best;
    for (const auto& a : aggregates) {
        if (a.runs == 0 || std::isnan(a.loglik_mean)) continue;
        auto it = best.find(a.estimator);
        if (it == best.end() || a.loglik_mean > it->second.loglik_mean) best[a.estimator] = a;
    }
    return best;
}

/// Runs every (estimator, h, run) cell plus the heuristic RVDE row per run.
/// Cells of a run execute in parallel; each cell is single-threaded and all
/// randomness comes from per-run seeds, so metrics are thread-independent.
/// Failures are recorded in the row's error column and the sweep continues.
/// CVDE ray lengths are cast once per run and shared across bandwidths; the
/// casting time is added to every CVDE row's fit_sec.
inline SweepResult run_sweep(const config::SweepConfig& cfg, unsigned threads = 1,
                             std::ostream* progress = nullptr) {
    if (cfg.runs < 1) throw ParameterError("runs must be >= 1");
    if (cfg.h_values.empty()) throw ParameterError("bandwidth grid is empty");
    for (double h : cfg.h_values)
        if (!(h > 0.0) || !std::isfinite(h)) throw ParameterError("grid values must be > 0");
    if (cfg.hellinger && !cfg.data.is_synthetic())
        throw ParameterError("hellinger needs a known true density");

    SweepResult result;
    result.started_at = detail::utc_timestamp();
    const bool has_rvde =
        std::find(cfg.estimators.begin(), cfg.estimators.end(), "rvde") != cfg.estimators.end();
    const bool has_cvde =
        std::find(cfg.estimators.begin(), cfg.estimators.end(), "cvde") != cfg.estimators.end();

    for (std::size_t run = 0; run < cfg.runs; ++run) {
        const std::uint64_t run_seed = derive_seed(cfg.seed, run);
        const Dataset data = materialize(cfg.data, run_seed);
        const int n = static_cast<int>(data.train->dim());
        const Kernel kernel = cfg.kernel.resolve(n);
        const std::string kname = kernel.name();

        std::optional<CvdeRays> rays;
        double ray_sec = 0.0;
        std::string ray_error;
        if (has_cvde) {
            const auto t0 = std::chrono::steady_clock::now();
            try {
                rays = cast_cvde_rays(*data.train, cfg.mc_samples, derive_seed(run_seed, 3),
                                      threads);
            } catch (const std::exception& e) {
                ray_error = e.what();
            }
            ray_sec = detail::seconds_since(t0);
        }

        struct Cell {
            std::string estimator;
            double h;
        };
        std::vector<Cell> cells;
        for (const auto& est : cfg.estimators)
            for (double h : cfg.h_values) cells.push_back({est, h});
        if (has_rvde && cfg.heuristic) cells.push_back({heuristic_estimator, 0.0});

        std::vector<SweepRow> rows(cells.size());
        parallel_for(cells.size(), threads, [&](std::size_t c) {
            const Cell& cell = cells[c];
            SweepRow& row = rows[c];
            row.estimator = cell.estimator;
            row.kernel = kname;
            row.h = cell.h;
            row.run = run;
            row.seed = run_seed;
            try {
                row.alpha = cell.estimator == heuristic_estimator
                                ? 0.0
                                : alpha_from_bandwidth(kernel, n, cell.h);
            } catch (const std::exception&) {
                row.alpha = std::numeric_limits<double>::quiet_NaN();
            }
            try {
                const auto t0 = std::chrono::steady_clock::now();
                std::optional<AnyModel> model;
                if (cell.estimator == "rvde") {
                    model = RvdeModel::fit(data.train, kernel, row.alpha, cfg.rvde);
                } else if (cell.estimator == heuristic_estimator) {
                    row.alpha = select_alpha(*data.train);
                    row.h = bandwidth_from_alpha(kernel, n, row.alpha);
                    model = RvdeModel::fit(data.train, kernel, row.alpha, cfg.rvde);
                } else if (cell.estimator == "kde") {
                    model = KdeModel::fit(data.train, kernel, cell.h);
                } else if (cell.estimator == "adakde") {
                    model = AdaKdeModel::fit(data.train, kernel, cell.h);
                } else if (cell.estimator == "cvde") {
                    if (!rays) throw Error(ray_error);
                    model = CvdeModel::fit(data.train, kernel, cell.h, *rays);
                }
                row.fit_sec = detail::seconds_since(t0);
                if (cell.estimator == "cvde") row.fit_sec += ray_sec;

                const auto t1 = std::chrono::steady_clock::now();
                const LogDensityFn fn = [&](std::span<const double> x) {
                    return model_log_density(*model, x);
                };
                const LoglikStats ll = evaluate_loglik(fn, data.test);
                row.loglik_mean = ll.mean;
                row.loglik_std_over_test = ll.std_over_test;
                row.underflows = ll.underflows;
                if (cfg.hellinger && data.truth) {
                    const SyntheticSpec truth = *data.truth;
                    const LogDensityFn rho = [&](std::span<const double> x) {
                        return true_log_density(truth, x);
                    };
                    row.hellinger = evaluate_hellinger(fn, rho, data.test);
                }
                row.eval_sec = detail::seconds_since(t1);
            } catch (const std::exception& e) {
                row.error = e.what();
                if (row.error.empty()) row.error = "error";
                row.loglik_mean = row.loglik_std_over_test = row.hellinger =
                    std::numeric_limits<double>::quiet_NaN();
            }
        });
        if (progress)
            *progress << "run " << (run + 1) << "/" << cfg.runs << ": " << rows.size()
                      << " cells\n";
        for (auto& r : rows) result.rows.push_back(std::move(r));
    }
    result.aggregates = aggregate_rows(result.rows);
    result.best = best_rows(result.aggregates);
    result.finished_at = detail::utc_timestamp();
    return result;
}

// ---------------------------------------------------------------------------
// Artifacts

namespace detail {

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& s) {
    if (s == "nan" || s.empty()) return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
}

inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += (c == '\n' || c == '\r') ? ' ' : c;
    }
    return out + "\"";
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cells.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cells.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.emplace_back();
        } else if (c != '\r') {
            cells.back() += c;
        }
    }
    return cells;
}

/// Non-finite numbers become the strings "nan", "inf", "-inf" in JSON.
inline nlohmann::json json_number(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

inline double json_to_double(const nlohmann::json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) return parse_double(j.get<std::string>());
    return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

inline const std::vector<std::string>& results_columns() {
    static const std::vector<std::string> cols{
        "estimator", "kernel",     "h",          "alpha",     "run",
        "seed",      "loglik_mean", "loglik_std_over_test", "underflows",
        "hellinger", "fit_sec",    "eval_sec",   "error"};
    return cols;
}

/// results.csv: a versioned comment line, the column header, one row per cell.
/// Doubles use %.17g so they round-trip exactly.
inline void write_results_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << results_schema << '\n';
    const auto& cols = results_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    using detail::format_double;
    for (const auto& r : rows) {
        out << detail::csv_quote(r.estimator) << ',' << detail::csv_quote(r.kernel) << ','
            << format_double(r.h) << ',' << format_double(r.alpha) << ',' << r.run << ','
            << r.seed << ',' << format_double(r.loglik_mean) << ','
            << format_double(r.loglik_std_over_test) << ',' << r.underflows << ','
            << (std::isnan(r.hellinger) ? std::string() : format_double(r.hellinger)) << ','
            << format_double(r.fit_sec) << ',' << format_double(r.eval_sec) << ','
            << detail::csv_quote(r.error) << '\n';
    }
}

inline std::vector<SweepRow> read_results_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind(results_schema, 0) != 0)
        throw ParseError(1, 0, "missing results schema line");
    if (!std::getline(in, line)) throw ParseError(2, 0, "missing column header");
    const auto header = detail::split_csv_line(line);
    if (header != results_columns()) throw ParseError(2, 0, "unexpected column header");
    std::vector<SweepRow> rows;
    std::size_t lineno = 2;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto c = detail::split_csv_line(line);
        if (c.size() != header.size()) throw ParseError(lineno, 0, "wrong number of columns");
        try {
            SweepRow r;
            r.estimator = c[0];
            r.kernel = c[1];
            r.h = detail::parse_double(c[2]);
            r.alpha = detail::parse_double(c[3]);
            r.run = std::stoull(c[4]);
            r.seed = std::stoull(c[5]);
            r.loglik_mean = detail::parse_double(c[6]);
            r.loglik_std_over_test = detail::parse_double(c[7]);
            r.underflows = std::stoull(c[8]);
            r.hellinger = detail::parse_double(c[9]);
            r.fit_sec = detail::parse_double(c[10]);
            r.eval_sec = detail::parse_double(c[11]);
            r.error = c[12];
            rows.push_back(std::move(r));
        } catch (const std::logic_error& e) {
            throw ParseError(lineno, 0, e.what());
        }
    }
    return rows;
}

inline nlohmann::json aggregate_to_json(const AggregateRow& a) {
    using detail::json_number;
    nlohmann::json j;
    j["estimator"] = a.estimator;
    j["kernel"] = a.kernel;
    j["h"] = json_number(a.h);
    j["alpha"] = json_number(a.alpha);
    j["runs"] = a.runs;
    j["failures"] = a.failures;
    j["loglik_mean"] = json_number(a.loglik_mean);
    j["loglik_std"] = json_number(a.loglik_std);
    j["underflows"] = a.underflows;
    j["hellinger_mean"] = json_number(a.hellinger_mean);
    j["hellinger_std"] = json_number(a.hellinger_std);
    j["fit_sec"] = json_number(a.fit_sec);
    j["eval_sec"] = json_number(a.eval_sec);
    j["total_sec"] = json_number(a.total_sec);
    return j;
}

inline AggregateRow aggregate_from_json(const nlohmann::json& j) {
    using detail::json_to_double;
    AggregateRow a;
    a.estimator = j.at("estimator").get<std::string>();
    a.kernel = j.at("kernel").get<std::string>();
    a.h = json_to_double(j.at("h"));
    a.alpha = json_to_double(j.at("alpha"));
    a.runs = j.at("runs").get<std::size_t>();
    a.failures = j.at("failures").get<std::size_t>();
    a.loglik_mean = json_to_double(j.at("loglik_mean"));
    a.loglik_std = json_to_double(j.at("loglik_std"));
    a.underflows = j.at("underflows").get<std::size_t>();
    a.hellinger_mean = json_to_double(j.at("hellinger_mean"));
    a.hellinger_std = json_to_double(j.at("hellinger_std"));
    a.fit_sec = json_to_double(j.at("fit_sec"));
    a.eval_sec = json_to_double(j.at("eval_sec"));
    a.total_sec = json_to_double(j.at("total_sec"));
    return a;
}

/// aggregate.json: schema tag, timestamps, the full config, aggregates and
/// best rows per estimator.
inline nlohmann::json aggregate_json(const SweepResult& result, const nlohmann::json& config) {
    nlohmann::json j;
    j["schema"] = "rvde-sweep-aggregate v1";
    j["started_at"] = result.started_at;
    j["finished_at"] = result.finished_at;
    j["config"] = config;
    j["rows"] = result.rows.size();
    j["aggregates"] = nlohmann::json::array();
    for (const auto& a : result.aggregates) j["aggregates"].push_back(aggregate_to_json(a));
    j["best"] = nlohmann::json::object();
    for (const auto& [name, a] : result.best) j["best"][name] = aggregate_to_json(a);
    return j;
}

/// Long-format curves for plotting: one line per (estimator, h, metric).
inline void write_curves_csv(std::ostream& out, const std::vector<AggregateRow>& aggregates) {
    using detail::format_double;
    out << "estimator,kernel,h,alpha,metric,mean,std,runs\n";
    for (const auto& a : aggregates) {
        auto line = [&](const char* metric, double mean, double sd) {
            out << detail::csv_quote(a.estimator) << ',' << detail::csv_quote(a.kernel) << ','
                << format_double(a.h) << ',' << format_double(a.alpha) << ',' << metric << ','
                << format_double(mean) << ',' << format_double(sd) << ',' << a.runs << '\n';
        };
        line("loglik", a.loglik_mean, a.loglik_std);
        if (!std::isnan(a.hellinger_mean)) line("hellinger", a.hellinger_mean, a.hellinger_std);
        line("fit_sec", a.fit_sec, std::numeric_limits<double>::quiet_NaN());
        line("eval_sec", a.eval_sec, std::numeric_limits<double>::quiet_NaN());
        line("total_sec", a.total_sec, std::numeric_limits<double>::quiet_NaN());
    }
}

}  // namespace rvde
