#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rvde/data.hpp"
#include "rvde/error.hpp"
#include "rvde/estimator.hpp"
#include "rvde/kernels.hpp"

namespace rvde::config {

using nlohmann::json;

/// Schema violation, located by a JSON pointer into the config document.
class ConfigError : public Error {
  public:
    ConfigError(std::string pointer, const std::string& what)
        : Error((pointer.empty() ? std::string("/") : pointer) + ": " + what),
          pointer_(std::move(pointer)) {}

    const std::string& pointer() const noexcept { return pointer_; }

  private:
    std::string pointer_;
};

namespace detail {

inline std::string child(const std::string& ptr, const std::string& key) {
    return ptr + "/" + key;
}

inline const json& require(const json& obj, const std::string& key, const std::string& ptr) {
    if (!obj.is_object()) throw ConfigError(ptr, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError(child(ptr, key), "required field is missing");
    return *it;
}

inline double as_number(const json& v, const std::string& ptr) {
    if (!v.is_number()) throw ConfigError(ptr, "expected a number");
    return v.get<double>();
}

inline double as_positive(const json& v, const std::string& ptr) {
    const double d = as_number(v, ptr);
    if (!(d > 0.0) || !std::isfinite(d)) throw ConfigError(ptr, "expected a positive number");
    return d;
}

inline std::int64_t as_integer(const json& v, const std::string& ptr) {
    if (!v.is_number_integer()) throw ConfigError(ptr, "expected an integer");
    return v.get<std::int64_t>();
}

inline std::size_t as_count(const json& v, const std::string& ptr, std::int64_t min = 1) {
    const auto i = as_integer(v, ptr);
    if (i < min) throw ConfigError(ptr, "expected an integer >= " + std::to_string(min));
    return static_cast<std::size_t>(i);
}

inline std::uint64_t as_seed(const json& v, const std::string& ptr) {
    if (!v.is_number_integer()) throw ConfigError(ptr, "expected an integer seed");
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    const auto i = v.get<std::int64_t>();
    if (i < 0) throw ConfigError(ptr, "seed must be non-negative");
    return static_cast<std::uint64_t>(i);
}

inline std::string as_string(const json& v, const std::string& ptr) {
    if (!v.is_string()) throw ConfigError(ptr, "expected a string");
    return v.get<std::string>();
}

inline bool as_bool(const json& v, const std::string& ptr) {
    if (!v.is_boolean()) throw ConfigError(ptr, "expected a boolean");
    return v.get<bool>();
}

inline Matrix as_matrix(const json& v, const std::string& ptr) {
    if (!v.is_array() || v.empty()) throw ConfigError(ptr, "expected a non-empty array of rows");
    Matrix m;
    for (std::size_t r = 0; r < v.size(); ++r) {
        const auto rptr = ptr + "/" + std::to_string(r);
        const json& row = v[r];
        if (!row.is_array() || row.empty()) throw ConfigError(rptr, "expected an array of numbers");
        if (r == 0) m.cols = row.size();
        if (row.size() != m.cols)
            throw ConfigError(rptr, "expected " + std::to_string(m.cols) + " coordinates");
        for (std::size_t c = 0; c < row.size(); ++c)
            m.values.push_back(as_number(row[c], rptr + "/" + std::to_string(c)));
        ++m.rows;
    }
    return m;
}

}  // namespace detail

/// {"family": "exponential" | "rational" | "gaussian", "k": int?}; the
/// rational exponent defaults to n + 1.
struct KernelSpec {
    KernelFamily family = KernelFamily::rational;
    std::optional<int> k;

    Kernel resolve(int n) const {
        switch (family) {
            case KernelFamily::exponential: return Kernel::exponential();
            case KernelFamily::gaussian: return Kernel::gaussian();
            case KernelFamily::rational: return Kernel::rational(k.value_or(n + 1));
        }
        return Kernel::exponential();
    }

    json to_json() const {
        json j;
        j["family"] = family == KernelFamily::exponential ? "exponential"
                      : family == KernelFamily::gaussian  ? "gaussian"
                                                          : "rational";
        if (k) j["k"] = *k;
        return j;
    }
};

inline KernelSpec parse_kernel(const json& j, const std::string& ptr) {
    KernelSpec spec;
    if (j.is_string()) {
        const auto fam = j.get<std::string>();
        if (fam == "exponential") spec.family = KernelFamily::exponential;
        else if (fam == "rational") spec.family = KernelFamily::rational;
        else if (fam == "gaussian") spec.family = KernelFamily::gaussian;
        else throw ConfigError(ptr, "unknown kernel family '" + fam + "'");
        return spec;
    }
    const auto fam = detail::as_string(detail::require(j, "family", ptr), ptr + "/family");
    if (fam == "exponential") spec.family = KernelFamily::exponential;
    else if (fam == "rational") spec.family = KernelFamily::rational;
    else if (fam == "gaussian") spec.family = KernelFamily::gaussian;
    else throw ConfigError(ptr + "/family", "unknown kernel family '" + fam + "'");
    if (j.contains("k")) {
        if (spec.family != KernelFamily::rational)
            throw ConfigError(ptr + "/k", "only the rational kernel takes an exponent");
        spec.k = static_cast<int>(detail::as_count(j["k"], ptr + "/k"));
    }
    return spec;
}

/// Dataset source. Synthetic: {"dataset": "gaussian"|"laplace"|"dirichlet"|
/// "mixture", "n", "m_train", "m_test", "seed"}. File: {"dataset": "csv",
/// "path", "test_path"?, "test_fraction"?, "train_fraction"?, "minmax"?}.
/// Inline: {"dataset": "points", "points": [[...], ...], "test_points"?}.
struct DatasetConfig {
    std::string kind = "gaussian";
    SyntheticSpec synthetic;
    std::size_t m_train = 1000;
    std::size_t m_test = 1000;
    std::uint64_t seed = 0;
    std::string path;
    std::string test_path;
    double test_fraction = 0.1;
    double train_fraction = 0.5;
    bool minmax = false;
    Matrix points;
    std::optional<Matrix> test_points;

    bool is_synthetic() const { return kind != "csv" && kind != "points"; }

    json to_json() const {
        json j;
        j["dataset"] = kind;
        if (is_synthetic()) {
            j["n"] = synthetic.n;
            j["m_train"] = m_train;
            j["m_test"] = m_test;
        } else if (kind == "csv") {
            j["path"] = path;
            if (!test_path.empty()) j["test_path"] = test_path;
            j["test_fraction"] = test_fraction;
            j["train_fraction"] = train_fraction;
            j["minmax"] = minmax;
        } else {
            j["m"] = points.rows;
            j["n"] = points.cols;
        }
        j["seed"] = seed;
        return j;
    }
};

inline DatasetConfig parse_dataset(const json& j, const std::string& ptr) {
    using namespace detail;
    DatasetConfig cfg;
    cfg.kind = as_string(require(j, "dataset", ptr), ptr + "/dataset");
    if (j.contains("seed")) cfg.seed = as_seed(j["seed"], ptr + "/seed");
    if (cfg.kind == "gaussian" || cfg.kind == "laplace" || cfg.kind == "dirichlet" ||
        cfg.kind == "mixture") {
        cfg.synthetic.family = cfg.kind == "gaussian"    ? SyntheticFamily::gaussian
                               : cfg.kind == "laplace"   ? SyntheticFamily::laplace
                               : cfg.kind == "dirichlet" ? SyntheticFamily::dirichlet
                                                         : SyntheticFamily::gaussian_mixture;
        cfg.synthetic.n = static_cast<int>(as_count(require(j, "n", ptr), ptr + "/n"));
        if (j.contains("m_train")) cfg.m_train = as_count(j["m_train"], ptr + "/m_train");
        if (j.contains("m_test")) cfg.m_test = as_count(j["m_test"], ptr + "/m_test");
    } else if (cfg.kind == "csv") {
        cfg.path = as_string(require(j, "path", ptr), ptr + "/path");
        if (j.contains("test_path")) cfg.test_path = as_string(j["test_path"], ptr + "/test_path");
        if (j.contains("test_fraction")) {
            cfg.test_fraction = as_number(j["test_fraction"], ptr + "/test_fraction");
            if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0))
                throw ConfigError(ptr + "/test_fraction", "expected a value in (0, 1)");
        }
        if (j.contains("train_fraction")) {
            cfg.train_fraction = as_number(j["train_fraction"], ptr + "/train_fraction");
            if (!(cfg.train_fraction > 0.0 && cfg.train_fraction <= 1.0))
                throw ConfigError(ptr + "/train_fraction", "expected a value in (0, 1]");
        }
        if (j.contains("minmax")) cfg.minmax = as_bool(j["minmax"], ptr + "/minmax");
    } else if (cfg.kind == "points") {
        cfg.points = as_matrix(require(j, "points", ptr), ptr + "/points");
        if (j.contains("test_points")) {
            cfg.test_points = as_matrix(j["test_points"], ptr + "/test_points");
            if (cfg.test_points->cols != cfg.points.cols)
                throw ConfigError(ptr + "/test_points", "dimension differs from points");
        }
    } else {
        throw ConfigError(ptr + "/dataset", "unknown dataset '" + cfg.kind + "'");
    }
    return cfg;
}

/// {"estimator": "rvde"|"kde"|"adakde"|"cvde", "kernel", "h" | "alpha",
///  "mc_samples"?, "seed"?, "beta_grid_size"?, "beta_tol"?}. For RVDE,
/// "alpha": "heuristic" (or no bandwidth at all) selects alpha from the
/// Gabriel graph; "h" is converted with alpha_from_bandwidth.
struct EstimatorConfig {
    std::string estimator = "rvde";
    KernelSpec kernel;
    std::optional<double> h;
    std::optional<double> alpha;
    std::size_t mc_samples = 100;
    std::uint64_t seed = 0;
    RvdeOptions rvde;

    bool heuristic_alpha() const { return estimator == "rvde" && !h && !alpha; }

    json to_json() const {
        json j;
        j["estimator"] = estimator;
        j["kernel"] = kernel.to_json();
        if (h) j["h"] = *h;
        if (alpha) j["alpha"] = *alpha;
        if (heuristic_alpha()) j["alpha"] = "heuristic";
        j["mc_samples"] = mc_samples;
        j["seed"] = seed;
        j["beta_grid_size"] = rvde.beta_grid_size;
        j["beta_tol"] = rvde.beta_tol;
        return j;
    }
};

inline bool known_estimator(const std::string& name) {
    return name == "rvde" || name == "kde" || name == "adakde" || name == "cvde";
}

inline RvdeOptions parse_rvde_options(const json& j, const std::string& ptr, RvdeOptions opts = {}) {
    if (j.contains("beta_grid_size"))
        opts.beta_grid_size = detail::as_count(j["beta_grid_size"], ptr + "/beta_grid_size", 16);
    if (j.contains("beta_tol"))
        opts.beta_tol = detail::as_positive(j["beta_tol"], ptr + "/beta_tol");
    return opts;
}

inline EstimatorConfig parse_estimator(const json& j, const std::string& ptr) {
    using namespace detail;
    EstimatorConfig cfg;
    cfg.estimator = as_string(require(j, "estimator", ptr), ptr + "/estimator");
    if (!known_estimator(cfg.estimator))
        throw ConfigError(ptr + "/estimator", "unknown estimator '" + cfg.estimator + "'");
    cfg.kernel = parse_kernel(require(j, "kernel", ptr), ptr + "/kernel");
    if (j.contains("h") && j.contains("alpha"))
        throw ConfigError(ptr, "give either 'h' or 'alpha', not both");
    if (j.contains("h")) cfg.h = as_positive(j["h"], ptr + "/h");
    if (j.contains("alpha")) {
        const json& a = j["alpha"];
        if (a.is_string() && a.get<std::string>() == "heuristic") {
            if (cfg.estimator != "rvde")
                throw ConfigError(ptr + "/alpha", "the alpha heuristic applies to rvde only");
        } else {
            if (cfg.estimator != "rvde")
                throw ConfigError(ptr + "/alpha", "alpha applies to rvde only; use 'h'");
            cfg.alpha = as_positive(a, ptr + "/alpha");
        }
    }
    if (cfg.estimator != "rvde" && !cfg.h)
        throw ConfigError(ptr + "/h", "required field is missing");
    if (j.contains("mc_samples")) cfg.mc_samples = as_count(j["mc_samples"], ptr + "/mc_samples");
    if (j.contains("seed")) cfg.seed = as_seed(j["seed"], ptr + "/seed");
    cfg.rvde = parse_rvde_options(j, ptr);
    return cfg;
}

/// Bandwidth sweep: {"data", "estimators": [...], "kernel", "grid":
/// {"h_min", "h_max", "count"} | "h_values": [...], "runs", "metrics",
/// "mc_samples", "seed", "heuristic"?, "beta_grid_size"?, "beta_tol"?}.
struct SweepConfig {
    DatasetConfig data;
    std::vector<std::string> estimators{"rvde", "kde"};
    KernelSpec kernel;
    std::vector<double> h_values;
    std::size_t runs = 5;
    bool loglik = true;
    bool hellinger = false;
    std::size_t mc_samples = 100;
    std::uint64_t seed = 0;
    bool heuristic = true;
    RvdeOptions rvde;

    json to_json() const {
        json j;
        j["data"] = data.to_json();
        j["estimators"] = estimators;
        j["kernel"] = kernel.to_json();
        j["h_values"] = h_values;
        j["runs"] = runs;
        json metrics = json::array();
        if (loglik) metrics.push_back("loglik");
        if (hellinger) metrics.push_back("hellinger");
        j["metrics"] = metrics;
        j["mc_samples"] = mc_samples;
        j["seed"] = seed;
        j["heuristic"] = heuristic;
        j["beta_grid_size"] = rvde.beta_grid_size;
        j["beta_tol"] = rvde.beta_tol;
        return j;
    }
};

/// count log-spaced values from lo to hi inclusive.
inline std::vector<double> log_grid(double lo, double hi, std::size_t count) {
    if (!(lo > 0.0) || !(hi >= lo)) throw ParameterError("log grid needs 0 < lo <= hi");
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = lo;
        return out;
    }
    const double a = std::log(lo);
    const double step = (std::log(hi) - a) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) out[i] = std::exp(a + step * static_cast<double>(i));
    out.front() = lo;
    out.back() = hi;
    return out;
}

inline SweepConfig parse_sweep(const json& j, const std::string& ptr = "") {
    using namespace detail;
    SweepConfig cfg;
    cfg.data = parse_dataset(require(j, "data", ptr), ptr + "/data");
    if (j.contains("estimators")) {
        const json& e = j["estimators"];
        if (!e.is_array() || e.empty())
            throw ConfigError(ptr + "/estimators", "expected a non-empty array");
        cfg.estimators.clear();
        for (std::size_t i = 0; i < e.size(); ++i) {
            const auto p = ptr + "/estimators/" + std::to_string(i);
            auto name = as_string(e[i], p);
            if (!known_estimator(name)) throw ConfigError(p, "unknown estimator '" + name + "'");
            cfg.estimators.push_back(std::move(name));
        }
    }
    cfg.kernel = parse_kernel(require(j, "kernel", ptr), ptr + "/kernel");
    if (j.contains("h_values")) {
        const json& hv = j["h_values"];
        if (!hv.is_array() || hv.empty())
            throw ConfigError(ptr + "/h_values", "expected a non-empty array");
        for (std::size_t i = 0; i < hv.size(); ++i)
            cfg.h_values.push_back(as_positive(hv[i], ptr + "/h_values/" + std::to_string(i)));
    } else {
        const json& g = require(j, "grid", ptr);
        const auto gp = ptr + "/grid";
        const double lo = as_positive(require(g, "h_min", gp), gp + "/h_min");
        const double hi = as_positive(require(g, "h_max", gp), gp + "/h_max");
        if (hi < lo) throw ConfigError(gp + "/h_max", "must be >= h_min");
        cfg.h_values = log_grid(lo, hi, as_count(require(g, "count", gp), gp + "/count"));
    }
    if (j.contains("runs")) cfg.runs = as_count(j["runs"], ptr + "/runs");
    if (j.contains("metrics")) {
        const json& m = j["metrics"];
        if (!m.is_array() || m.empty())
            throw ConfigError(ptr + "/metrics", "expected a non-empty array");
        cfg.loglik = cfg.hellinger = false;
        for (std::size_t i = 0; i < m.size(); ++i) {
            const auto p = ptr + "/metrics/" + std::to_string(i);
            const auto name = as_string(m[i], p);
            if (name == "loglik") cfg.loglik = true;
            else if (name == "hellinger") cfg.hellinger = true;
            else throw ConfigError(p, "unknown metric '" + name + "'");
        }
        if (cfg.hellinger && !cfg.data.is_synthetic())
            throw ConfigError(ptr + "/metrics",
                              "hellinger needs a synthetic dataset with a known density");
    }
    if (j.contains("mc_samples")) cfg.mc_samples = as_count(j["mc_samples"], ptr + "/mc_samples");
    if (j.contains("seed")) cfg.seed = as_seed(j["seed"], ptr + "/seed");
    if (j.contains("heuristic")) cfg.heuristic = as_bool(j["heuristic"], ptr + "/heuristic");
    cfg.rvde = parse_rvde_options(j, ptr);
    return cfg;
}

}  // namespace rvde::config
