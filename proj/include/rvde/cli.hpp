#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "rvde/config.hpp"
#include "rvde/harness.hpp"

namespace rvde::cli {

namespace fs = std::filesystem;
using nlohmann::json;

/// Usage problems (bad flags, unreadable or invalid config): exit code 1.
class UsageError : public Error {
  public:
    using Error::Error;
};

struct Options {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;  ///< 0 = all hardware threads
    bool quiet = false;

    unsigned worker_count() const { return threads ? threads : default_threads(); }
};

inline json read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw UsageError("config '" + path + "' is not valid JSON: " + e.what());
    }
}

inline void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write '" + path.string() + "'");
    f << text;
    if (!f) throw Error("failed writing '" + path.string() + "'");
}

inline void write_matrix(const fs::path& path, const Matrix& m) {
    std::ostringstream s;
    write_csv(s, m);
    write_text(path, s.str());
}

// The dataset is either under "data" or the whole document.
inline config::DatasetConfig dataset_of(const json& doc, const Options& opt) {
    auto d = doc.contains("data") ? config::parse_dataset(doc["data"], "/data")
                                  : config::parse_dataset(doc, "");
    if (opt.seed) d.seed = *opt.seed;
    return d;
}

inline config::EstimatorConfig model_of(const json& doc, const Options& opt) {
    if (!doc.contains("model")) throw config::ConfigError("/model", "required field is missing");
    auto m = config::parse_estimator(doc["model"], "/model");
    if (opt.seed) m.seed = *opt.seed;
    return m;
}

inline int cmd_gen(const json& doc, const Options& opt, std::ostream& out) {
    const auto data_cfg = dataset_of(doc, opt);
    const Dataset data = materialize(data_cfg, data_cfg.seed);
    const fs::path dir = opt.out_dir.empty() ? fs::path(".") : fs::path(opt.out_dir);
    write_matrix(dir / "train.csv", data.train->matrix());
    write_matrix(dir / "test.csv", data.test);
    if (!opt.quiet)
        out << "wrote " << data.train->size() << " train and " << data.test.rows
            << " test rows to " << dir.string() << "\n";
    return 0;
}

inline int cmd_fit_eval(const json& doc, const Options& opt, std::ostream& out) {
    const auto data_cfg = dataset_of(doc, opt);
    const auto model_cfg = model_of(doc, opt);
    bool want_hellinger = false;
    if (doc.contains("metrics")) {
        const json& m = doc["metrics"];
        if (!m.is_array()) throw config::ConfigError("/metrics", "expected an array");
        for (std::size_t i = 0; i < m.size(); ++i) {
            const auto p = "/metrics/" + std::to_string(i);
            const auto name = config::detail::as_string(m[i], p);
            if (name == "hellinger") want_hellinger = true;
            else if (name != "loglik") throw config::ConfigError(p, "unknown metric '" + name + "'");
        }
        if (want_hellinger && !data_cfg.is_synthetic())
            throw config::ConfigError("/metrics", "hellinger needs a synthetic dataset");
    }
    const unsigned threads = opt.worker_count();
    const Dataset data = materialize(data_cfg, data_cfg.seed);
    const int n = static_cast<int>(data.train->dim());

    const auto t0 = std::chrono::steady_clock::now();
    const AnyModel model = fit_model(model_cfg, data.train, threads);
    const double fit_sec = detail::seconds_since(t0);

    const auto t1 = std::chrono::steady_clock::now();
    const LogDensityFn fn = [&](std::span<const double> x) { return model_log_density(model, x); };
    const LoglikStats ll = evaluate_loglik(fn, data.test, threads);
    std::optional<double> hellinger;
    if (want_hellinger) {
        const SyntheticSpec truth = *data.truth;
        const LogDensityFn rho = [&](std::span<const double> x) {
            return true_log_density(truth, x);
        };
        hellinger = evaluate_hellinger(fn, rho, data.test, threads);
    }
    const double eval_sec = detail::seconds_since(t1);

    json j;
    j["estimator"] = model_cfg.estimator;
    j["kernel"] = model_cfg.kernel.resolve(n).name();
    if (const auto* r = std::get_if<RvdeModel>(&model)) j["alpha"] = r->alpha();
    if (model_cfg.h) j["h"] = *model_cfg.h;
    j["m_train"] = data.train->size();
    j["m_test"] = data.test.rows;
    j["loglik_mean"] = detail::json_number(ll.mean);
    j["loglik_std_over_test"] = detail::json_number(ll.std_over_test);
    j["underflows"] = ll.underflows;
    if (hellinger) j["hellinger"] = detail::json_number(*hellinger);
    j["timing"] = {{"fit_sec", fit_sec}, {"eval_sec", eval_sec}, {"total_sec", fit_sec + eval_sec}};
    const std::string text = j.dump(2) + "\n";
    out << text;
    if (!opt.out_dir.empty()) write_text(fs::path(opt.out_dir) / "metrics.json", text);
    return 0;
}

inline int cmd_sample(const json& doc, const Options& opt, std::ostream& out) {
    const auto data_cfg = dataset_of(doc, opt);
    const auto model_cfg = model_of(doc, opt);
    if (model_cfg.estimator != "rvde")
        throw config::ConfigError("/model/estimator", "sampling is implemented for rvde only");
    std::size_t count = 1000;
    if (doc.contains("count")) count = config::detail::as_count(doc["count"], "/count");
    const unsigned threads = opt.worker_count();
    const Dataset data = materialize(data_cfg, data_cfg.seed);
    const AnyModel model = fit_model(model_cfg, data.train, threads);
    const Matrix samples = std::get<RvdeModel>(model).sample(model_cfg.seed, count, threads);
    if (opt.out_dir.empty()) {
        write_csv(out, samples);
    } else {
        write_matrix(fs::path(opt.out_dir) / "samples.csv", samples);
        if (!opt.quiet) out << "wrote " << count << " samples\n";
    }
    return 0;
}

inline int cmd_modes(const json& doc, const Options& opt, std::ostream& out) {
    const auto data_cfg = dataset_of(doc, opt);
    const auto model_cfg = model_of(doc, opt);
    if (model_cfg.estimator != "rvde")
        throw config::ConfigError("/model/estimator", "modes are defined for rvde only");
    const unsigned threads = opt.worker_count();
    const Dataset data = materialize(data_cfg, data_cfg.seed);
    const AnyModel fitted = fit_model(model_cfg, data.train, threads);
    const auto& model = std::get<RvdeModel>(fitted);
    const ModeSet modes = model.modes(threads);

    json j;
    j["alpha"] = model.alpha();
    j["epsilon"] = modes.epsilon;
    j["point_modes"] = json::array();
    for (std::size_t p : modes.point_modes) {
        const auto row = model.points()[p];
        j["point_modes"].push_back({{"p", p}, {"location", std::vector<double>(row.begin(), row.end())}});
    }
    j["midpoint_modes"] = json::array();
    for (const auto& m : modes.midpoint_modes)
        j["midpoint_modes"].push_back({{"p", m.p}, {"q", m.q}, {"location", m.midpoint}});
    j["segment_modes"] = json::array();
    for (const auto& s : modes.segment_modes) j["segment_modes"].push_back({{"p", s.p}, {"q", s.q}});
    const std::string text = j.dump(2) + "\n";
    out << text;
    if (!opt.out_dir.empty()) write_text(fs::path(opt.out_dir) / "modes.json", text);
    return 0;
}

inline int cmd_sweep(const json& doc, const Options& opt, std::ostream& out, std::ostream& err) {
    auto cfg = config::parse_sweep(doc);
    if (opt.seed) cfg.seed = cfg.data.seed = *opt.seed;
    const fs::path dir = opt.out_dir.empty() ? fs::path("sweep_out") : fs::path(opt.out_dir);
    const SweepResult result = run_sweep(cfg, opt.worker_count(), opt.quiet ? nullptr : &err);

    std::ostringstream rows;
    write_results_csv(rows, result.rows);
    write_text(dir / "results.csv", rows.str());
    write_text(dir / "aggregate.json", aggregate_json(result, cfg.to_json()).dump(2) + "\n");
    std::ostringstream curves;
    write_curves_csv(curves, result.aggregates);
    write_text(dir / "curves.csv", curves.str());

    if (!opt.quiet) {
        std::size_t failed = 0;
        for (const auto& r : result.rows) failed += !r.ok();
        out << result.rows.size() << " rows (" << failed << " failed) written to " << dir.string()
            << "\n";
        for (const auto& [name, a] : result.best)
            out << "best " << name << ": h=" << detail::format_double(a.h)
                << " loglik=" << detail::format_double(a.loglik_mean) << " +- "
                << detail::format_double(a.loglik_std) << "\n";
    }
    return 0;
}

/// Entry point shared by the executable and the tests. Exit codes: 0 success,
/// 1 usage or configuration error, 2 runtime error.
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
    CLI::App app{"Radial Voronoi density estimation: fit, evaluate, sample, modes, sweeps"};
    app.require_subcommand(1);
    Options opt;
    std::uint64_t seed = 0;
    auto add_common = [&](CLI::App* sub, bool out_flag) {
        sub->add_option("--config", opt.config_path, "JSON config file")->required();
        if (out_flag) sub->add_option("--out", opt.out_dir, "output directory");
        sub->add_option("--seed", seed, "override every seed in the config");
        sub->add_option("--threads", opt.threads, "worker threads (default: all cores)");
        sub->add_flag("--quiet", opt.quiet, "suppress progress messages");
    };
    auto* gen = app.add_subcommand("gen", "write synthetic train.csv and test.csv");
    auto* fit_eval = app.add_subcommand("fit-eval", "fit one estimator and print metrics JSON");
    auto* sample = app.add_subcommand("sample", "draw samples from a fitted RVDE (CSV)");
    auto* modes = app.add_subcommand("modes", "classify the modes of a fitted RVDE (JSON)");
    auto* sweep = app.add_subcommand("sweep", "bandwidth sweep benchmark");
    for (auto* sub : {gen, fit_eval, sample, modes, sweep}) add_common(sub, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return 1;
    }
    for (auto* sub : {gen, fit_eval, sample, modes, sweep})
        if (sub->count("--seed")) opt.seed = seed;

    try {
        const json doc = read_config(opt.config_path);
        if (!doc.is_object()) throw config::ConfigError("", "config must be a JSON object");
        if (*gen) return cmd_gen(doc, opt, out);
        if (*fit_eval) return cmd_fit_eval(doc, opt, out);
        if (*sample) return cmd_sample(doc, opt, out);
        if (*modes) return cmd_modes(doc, opt, out);
        if (*sweep) return cmd_sweep(doc, opt, out, err);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const config::ConfigError& e) {
        err << "config error at " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

}  // namespace rvde::cli
