#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rvde/cli.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "rvde");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    const int code = rvde::cli::cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "rvde_cli_test" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string write_config(const fs::path& dir, const json& doc) {
    const auto path = dir / "config.json";
    std::ofstream(path) << doc.dump(2);
    return path.string();
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const json two_points = {
    {"data", {{"dataset", "points"}, {"points", {{-0.75}, {0.75}}}, {"test_points", {{0.0}, {2.0}}}}},
    {"model", {{"estimator", "rvde"}, {"kernel", "exponential"}, {"alpha", 1.0}}}};

}  // namespace

TEST_CASE("gen writes train and test files", "[cli]") {
    const auto dir = scratch("gen");
    const auto cfg = write_config(dir, {{"dataset", "gaussian"}, {"n", 3}, {"m_train", 25},
                                        {"m_test", 10}, {"seed", 4}});
    const auto r = run({"gen", "--config", cfg, "--out", (dir / "d").string(), "--quiet"});
    REQUIRE(r.code == 0);
    const auto train = rvde::load_csv_matrix((dir / "d" / "train.csv").string());
    const auto test = rvde::load_csv_matrix((dir / "d" / "test.csv").string());
    CHECK(train.rows == 25);
    CHECK(train.cols == 3);
    CHECK(test.rows == 10);
    // Written values read back exactly.
    const auto again = rvde::generate(rvde::SyntheticSpec{.n = 3}, 25, 10, 4);
    CHECK(train.values == again.train.matrix().values);
}

TEST_CASE("modes on two close points gives one midpoint mode", "[cli]") {
    const auto dir = scratch("modes");
    const auto r = run({"modes", "--config", write_config(dir, two_points)});
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["epsilon"] == 1.0);
    CHECK(j["point_modes"].empty());
    CHECK(j["segment_modes"].empty());
    REQUIRE(j["midpoint_modes"].size() == 1);
    CHECK(j["midpoint_modes"][0]["location"][0].get<double>() == 0.0);
}

TEST_CASE("fit-eval prints metrics", "[cli]") {
    const auto dir = scratch("fit_eval");
    json doc = {{"data", {{"dataset", "gaussian"}, {"n", 2}, {"m_train", 80}, {"m_test", 30}}},
                {"model", {{"estimator", "kde"}, {"kernel", "gaussian"}, {"h", 0.5}}},
                {"metrics", {"loglik", "hellinger"}}};
    const auto r = run({"fit-eval", "--config", write_config(dir, doc), "--out", dir.string()});
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["estimator"] == "kde");
    CHECK(j["m_train"] == 80);
    CHECK(j["m_test"] == 30);
    CHECK(j["loglik_mean"].is_number());
    CHECK(j["hellinger"].is_number());
    CHECK(j["timing"].contains("fit_sec"));
    CHECK(fs::exists(dir / "metrics.json"));

    const auto rv = run({"fit-eval", "--config", write_config(dir, two_points)});
    REQUIRE(rv.code == 0);
    CHECK(json::parse(rv.out)["alpha"] == 1.0);
}

TEST_CASE("sample writes csv", "[cli]") {
    const auto dir = scratch("sample");
    json doc = two_points;
    doc["count"] = 50;
    const auto cfg = write_config(dir, doc);
    const auto a = run({"sample", "--config", cfg});
    REQUIRE(a.code == 0);
    std::istringstream in(a.out);
    const auto m = rvde::parse_csv(in);
    CHECK(m.rows == 50);
    CHECK(m.cols == 1);
    const auto b = run({"sample", "--config", cfg, "--out", dir.string(), "--quiet"});
    REQUIRE(b.code == 0);
    CHECK(slurp(dir / "samples.csv") == a.out);
}

TEST_CASE("sweep writes the documented artifacts", "[cli]") {
    const auto dir = scratch("sweep");
    json doc = {{"data", {{"dataset", "gaussian"}, {"n", 2}, {"m_train", 40}, {"m_test", 20}}},
                {"estimators", {"rvde", "kde", "adakde", "cvde"}},
                {"kernel", "rational"},
                {"grid", {{"h_min", 0.1}, {"h_max", 1.0}, {"count", 3}}},
                {"runs", 2},
                {"mc_samples", 10},
                {"seed", 3}};
    const auto r = run({"sweep", "--config", write_config(dir, doc), "--out", (dir / "o").string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("best rvde") != std::string::npos);
    std::istringstream csv(slurp(dir / "o" / "results.csv"));
    std::string schema;
    std::string header;
    std::getline(csv, schema);
    std::getline(csv, header);
    CHECK(schema == "# rvde-sweep-results v1");
    CHECK(header ==
          "estimator,kernel,h,alpha,run,seed,loglik_mean,loglik_std_over_test,underflows,"
          "hellinger,fit_sec,eval_sec,error");
    std::size_t lines = 0;
    for (std::string line; std::getline(csv, line);) lines += !line.empty();
    CHECK(lines == 4 * 3 * 2 + 2);
    const json agg = json::parse(slurp(dir / "o" / "aggregate.json"));
    CHECK(agg["schema"] == "rvde-sweep-aggregate v1");
    CHECK(agg["best"].contains("cvde"));
    CHECK(fs::exists(dir / "o" / "curves.csv"));
}

TEST_CASE("exit codes and error reporting", "[cli]") {
    const auto dir = scratch("errors");
    CHECK(run({}).code == 1);
    CHECK(run({"bogus"}).code == 1);
    CHECK(run({"gen"}).code == 1);
    CHECK(run({"gen", "--config", (dir / "missing.json").string()}).code == 1);

    {
        const auto path = dir / "broken.json";
        std::ofstream(path) << "{ not json";
        CHECK(run({"gen", "--config", path.string()}).code == 1);
    }
    {
        json doc = two_points;
        doc["model"].erase("alpha");
        doc["model"]["estimator"] = "kde";
        const auto r = run({"fit-eval", "--config", write_config(dir, doc)});
        CHECK(r.code == 1);
        CHECK(r.err.find("/model/h") != std::string::npos);
    }
    {
        json doc = two_points;
        doc["model"]["kernel"] = {{"family", "rational"}, {"k", "three"}};
        const auto r = run({"modes", "--config", write_config(dir, doc)});
        CHECK(r.code == 1);
        CHECK(r.err.find("/model/kernel/k") != std::string::npos);
    }
    {
        json doc = {{"dataset", "gaussian"}, {"n", 0}};
        const auto r = run({"gen", "--config", write_config(dir, doc)});
        CHECK(r.code == 1);
        CHECK(r.err.find("/n") != std::string::npos);
    }
    {
        // Valid config, but the gaussian kernel cannot be used by RVDE.
        json doc = two_points;
        doc["model"]["kernel"] = "gaussian";
        const auto r = run({"modes", "--config", write_config(dir, doc)});
        CHECK(r.code == 2);
        CHECK(!r.err.empty());
    }
    {
        json doc = {{"dataset", "csv"}, {"path", (dir / "nothing.csv").string()}};
        CHECK(run({"gen", "--config", write_config(dir, doc)}).code == 2);
    }
}

TEST_CASE("seed flag overrides the config", "[cli]") {
    const auto dir = scratch("seed");
    const auto cfg = write_config(dir, {{"dataset", "laplace"}, {"n", 2}, {"m_train", 5},
                                        {"m_test", 5}, {"seed", 1}});
    REQUIRE(run({"gen", "--config", cfg, "--out", (dir / "a").string(), "--quiet"}).code == 0);
    REQUIRE(run({"gen", "--config", cfg, "--out", (dir / "b").string(), "--seed", "2", "--quiet"})
                .code == 0);
    REQUIRE(run({"gen", "--config", cfg, "--out", (dir / "c").string(), "--seed", "1", "--quiet"})
                .code == 0);
    CHECK(slurp(dir / "a" / "train.csv") != slurp(dir / "b" / "train.csv"));
    CHECK(slurp(dir / "a" / "train.csv") == slurp(dir / "c" / "train.csv"));
}

#ifdef RVDE_CONFIG_DIR
TEST_CASE("shipped example configs parse", "[cli]") {
    std::size_t seen = 0;
    for (const auto& entry : fs::directory_iterator(RVDE_CONFIG_DIR)) {
        if (entry.path().extension() != ".json") continue;
        ++seen;
        const auto name = entry.path().filename().string();
        INFO(name);
        const json doc = rvde::cli::read_config(entry.path().string());
        if (name.starts_with("sweep")) {
            CHECK_NOTHROW(rvde::config::parse_sweep(doc));
        } else if (name.starts_with("gen")) {
            CHECK_NOTHROW(rvde::config::parse_dataset(doc, ""));
        } else {
            CHECK_NOTHROW(rvde::config::parse_dataset(doc["data"], "/data"));
            CHECK_NOTHROW(rvde::config::parse_estimator(doc["model"], "/model"));
        }
    }
    CHECK(seen >= 5);
}
#endif
