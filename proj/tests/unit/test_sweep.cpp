#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "spinboson/sweep.hpp"

using namespace spinboson;
using namespace spinboson::sweep;
using Catch::Matchers::WithinAbs;

namespace {

SweepConfig betac_config() {
    SweepConfig cfg;
    cfg.kind = {Model::generalized_dicke, CouplingMode::rwa_only};
    cfg.params.g1 = 1.2;
    cfg.params.g2 = 0.0;
    cfg.axes = {Axis{"beta", 2.0, 5.0, 31, AxisScale::linear}};
    cfg.outputs = {Output::condition, Output::betac, Output::ratio};
    return cfg;
}

std::string render_csv(const SweepConfig& cfg, const SweepResult& res) {
    std::ostringstream os;
    write_csv(os, cfg, res);
    return os.str();
}

} // namespace

TEST_CASE("config parsing from flat key=value text") {
    std::istringstream in(
        "# comment line\n"
        "model=dicke\n"
        "omega=1.0\n"
        "omega0 = 1.0   # trailing comment\n"
        "g1=0.2\n"
        "axis1.param=g1\n"
        "axis1.min=0.5\n"
        "axis1.max=2.0\n"
        "axis1.steps=16\n"
        "axis1.scale=linear\n"
        "outputs=condition,betac\n"
        "threads=2\n");
    const auto kv = parse_kv_text(in);
    const SweepConfig cfg = config_from_kv(kv);
    CHECK(cfg.kind.model == Model::generalized_dicke);
    CHECK(cfg.params.g1 == 0.2);
    REQUIRE(cfg.axes.size() == 1);
    CHECK(cfg.axes[0].param == "g1");
    CHECK(cfg.axes[0].steps == 16);
    REQUIRE(cfg.outputs.size() == 2);
    CHECK(cfg.threads == 2);
    CHECK_NOTHROW(validate_config(cfg));
}

TEST_CASE("config validation rejects bad sweeps") {
    SweepConfig cfg = betac_config();
    SECTION("steps < 2") {
        cfg.axes[0].steps = 1;
        CHECK_THROWS_AS(validate_config(cfg), DomainError);
    }
    SECTION("duplicate swept parameter") {
        cfg.axes = {Axis{"g1", 0.0, 1.0, 4}, Axis{"g1", 0.0, 1.0, 4}};
        CHECK_THROWS_AS(validate_config(cfg), DomainError);
    }
    SECTION("log scale needs positive range") {
        cfg.axes[0].scale = AxisScale::log;
        cfg.axes[0].min = 0.0;
        CHECK_THROWS_AS(validate_config(cfg), DomainError);
    }
    SECTION("empty output set") {
        cfg.outputs.clear();
        CHECK_THROWS_AS(validate_config(cfg), DomainError);
    }
    SECTION("unknown swept parameter") {
        cfg.axes[0].param = "n_atoms";
        CHECK_THROWS_AS(validate_config(cfg), DomainError);
    }
}

TEST_CASE("zero-coupling sweep labels no_transition with unit ratio") {
    SweepConfig cfg;
    cfg.kind = {Model::generalized_dicke, CouplingMode::general};
    cfg.axes = {Axis{"g1", 0.0, 0.0, 2, AxisScale::linear}};
    cfg.outputs = {Output::condition, Output::ratio};
    const SweepResult res = run_sweep(cfg);
    REQUIRE(res.points.size() == 2);
    for (const auto& pt : res.points) {
        CHECK(pt.phase == Phase::no_transition);
        CHECK(pt.outputs.at("ratio") == 1.0);
        CHECK(pt.outputs.at("condition") == 0.0);
        CHECK(pt.diagnostics.empty());
    }
}

TEST_CASE("beta ramp flips normal -> superradiant at the closed-form beta_c") {
    const SweepConfig cfg = betac_config();
    const SweepResult res = run_sweep(cfg);
    REQUIRE(res.points.size() == 31);
    bool seen_normal = false, seen_super = false;
    for (const auto& pt : res.points) {
        if (pt.phase == Phase::normal) seen_normal = true;
        if (pt.phase == Phase::superradiant) {
            seen_super = true;
            CHECK(pt.outputs.at("condition") >= 1.0);
        }
    }
    CHECK(seen_normal);
    CHECK(seen_super);
    REQUIRE(res.critical_line.size() == 1);
    CHECK_THAT(res.critical_line[0].axis_values[0],
               WithinAbs(3.4259571827498814094, 2e-6));
}

TEST_CASE("zero-temperature coupling axis finds the quantum critical line") {
    SweepConfig cfg;
    cfg.kind = {Model::generalized_dicke, CouplingMode::rwa_only};
    cfg.params.zero_temperature = true;
    cfg.axes = {Axis{"g1", 0.5, 2.0, 16, AxisScale::linear}};
    cfg.outputs = {Output::condition};
    const SweepResult res = run_sweep(cfg);
    REQUIRE(res.critical_line.size() == 1);
    CHECK_THAT(res.critical_line[0].axis_values[0], WithinAbs(1.0, 2e-6));
}

TEST_CASE("per-point failures land in diagnostics without aborting") {
    SweepConfig cfg = betac_config();
    cfg.axes = {Axis{"beta", 2.0, 5.0, 4, AxisScale::linear}};
    const SweepResult res = run_sweep(cfg);
    bool saw_error = false;
    for (const auto& pt : res.points)
        if (!pt.diagnostics.empty()) saw_error = true;
    CHECK(saw_error); // superradiant points cannot evaluate the ratio product
}

TEST_CASE("CSV output is deterministic and properly quoted") {
    const SweepConfig cfg = betac_config();
    const SweepResult res = run_sweep(cfg);
    const std::string csv1 = render_csv(cfg, res);
    const std::string csv2 = render_csv(cfg, res);
    CHECK(csv1 == csv2);
    CHECK(csv1.rfind("beta,phase,condition,betac,ratio,diagnostics\r\n", 0) == 0);
    // RFC-4180 quoting
    CHECK(csv_quote("plain") == "plain");
    CHECK(csv_quote("a,b") == "\"a,b\"");
    CHECK(csv_quote("say \"hi\"") == "\"say \"\"hi\"\"\"");

    SECTION("byte-identical across thread counts") {
        SweepConfig c1 = cfg;
        c1.threads = 1;
        SweepConfig c8 = cfg;
        c8.threads = 8;
        CHECK(render_csv(c1, run_sweep(c1)) == render_csv(c8, run_sweep(c8)));
    }
}

TEST_CASE("JSON round-trips every numeric field bit-exactly") {
    const SweepConfig cfg = betac_config();
    const SweepResult res = run_sweep(cfg);
    std::ostringstream os;
    write_json(os, cfg, res);
    const nlohmann::json back = nlohmann::json::parse(os.str());
    REQUIRE(back["points"].size() == res.points.size());
    for (size_t i = 0; i < res.points.size(); ++i) {
        const auto& jp = back["points"][i];
        for (const auto& [name, value] : res.points[i].outputs) {
            if (std::isnan(value))
                CHECK(jp["outputs"][name].is_null());
            else
                CHECK(jp["outputs"][name].get<double>() == value);
        }
        for (size_t a = 0; a < res.points[i].axis_values.size(); ++a)
            CHECK(jp["axis_values"][a].get<double>() == res.points[i].axis_values[a]);
    }
    CHECK(back["summary"]["version"].get<std::string>() == kVersion);
}

TEST_CASE("cache reuse reproduces the uncached run bit-exactly") {
    namespace fs = std::filesystem;
    const fs::path cache = fs::temp_directory_path() / "spinboson_test_cache.json";
    std::error_code ec;
    fs::remove(cache, ec);

    SweepConfig cfg = betac_config(); // superradiant rows carry NaN ratios
    cfg.cache_path = cache.string();
    const std::string first = render_csv(cfg, run_sweep(cfg));
    REQUIRE(fs::exists(cache));
    const std::string second = render_csv(cfg, run_sweep(cfg)); // cache hit
    CHECK(first == second);

    SweepConfig plain = betac_config();
    const std::string uncached = render_csv(plain, run_sweep(plain));
    CHECK(first == uncached);

    SECTION("the hit path really reads the file, not a recompute") {
        std::ifstream in(cache);
        nlohmann::json j;
        in >> j;
        in.close();
        j["points"][0]["outputs"]["condition"] = 123456.5; // poison one value
        std::ofstream outf(cache);
        outf << j.dump();
        outf.close();
        const std::string poisoned = render_csv(cfg, run_sweep(cfg));
        CHECK(poisoned.find("123456.5") != std::string::npos);
    }
    fs::remove(cache, ec);
}

TEST_CASE("order parameter output joins the sweep through the oracle") {
    SweepConfig cfg;
    cfg.kind = {Model::generalized_dicke, CouplingMode::general};
    cfg.params.n_atoms = 2;
    cfg.n_max = 20;
    cfg.axes = {Axis{"g1", 0.0, 0.4, 3, AxisScale::linear}};
    cfg.outputs = {Output::order_parameter};
    const SweepResult res = run_sweep(cfg);
    for (const auto& pt : res.points) {
        CHECK(pt.outputs.at("order_parameter") >= 0.0);
        CHECK(pt.diagnostics.empty());
    }
}
