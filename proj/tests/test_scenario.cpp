#include "sres/scenario.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace sres;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("sres_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string error_code(const std::function<void()>& f, std::string* message = nullptr) {
    try {
        f();
    } catch (const Error& e) {
        if (message) *message = e.what();
        return e.code();
    }
    return "";
}

}  // namespace

TEST_SUITE("scenario") {

TEST_CASE("delta outside the admissible range names the constraint") {
    ScenarioConfig c;
    c.delta = 0.7;
    std::string msg;
    CHECK(error_code([&] { c.validate(); }, &msg) == "InvalidConfig");
    CHECK(msg.find("0<δ≤½") != std::string::npos);
}

TEST_CASE("every preset validates and the list is complete") {
    const auto& names = experiment_names();
    CHECK(names.size() == 11);
    for (const auto& n : names) {
        const ScenarioConfig c = preset(n);
        CHECK(c.experiment == n);
        CHECK_NOTHROW(c.validate());
    }
    CHECK(error_code([] { preset("no-such-thing"); }) == "InvalidConfig");
}

TEST_CASE("configuration survives a json round trip") {
    ScenarioConfig c = preset("theorem-A");
    c.eps = 0.04;
    c.B.reset();
    c.thetas = {0.4, 0.55};
    const ScenarioConfig d = ScenarioConfig::from_json(c.to_json());
    CHECK(d.to_json() == c.to_json());
    CHECK(d.hash() == c.hash());
}

TEST_CASE("hash ignores where results go") {
    ScenarioConfig c;
    ScenarioConfig d = c;
    d.out_dir = "/somewhere/else";
    d.use_cache = false;
    CHECK(c.hash() == d.hash());
    d.h = 0.035;
    CHECK(c.hash() != d.hash());
}

TEST_CASE("cache round trip and corrupt entries") {
    const fs::path dir = scratch("cache");
    Cache cache(dir.string());
    CHECK_FALSE(cache.get("k").has_value());
    CHECK(cache.misses == 1);
    cache.put("k", "payload");
    CHECK(cache.get("k").value() == "payload");
    CHECK(cache.hits == 1);

    // flip one payload byte
    {
        std::fstream f(dir / "k.bin", std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(-1, std::ios::end);
        f.put('X');
    }
    CHECK_FALSE(cache.get("k").has_value());
    CHECK(cache.misses == 2);
    REQUIRE(cache.warnings.size() == 1);
    CHECK(cache.warnings[0].find("CorruptEntry") != std::string::npos);
    CHECK(cache.gc(false) == 1);
    CHECK_FALSE(fs::exists(dir / "k.bin"));
}

TEST_CASE("corrupt fill entry is recomputed") {
    const fs::path dir = scratch("fill");
    ScenarioConfig c;
    c.fill_N = 120;
    Cache cache(dir.string());
    Pipeline pl(c, &cache);
    const SeaFill first = pl.sea_fill(0.05);
    CHECK(cache.misses == 1);
    for (const auto& e : fs::directory_iterator(dir)) {
        std::fstream f(e.path(), std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(40);
        f.put('\x7f');
    }
    const SeaFill again = pl.sea_fill(0.05);
    CHECK(cache.misses == 2);
    CHECK(cache.warnings.size() == 1);
    CHECK(again.C == first.C);
    CHECK(again.W.values == first.W.values);
}

TEST_CASE("fills are shared across h while operators are not") {
    const fs::path dir = scratch("share");
    ScenarioConfig c;
    c.fill_N = 120;
    Cache cache(dir.string());
    Pipeline a(c, &cache);
    a.well_fill(0.05);
    CHECK(cache.misses == 1);
    c.h = 0.035;
    Pipeline b(c, &cache);
    b.well_fill(0.05);
    CHECK(cache.hits == 1);

    a.build(Pipeline::Kind::P, 0.05, 0.05, 0.5);
    const std::size_t m = cache.misses;
    b.build(Pipeline::Kind::P, 0.05, 0.035, 0.5);
    CHECK(cache.misses == m + 1);
    a.build(Pipeline::Kind::P, 0.05, 0.05, 0.5);
    CHECK(cache.misses == m + 1);
}

TEST_CASE("bundles are deterministic for identical configuration") {
    const fs::path dir = scratch("bundle");
    ScenarioConfig c = preset("dilation");
    c.out_dir = dir.string();
    c.use_cache = false;
    const ReportBundle x = run_scenario(c);
    const ReportBundle y = run_scenario(c);
    CHECK(x.to_json().dump() == y.to_json().dump());
    CHECK(x.config_hash == c.hash());
    CHECK_FALSE(x.to_json().contains("wall_times"));
}

TEST_CASE("stage errors are wrapped with the stage name") {
    const fs::path dir = scratch("stage");
    ScenarioConfig c = preset("weyl-pint");
    c.out_dir = dir.string();
    c.use_cache = false;
    // a lone well has no saddle
    c.potential.terms = {GaussianTerm{-1.0, {0.0, 0.0}, 1.0, false, 0.0}};
    std::string msg;
    CHECK_FALSE(error_code([&] { run_scenario(c); }, &msg).empty());
    CHECK(msg.find("stage potential") != std::string::npos);
}

}  // TEST_SUITE
