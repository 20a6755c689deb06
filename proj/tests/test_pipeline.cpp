#include "swob/pipeline.hpp"

#include "swob/io.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

using namespace swob;
namespace fs = std::filesystem;

namespace {

RunConfig small_config(const std::string& out_dir) {
    RunConfig cfg;
    cfg.params = baseline_params();
    cfg.costs = baseline_costs();
    cfg.n_x = 96;
    cfg.n_tau = 96;
    cfg.mc.n_paths = 4000;
    cfg.mc.n_steps = 128;
    cfg.mc.y0 = 2.5;
    cfg.mc.j0 = 0;
    cfg.out_dir = out_dir;
    return cfg;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

SolutionField random_field(std::uint64_t seed) {
    SolutionField f;
    f.grid = {-2.0, 3.0, 64, 64, 10.0, TimeScheme::CrankNicolson};
    f.method = SolveMethod::Lcp;
    f.contact_tol = 1e-9;
    const std::size_t n = f.grid.nodes_tau() * f.grid.nodes_x();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    f.v.resize(n);
    f.contact_lower.resize(n);
    f.contact_upper.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        f.v[i] = u(rng);
        f.contact_lower[i] = (i % 7 == 0);
        f.contact_upper[i] = (i % 11 == 0);
    }
    f.stats.total_iterations = 1234;
    f.stats.converged = true;
    return f;
}

}  // namespace

TEST_CASE("checksum matches published reference vectors") {
    CHECK(hex64(fnv1a64("", 0)) == "cbf29ce484222325");
    CHECK(hex64(fnv1a64("a", 1)) == "af63dc4c8601ec8c");
    CHECK(hex64(fnv1a64("foobar", 6)) == "85944171f73967e8");
    // Chained calls equal one pass over the concatenation.
    const std::uint64_t h1 = fnv1a64("foo", 3);
    CHECK(fnv1a64("bar", 3, h1) == fnv1a64("foobar", 6));
}

TEST_CASE("decimal formatting round-trips doubles exactly") {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-17, 1e300, 123456789.123456789, -0.0}) {
        const std::string s = fmt_g17(x);
        CHECK(std::stod(s) == x);
    }
}

TEST_CASE("field cache round-trips and detects corruption") {
    const fs::path dir = fresh_dir("swob_io_test");
    const fs::path file = dir / "field.bin";
    const SolutionField f = random_field(42);
    save_field(file.string(), f);

    const SolutionField g = load_field(file.string());
    CHECK(g.method == f.method);
    CHECK(g.grid.n_x == f.grid.n_x);
    CHECK(g.grid.x_min == f.grid.x_min);
    CHECK(g.grid.scheme == f.grid.scheme);
    CHECK(g.contact_tol == f.contact_tol);
    REQUIRE(g.v.size() == f.v.size());
    for (std::size_t i = 0; i < f.v.size(); ++i) {
        CHECK(g.v[i] == f.v[i]);
        CHECK(g.contact_lower[i] == f.contact_lower[i]);
        CHECK(g.contact_upper[i] == f.contact_upper[i]);
    }
    CHECK(cache_matches(file.string(), f.grid, f.method));

    GridSpec other = f.grid;
    other.n_tau = 128;
    CHECK(!cache_matches(file.string(), other, f.method));
    CHECK(!cache_matches((dir / "missing.bin").string(), f.grid, f.method));

    // Flip one payload byte: the embedded checksum must catch it.
    {
        std::fstream io(file, std::ios::binary | std::ios::in | std::ios::out);
        io.seekp(256);
        char b;
        io.seekg(256);
        io.get(b);
        b ^= 0x1;
        io.seekp(256);
        io.put(b);
    }
    CHECK(!cache_matches(file.string(), f.grid, f.method));
    CHECK_THROWS(load_field(file.string()));
    fs::remove_all(dir);
}

TEST_CASE("run configuration survives a json round trip") {
    RunConfig a = small_config("somewhere");
    a.costs = decaying_costs();
    a.scheme = TimeScheme::CrankNicolson;
    a.method = MethodSelect::Lcp;
    a.penalty_epsilon = 2.5e-4;
    a.mc.antithetic = false;
    const RunConfig b = RunConfig::from_json(a.to_json());
    CHECK(b.to_json() == a.to_json());

    RunConfig c = a;
    c.scale_grid(0.5);
    CHECK(c.n_x == 48);
    CHECK(c.n_tau == 48);
    CHECK_THROWS_AS(c.scale_grid(0.0), std::invalid_argument);
}

TEST_CASE("pipeline runs green end to end and caches the second pass") {
    const fs::path dir = fresh_dir("swob_pipe_test");
    const RunConfig cfg = small_config(dir.string());

    const RunManifest m1 = run_pipeline(cfg);
    for (const auto& s : m1.stages) {
        INFO(s.name, ": ", s.status, " ", s.detail);
        CHECK((s.status == "ok" || s.status == "cache-hit"));
    }
    CHECK(m1.ok());
    CHECK(m1.exit_code() == 0);
    REQUIRE(m1.find("solve.lcp") != nullptr);
    CHECK(m1.find("solve.lcp")->status == "ok");
    for (const char* name :
         {"manifest.json", "boundaries.csv", "value_surface.csv", "dual_values.csv",
          "mc_report.json", "diagnostics.json"})
        CHECK(fs::exists(dir / name));

    std::uint64_t sums[3];
    const char* exports[3] = {"boundaries.csv", "value_surface.csv", "dual_values.csv"};
    for (int i = 0; i < 3; ++i) sums[i] = fnv1a64_file((dir / exports[i]).string());

    const RunManifest m2 = run_pipeline(cfg);
    CHECK(m2.ok());
    CHECK(m2.find("solve.lcp")->status == "cache-hit");
    CHECK(m2.find("solve.penalized")->status == "cache-hit");
    CHECK(m2.config_hash == m1.config_hash);
    for (int i = 0; i < 3; ++i)
        CHECK(fnv1a64_file((dir / exports[i]).string()) == sums[i]);
    fs::remove_all(dir);
}

TEST_CASE("invalid model stops at validation with exit code 2") {
    const fs::path dir = fresh_dir("swob_pipe_invalid");
    RunConfig cfg = small_config(dir.string());
    cfg.params.gamma = 1.0;  // log-utility edge case is out of scope
    const RunManifest m = run_pipeline(cfg);
    CHECK(!m.ok());
    CHECK(m.exit_code() == 2);
    REQUIRE(m.find("validate") != nullptr);
    CHECK(m.find("validate")->status == "failed");
    CHECK(m.find("solve.lcp")->status == "blocked");
    CHECK(m.find("mc_verify")->status == "blocked");
    CHECK(fs::exists(dir / "manifest.json"));
    fs::remove_all(dir);
}

TEST_CASE("stop-after runs the prefix and skips later compute stages") {
    const fs::path dir = fresh_dir("swob_pipe_stop");
    RunConfig cfg = small_config(dir.string());
    cfg.method = MethodSelect::Lcp;
    const RunManifest m = run_pipeline(cfg, "cross_compare");
    CHECK(m.ok());
    CHECK(m.find("solve.lcp")->status == "ok");
    CHECK(m.find("boundaries")->status == "skipped");
    CHECK(m.find("mc_verify")->status == "skipped");
    CHECK(fs::exists(dir / "value_surface.csv"));
    fs::remove_all(dir);
}
