#include "swob/pipeline.hpp"

#include "swob/io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir = "out";
    std::string cache = "read-write";
    std::string method = "both";
    std::optional<std::uint64_t> seed;
    double grid_scale = 1.0;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool config_required = true) {
    auto* c = cmd->add_option("--config", o.config_path, "run configuration (JSON)");
    if (config_required) c->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--cache", o.cache, "cache policy")
        ->check(CLI::IsMember({"read-write", "read-only", "off"}));
    cmd->add_option("--seed", o.seed, "Monte Carlo seed override");
    cmd->add_option("--grid-scale", o.grid_scale, "multiplies n_x and n_tau")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--method", o.method, "solver selection")
        ->check(CLI::IsMember({"penalized", "lcp", "both"}));
}

swob::RunConfig build_config(const CommonOpts& o) {
    swob::RunConfig cfg = swob::RunConfig::load(o.config_path);
    cfg.out_dir = o.out_dir;
    cfg.cache = o.cache == "read-write"  ? swob::CacheMode::ReadWrite
                : o.cache == "read-only" ? swob::CacheMode::ReadOnly
                                         : swob::CacheMode::Off;
    cfg.method = o.method == "penalized" ? swob::MethodSelect::Penalized
                 : o.method == "lcp"     ? swob::MethodSelect::Lcp
                                         : swob::MethodSelect::Both;
    if (o.seed) cfg.mc.seed = *o.seed;
    if (o.grid_scale != 1.0) cfg.scale_grid(o.grid_scale);
    return cfg;
}

int run_to(const CommonOpts& o, const std::string& stop_after) {
    const swob::RunConfig cfg = build_config(o);
    const swob::RunManifest man = swob::run_pipeline(cfg, stop_after);
    for (const auto& s : man.stages) {
        std::printf("%-16s %-9s %8.1f ms  %s\n", s.name.c_str(), s.status.c_str(), s.wall_ms,
                    s.detail.c_str());
    }
    return man.exit_code();
}

int cmd_report(const std::string& out_dir) {
    const std::string path = out_dir + "/manifest.json";
    std::ifstream is(path);
    if (!is) {
        std::fprintf(stderr, "no manifest at %s\n", path.c_str());
        return 2;
    }
    nlohmann::json j;
    is >> j;
    std::printf("artifact %s, config %s\n", j.value("version", std::string("?")).c_str(),
                j.value("config_hash", std::string("?")).c_str());
    for (const auto& s : j["stages"])
        std::printf("%-16s %-9s %8.1f ms  %s\n", s.value("name", std::string()).c_str(),
                    s.value("status", std::string()).c_str(), s.value("wall_ms", 0.0),
                    s.value("detail", std::string()).c_str());
    bool all_match = true;
    for (const auto& f : j["files"]) {
        const std::string name = f.value("name", std::string());
        std::string actual = "missing";
        try {
            actual = swob::hex64(swob::fnv1a64_file(out_dir + "/" + name));
        } catch (const std::exception&) {
        }
        const bool match = actual == f.value("checksum", std::string());
        all_match = all_match && match;
        std::printf("  %-24s %s %s\n", name.c_str(), f.value("checksum", std::string()).c_str(),
                    match ? "ok" : "MISMATCH");
    }
    return all_match ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Obstacle-problem solver and verification toolkit for optimal "
                 "consumption/investment with job switching"};
    app.require_subcommand(1);

    CommonOpts o;
    std::string report_dir = "out";

    auto* c_validate = app.add_subcommand("validate", "check model assumptions and stop");
    auto* c_solve = app.add_subcommand("solve", "solve the obstacle problem (plus method cross-check)");
    auto* c_bound = app.add_subcommand("boundaries", "solve and extract the free boundaries");
    auto* c_dual = app.add_subcommand("duality", "recover the dual value surfaces");
    auto* c_verify = app.add_subcommand("verify", "full verification including Monte Carlo");
    auto* c_run = app.add_subcommand("run", "full pipeline (alias of verify + export)");
    auto* c_report = app.add_subcommand("report", "print an existing run manifest");
    for (auto* c : {c_validate, c_solve, c_bound, c_dual, c_verify, c_run}) add_common(c, o);
    c_report->add_option("--out", report_dir, "output directory of the run");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_validate->parsed()) return run_to(o, "validate");
        if (c_solve->parsed()) return run_to(o, "cross_compare");
        if (c_bound->parsed()) return run_to(o, "boundaries");
        if (c_dual->parsed()) return run_to(o, "dual_recovery");
        if (c_verify->parsed() || c_run->parsed()) return run_to(o, "");
        if (c_report->parsed()) return cmd_report(report_dir);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
