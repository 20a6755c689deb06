#pragma once

#include "swob/dual.hpp"
#include "swob/mc.hpp"
#include "swob/model.hpp"
#include "swob/solver.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace swob {

inline constexpr const char* kArtifactVersion = "0.3.0";

enum class CacheMode { ReadWrite, ReadOnly, Off };
enum class MethodSelect { Penalized, Lcp, Both };

struct RunConfig {
    ModelParams params;
    CostSchedule costs;

    std::size_t n_x = 512, n_tau = 512;
    TimeScheme scheme = TimeScheme::ImplicitEuler;
    bool use_auto_domain = true;
    double x_min = 0.0, x_max = 0.0;  // honored when use_auto_domain is false

    double penalty_epsilon = 1e-3;
    double lcp_omega = 1.5;
    double lcp_tol = 1e-10;

    McConfig mc;

    MethodSelect method = MethodSelect::Both;
    CacheMode cache = CacheMode::ReadWrite;
    std::string out_dir = "out";

    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::string& path);
    nlohmann::json to_json() const;  // effective config, defaults filled in

    /// Applies --grid-scale: multiplies n_x and n_tau.
    void scale_grid(double k);
};

struct StageRecord {
    std::string name;
    std::string status;  // ok | cache-hit | failed | blocked | skipped
    double wall_ms = 0.0;
    std::string detail;
};

struct FileRecord {
    std::string name;      // relative to out_dir
    std::string checksum;  // fnv1a-64, hex
};

struct RunManifest {
    std::string config_hash;
    std::string version = kArtifactVersion;
    std::vector<StageRecord> stages;
    std::vector<FileRecord> files;

    const StageRecord* find(const std::string& name) const;
    bool ok() const;
    /// 0 ok, 2 validation failure, 3 solver failure, 4 verification failure.
    int exit_code() const;
    nlohmann::json to_json() const;
};

/// Stage-sequential pipeline: validate, solve (both methods), cross-compare,
/// boundary extraction + diagnostics, dual recovery, MC verification, export.
/// A failed stage blocks its dependents; the manifest always gets written.
/// stop_after (a stage name) marks later compute stages "skipped" but still
/// exports whatever exists; empty means run everything.
RunManifest run_pipeline(const RunConfig& cfg, const std::string& stop_after = "");

}  // namespace swob
