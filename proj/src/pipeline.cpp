#include "swob/pipeline.hpp"

#include "swob/boundary.hpp"
#include "swob/io.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

namespace swob {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json cost_to_json(const CostFunction& f) {
    json j;
    switch (f.kind) {
        case CostFunction::Kind::Constant:
            j["kind"] = "constant";
            j["value"] = f.a;
            break;
        case CostFunction::Kind::Affine:
            j["kind"] = "affine";
            j["intercept"] = f.a;
            j["slope"] = f.b;
            break;
        case CostFunction::Kind::ExpDecay:
            j["kind"] = "exp_decay";
            j["floor"] = f.a;
            j["scale"] = f.b;
            j["rate"] = f.c;
            break;
        case CostFunction::Kind::CubicSpline:
            j["kind"] = "spline";
            j["t"] = f.knots_t;
            j["values"] = f.knots_y;
            break;
    }
    return j;
}

CostFunction cost_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "constant") return CostFunction::constant(j.at("value").get<double>());
    if (kind == "affine")
        return CostFunction::affine(j.at("intercept").get<double>(), j.at("slope").get<double>());
    if (kind == "exp_decay")
        return CostFunction::exp_decay(j.at("floor").get<double>(), j.at("scale").get<double>(),
                                       j.at("rate").get<double>());
    if (kind == "spline")
        return CostFunction::spline(j.at("t").get<std::vector<double>>(),
                                    j.at("values").get<std::vector<double>>());
    throw std::invalid_argument("cost_from_json: unknown kind '" + kind + "'");
}

struct StageTimer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    }
};

void write_text(const fs::path& p, const std::string& body) {
    std::ofstream os(p, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + p.string());
    os << body;
    if (!os) throw std::runtime_error("write failed for " + p.string());
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
    RunConfig c;
    const json& m = j.at("model");
    m.at("r").get_to(c.params.r);
    m.at("mu").get_to(c.params.mu);
    m.at("sigma").get_to(c.params.sigma);
    m.at("beta").get_to(c.params.beta);
    m.at("gamma").get_to(c.params.gamma);
    m.at("alpha").get_to(c.params.alpha);
    m.at("T").get_to(c.params.T);
    m.at("eps0").get_to(c.params.eps0);
    m.at("eps1").get_to(c.params.eps1);
    m.at("L0").get_to(c.params.L0);
    m.at("L1").get_to(c.params.L1);
    m.at("Lbar").get_to(c.params.Lbar);

    c.costs.phi0 = cost_from_json(j.at("costs").at("phi0"));
    c.costs.phi1 = cost_from_json(j.at("costs").at("phi1"));

    if (j.contains("grid")) {
        const json& g = j["grid"];
        c.n_x = g.value("n_x", c.n_x);
        c.n_tau = g.value("n_tau", c.n_tau);
        const std::string s = g.value("scheme", std::string("implicit_euler"));
        if (s == "implicit_euler")
            c.scheme = TimeScheme::ImplicitEuler;
        else if (s == "crank_nicolson")
            c.scheme = TimeScheme::CrankNicolson;
        else
            throw std::invalid_argument("grid.scheme must be implicit_euler or crank_nicolson");
        c.use_auto_domain = g.value("auto_domain", true);
        c.x_min = g.value("x_min", 0.0);
        c.x_max = g.value("x_max", 0.0);
    }
    if (j.contains("penalty")) c.penalty_epsilon = j["penalty"].value("epsilon", c.penalty_epsilon);
    if (j.contains("lcp")) {
        c.lcp_omega = j["lcp"].value("omega", c.lcp_omega);
        c.lcp_tol = j["lcp"].value("tol", c.lcp_tol);
    }
    if (j.contains("mc")) {
        const json& m2 = j["mc"];
        c.mc.n_paths = m2.value("n_paths", c.mc.n_paths);
        c.mc.n_steps = m2.value("n_steps", c.mc.n_steps);
        c.mc.seed = m2.value("seed", c.mc.seed);
        c.mc.antithetic = m2.value("antithetic", c.mc.antithetic);
        c.mc.y0 = m2.value("y0", c.mc.y0);
        c.mc.j0 = m2.value("j0", c.mc.j0);
    }
    if (j.contains("method")) {
        const std::string s = j["method"].get<std::string>();
        if (s == "penalized")
            c.method = MethodSelect::Penalized;
        else if (s == "lcp")
            c.method = MethodSelect::Lcp;
        else if (s == "both")
            c.method = MethodSelect::Both;
        else
            throw std::invalid_argument("method must be penalized, lcp, or both");
    }
    if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
    return c;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("RunConfig::load: cannot open " + path);
    json j;
    is >> j;
    return from_json(j);
}

json RunConfig::to_json() const {
    json j;
    j["model"] = {{"r", params.r},     {"mu", params.mu},     {"sigma", params.sigma},
                  {"beta", params.beta}, {"gamma", params.gamma}, {"alpha", params.alpha},
                  {"T", params.T},     {"eps0", params.eps0}, {"eps1", params.eps1},
                  {"L0", params.L0},   {"L1", params.L1},     {"Lbar", params.Lbar}};
    j["costs"] = {{"phi0", cost_to_json(costs.phi0)}, {"phi1", cost_to_json(costs.phi1)}};
    j["grid"] = {{"n_x", n_x},
                 {"n_tau", n_tau},
                 {"scheme", scheme == TimeScheme::ImplicitEuler ? "implicit_euler"
                                                                : "crank_nicolson"},
                 {"auto_domain", use_auto_domain},
                 {"x_min", x_min},
                 {"x_max", x_max}};
    j["penalty"] = {{"epsilon", penalty_epsilon}};
    j["lcp"] = {{"omega", lcp_omega}, {"tol", lcp_tol}};
    j["mc"] = {{"n_paths", mc.n_paths}, {"n_steps", mc.n_steps},   {"seed", mc.seed},
               {"antithetic", mc.antithetic}, {"y0", mc.y0}, {"j0", mc.j0}};
    j["method"] = method == MethodSelect::Penalized ? "penalized"
                  : method == MethodSelect::Lcp    ? "lcp"
                                                   : "both";
    j["out_dir"] = out_dir;
    return j;
}

void RunConfig::scale_grid(double k) {
    if (!(k > 0.0)) throw std::invalid_argument("grid scale must be positive");
    n_x = std::size_t(std::lround(double(n_x) * k));
    n_tau = std::size_t(std::lround(double(n_tau) * k));
}

const StageRecord* RunManifest::find(const std::string& name) const {
    for (const auto& s : stages)
        if (s.name == name) return &s;
    return nullptr;
}

bool RunManifest::ok() const {
    for (const auto& s : stages)
        if (s.status == "failed" || s.status == "blocked") return false;
    return true;
}

int RunManifest::exit_code() const {
    for (const auto& s : stages) {
        if (s.status != "failed") continue;
        if (s.name == "validate") return 2;
        if (s.name.rfind("solve.", 0) == 0) return 3;
        return 4;
    }
    return 0;
}

json RunManifest::to_json() const {
    json j;
    j["config_hash"] = config_hash;
    j["version"] = version;
    j["stages"] = json::array();
    for (const auto& s : stages)
        j["stages"].push_back(
            {{"name", s.name}, {"status", s.status}, {"wall_ms", s.wall_ms}, {"detail", s.detail}});
    j["files"] = json::array();
    for (const auto& f : files) j["files"].push_back({{"name", f.name}, {"checksum", f.checksum}});
    return j;
}

RunManifest run_pipeline(const RunConfig& cfg, const std::string& stop_after) {
    RunManifest man;
    const std::string effective = cfg.to_json().dump(2);
    man.config_hash = hex64(fnv1a64(effective.data(), effective.size()));

    const fs::path out(cfg.out_dir);
    fs::create_directories(out);
    write_text(out / "effective_config.json", effective + "\n");

    bool failed = false;
    bool stopped = false;
    auto stage = [&](const std::string& name, auto&& fn) {
        StageRecord rec;
        rec.name = name;
        if (failed) {
            rec.status = "blocked";
            man.stages.push_back(rec);
            return;
        }
        if (stopped && name != "export") {
            rec.status = "skipped";
            man.stages.push_back(rec);
            return;
        }
        StageTimer tm;
        try {
            const std::string detail = fn();
            rec.status = detail.rfind("cache-hit", 0) == 0 ? "cache-hit" : "ok";
            rec.detail = detail;
        } catch (const std::exception& e) {
            rec.status = "failed";
            rec.detail = e.what();
            failed = true;
        }
        rec.wall_ms = tm.ms();
        man.stages.push_back(rec);
        if (name == stop_after) stopped = true;
    };
    auto skip_stage = [&](const std::string& name) {
        man.stages.push_back({name, failed ? "blocked" : "skipped", 0.0, ""});
        if (name == stop_after) stopped = true;
    };

    std::optional<DerivedSchedule> derived;
    std::optional<GridSpec> grid;
    std::optional<SolutionField> pen, lcp;
    std::optional<DualSolution> dual;
    FreeBoundaryCurve chi0, chi1;
    OriginalBoundary S0, S1;
    json diagnostics, mc_report;

    stage("validate", [&]() -> std::string {
        cfg.params.check_valid();
        const AssumptionReport rep = validate_assumptions(cfg.params, cfg.costs);
        json checks = json::array();
        for (const auto& c : rep.checks)
            checks.push_back({{"name", c.name},
                              {"pass", c.pass},
                              {"worst_margin", c.worst_margin},
                              {"worst_t", c.worst_t}});
        diagnostics["assumptions"] = checks;
        if (!rep.pass) {
            std::string names;
            for (const auto& c : rep.checks)
                if (!c.pass) names += (names.empty() ? "" : ", ") + c.name;
            throw std::runtime_error("assumption violation: " + names);
        }
        derived.emplace(cfg.params, cfg.costs);
        return "all assumptions hold";
    });

    stage("domain", [&]() -> std::string {
        if (cfg.use_auto_domain) {
            grid = auto_domain(*derived, cfg.n_x, cfg.n_tau, cfg.scheme);
        } else {
            grid = GridSpec{cfg.x_min, cfg.x_max, cfg.n_x, cfg.n_tau, cfg.params.T, cfg.scheme};
            grid->check_valid();
        }
        std::ostringstream os;
        os << "x in [" << grid->x_min << ", " << grid->x_max << "]";
        return os.str();
    });

    const fs::path cache_dir = out / "cache";
    auto solve_stage = [&](SolveMethod m, std::optional<SolutionField>& slot) -> std::string {
        const char* tag = m == SolveMethod::Penalized ? "pen" : "lcp";
        json key = cfg.to_json();
        key.erase("mc");
        key.erase("out_dir");
        key["solve_method"] = tag;
        key["version"] = kArtifactVersion;
        key["domain"] = {{"x_min", grid->x_min}, {"x_max", grid->x_max}};
        const std::string dump = key.dump();
        const fs::path cache_file =
            cache_dir / ("field_" + std::string(tag) + "_" + hex64(fnv1a64(dump.data(), dump.size())) + ".bin");

        if (cfg.cache != CacheMode::Off && cache_matches(cache_file.string(), *grid, m)) {
            slot = load_field(cache_file.string());
            return "cache-hit " + cache_file.filename().string();
        }
        if (m == SolveMethod::Penalized) {
            const PenaltyConfig pc = PenaltyConfig::make(*derived, *grid, cfg.penalty_epsilon);
            slot = solve_penalized(*derived, *grid, pc);
        } else {
            slot = solve_lcp(*derived, *grid, cfg.lcp_omega, cfg.lcp_tol);
        }
        if (!slot->stats.converged)
            throw std::runtime_error(std::string("solver did not converge: ") + slot->stats.note);
        if (cfg.cache == CacheMode::ReadWrite) {
            fs::create_directories(cache_dir);
            save_field(cache_file.string(), *slot);
        }
        std::ostringstream os;
        os << "iterations=" << slot->stats.total_iterations
           << " worst_residual=" << slot->stats.worst_residual;
        return os.str();
    };

    if (cfg.method != MethodSelect::Lcp)
        stage("solve.penalized", [&] { return solve_stage(SolveMethod::Penalized, pen); });
    else
        skip_stage("solve.penalized");
    if (cfg.method != MethodSelect::Penalized)
        stage("solve.lcp", [&] { return solve_stage(SolveMethod::Lcp, lcp); });
    else
        skip_stage("solve.lcp");

    if (cfg.method == MethodSelect::Both)
        stage("cross_compare", [&]() -> std::string {
            double gap = 0.0;
            for (std::size_t i = 0; i < pen->v.size(); ++i)
                gap = std::max(gap, std::abs(pen->v[i] - lcp->v[i]));
            const double scale = std::max(pen->max_abs(), 1e-300);
            diagnostics["cross_method"] = {{"linf_gap", gap}, {"relative_gap", gap / scale}};
            if (gap > 5e-3 * scale)
                throw std::runtime_error("method disagreement: relative gap " +
                                         fmt_g17(gap / scale));
            std::ostringstream os;
            os << "relative gap " << gap / scale;
            return os.str();
        });
    else
        skip_stage("cross_compare");

    const SolutionField* field = lcp ? &*lcp : (pen ? &*pen : nullptr);
    stage("boundaries", [&]() -> std::string {
        chi0 = extract_chi(*field, *derived, BoundarySide::Lower);
        chi1 = extract_chi(*field, *derived, BoundarySide::Upper);
        S0 = to_original(chi0, cfg.params.T);
        S1 = to_original(chi1, cfg.params.T);

        // Localization: chi0 below Gamma0, chi1 above Gamma1, both within dx.
        double worst0 = -1e300, worst1 = 1e300;
        for (std::size_t i = 0; i < chi0.taus.size(); ++i)
            worst0 = std::max(worst0, chi0.xs[i] - derived->Gamma0(chi0.taus[i]));
        for (std::size_t i = 0; i < chi1.taus.size(); ++i)
            worst1 = std::min(worst1, chi1.xs[i] - derived->Gamma1(chi1.taus[i]));
        const ContactTopologyReport topo = contact_topology(*field, *derived);
        const LipschitzReport lip0 = lipschitz_estimate(chi0, 8);
        const LipschitzReport lip1 = lipschitz_estimate(chi1, 8);
        const double T = cfg.params.T;
        const BandReport band0 =
            derivative_band_check(*field, *derived, chi0, 0.2 * T, 0.8 * T);
        const double lo1 = derived->tau1() + 0.15 * (T - derived->tau1());
        const BandReport band1 = derivative_band_check_upper(*field, *derived, chi1, lo1, 0.9 * T);

        diagnostics["boundaries"] = {
            {"chi0_slices", chi0.taus.size()},
            {"chi1_slices", chi1.taus.size()},
            {"chi0_minus_Gamma0_max", worst0},
            {"chi1_minus_Gamma1_min", worst1},
            {"chi0_anomalies", chi0.anomalies},
            {"chi1_anomalies", chi1.anomalies},
            {"topology_lower_anomalies", topo.lower_anomalies},
            {"topology_upper_anomalies", topo.upper_anomalies},
            {"chi0_lipschitz_max", lip0.max_quotient},
            {"chi1_lipschitz_max", lip1.max_quotient},
            {"band_lower", {{"C_minus", band0.C_minus}, {"C_plus", band0.C_plus},
                            {"nodes", band0.nodes_tested}, {"dx_nonpositive", band0.dx_nonpositive}}},
            {"band_upper", {{"C_minus", band1.C_minus}, {"C_plus", band1.C_plus},
                            {"nodes", band1.nodes_tested}, {"dx_nonpositive", band1.dx_nonpositive}}}};

        if (chi0.empty()) throw std::runtime_error("lower boundary not detected");
        if (worst0 > field->grid.dx())
            throw std::runtime_error("lower boundary escapes its localization curve");
        if (!chi1.empty() && worst1 < -field->grid.dx())
            throw std::runtime_error("upper boundary escapes its localization curve");
        if (topo.lower_anomalies + topo.upper_anomalies > 0)
            throw std::runtime_error("contact sets are not edge intervals");
        std::ostringstream os;
        os << chi0.taus.size() << " lower / " << chi1.taus.size() << " upper slices";
        return os.str();
    });

    stage("dual_recovery", [&]() -> std::string {
        dual = recover_P(*field, *derived);
        const double scale = std::max(field->max_abs(), 1e-300);
        diagnostics["dual"] = {{"consistency_error", dual->consistency_error},
                               {"relative_consistency", dual->consistency_error / scale}};
        if (dual->consistency_error > 5e-3 * scale)
            throw std::runtime_error("difference-of-values identity violated: " +
                                     fmt_g17(dual->consistency_error));
        return "consistency " + fmt_g17(dual->consistency_error);
    });

    stage("mc_verify", [&]() -> std::string {
        const ModelParams& p = cfg.params;
        auto pack = [](const McEstimate& e, double ref) {
            return json{{"mean", e.mean}, {"stderr", e.stderr_}, {"n", e.n},
                        {"reference", ref}, {"within_3se", e.within(ref)}};
        };
        const McEstimate mart = mc_martingale(p, cfg.mc);
        const McEstimate mert = mc_merton(p, cfg.mc);
        mc_report["martingale"] = pack(mart, cfg.mc.y0);
        mc_report["merton"] = pack(mert, merton_JR(p, cfg.mc.y0));

        const McReport dj = evaluate_dual_objective(*derived, S0, S1, cfg.mc);
        const double j_ref = dual_value_J(*dual, *derived, cfg.mc.j0, cfg.mc.y0);
        mc_report["dual_objective"] = pack(dj.total, j_ref);
        mc_report["dual_objective"]["breakdown"] = {{"flow", dj.flow_mean},
                                                    {"terminal", dj.terminal_mean},
                                                    {"switch", dj.switch_mean},
                                                    {"events", dj.n_switch_events}};

        const double w_ref = optimal_controls(*dual, *derived, 0.0, cfg.mc.y0, cfg.mc.j0).W;
        const McReport bud = evaluate_budget(*derived, S0, S1, cfg.mc, w_ref);
        mc_report["budget"] = pack(bud.total, w_ref);
        mc_report["budget"]["breakdown"] = {{"net_consumption", bud.flow_mean},
                                            {"terminal_wealth", bud.terminal_mean},
                                            {"switch_costs", bud.switch_mean},
                                            {"events", bud.n_switch_events}};

        if (!mart.within(cfg.mc.y0)) throw std::runtime_error("martingale check outside 3 stderr");
        if (!mert.within(merton_JR(p, cfg.mc.y0)))
            throw std::runtime_error("closed-form consumption oracle outside 3 stderr");
        if (!dj.total.within(j_ref))
            throw std::runtime_error("dual objective replay outside 3 stderr of the PDE value");
        if (!bud.total.within(w_ref))
            throw std::runtime_error("budget identity outside 3 stderr");
        std::ostringstream os;
        os << "J: " << dj.total.mean << " vs " << j_ref << "; budget: " << bud.total.mean
           << " vs " << w_ref;
        return os.str();
    });

    stage("export", [&]() -> std::string {
        auto add_file = [&](const std::string& name, const std::string& body) {
            write_text(out / name, body);
            man.files.push_back({name, hex64(fnv1a64_file((out / name).string()))});
        };

        if (field) {
            std::ostringstream os;
            os << "t,S0,S0_valid,S1,S1_valid\n";
            const GridSpec& g = field->grid;
            for (std::size_t k = g.nodes_tau(); k-- > 0;) {
                const double t = cfg.params.T - g.tau(k);
                const auto s0 = chi0.at(g.tau(k));
                const auto s1 = chi1.at(g.tau(k));
                os << fmt_g17(t) << ',' << (s0 ? fmt_g17(std::exp(*s0)) : "") << ','
                   << (s0 ? 1 : 0) << ',' << (s1 ? fmt_g17(std::exp(*s1)) : "") << ','
                   << (s1 ? 1 : 0) << '\n';
            }
            add_file("boundaries.csv", os.str());
        }
        if (field) {
            std::ostringstream os;
            os << "tau,x,v,contact_lower,contact_upper\n";
            const GridSpec& g = field->grid;
            for (std::size_t k = 0; k < g.nodes_tau(); ++k)
                for (std::size_t j = 0; j < g.nodes_x(); ++j)
                    os << fmt_g17(g.tau(k)) << ',' << fmt_g17(g.x(j)) << ','
                       << fmt_g17(field->at(k, j)) << ','
                       << int(field->contact_lower[field->idx(k, j)]) << ','
                       << int(field->contact_upper[field->idx(k, j)]) << '\n';
            add_file("value_surface.csv", os.str());
        }
        if (dual) {
            std::ostringstream os;
            os << "y,J0,J1,dJ0,dJ1,W0,W1\n";
            const GridSpec& g = dual->grid;
            const std::size_t k = g.nodes_tau() - 1;
            const double dx = g.dx();
            for (std::size_t j = 1; j + 1 < g.nodes_x(); ++j) {
                const double x = g.x(j), y = std::exp(x);
                const double w0 = dual->w0[dual->idx(k, j)], w1 = dual->w1[dual->idx(k, j)];
                const double w0x =
                    (dual->w0[dual->idx(k, j + 1)] - dual->w0[dual->idx(k, j - 1)]) / (2 * dx);
                const double w1x =
                    (dual->w1[dual->idx(k, j + 1)] - dual->w1[dual->idx(k, j - 1)]) / (2 * dx);
                os << fmt_g17(y) << ',' << fmt_g17(y * w0) << ',' << fmt_g17(y * w1) << ','
                   << fmt_g17(w0 + w0x) << ',' << fmt_g17(w1 + w1x) << ','
                   << fmt_g17(-(w0 + w0x)) << ',' << fmt_g17(-(w1 + w1x)) << '\n';
            }
            add_file("dual_values.csv", os.str());
        }
        return std::to_string(man.files.size()) + " files";
    });

    // Diagnostics and the manifest are written even after a failure so the
    // partial evidence is inspectable.
    try {
        if (!mc_report.empty()) {
            write_text(out / "mc_report.json", mc_report.dump(2) + "\n");
            man.files.push_back(
                {"mc_report.json", hex64(fnv1a64_file((out / "mc_report.json").string()))});
        }
        write_text(out / "diagnostics.json", diagnostics.dump(2) + "\n");
        man.files.push_back(
            {"diagnostics.json", hex64(fnv1a64_file((out / "diagnostics.json").string()))});
        write_text(out / "manifest.json", man.to_json().dump(2) + "\n");
    } catch (const std::exception&) {
        // Out-of-space or permission trouble at the very end; the manifest in
        // memory still reports the stage outcomes.
    }
    return man;
}

}  // namespace swob
