#include "swob/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace swob {

namespace {

/// Thomas algorithm; overwrites the inputs.
void solve_tridiag(std::vector<double>& sub, std::vector<double>& diag, std::vector<double>& sup,
                   std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double m = sub[i] / diag[i - 1];
        diag[i] -= m * sup[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
}

struct OperatorCoeffs {
    double lo, di, up;  // L v_j = lo*v_{j-1} + di*v_j + up*v_{j+1}
};

OperatorCoeffs op_coeffs(const ModelParams& p, const GridSpec& g) {
    const double a = p.theta() * p.theta() / 2.0;
    const double b = p.beta - p.r + a;
    const double dx = g.dx();
    return {a / (dx * dx) - b / (2.0 * dx), -2.0 * a / (dx * dx) - p.r,
            a / (dx * dx) + b / (2.0 * dx)};
}

void mark_contacts(SolutionField& f, const DerivedSchedule& d) {
    const GridSpec& g = f.grid;
    f.contact_lower.assign(f.v.size(), 0);
    f.contact_upper.assign(f.v.size(), 0);
    for (std::size_t k = 0; k < g.nodes_tau(); ++k) {
        const double lo = -d.psi0(g.tau(k)), hi = d.psi1(g.tau(k));
        for (std::size_t j = 0; j < g.nodes_x(); ++j) {
            const double val = f.at(k, j);
            const bool cl = val <= lo + f.contact_tol;
            const bool cu = val >= hi - f.contact_tol;
            if (cl && cu)
                throw std::runtime_error(
                    "mark_contacts: node within threshold of both obstacles; obstacles not "
                    "separated");
            f.contact_lower[f.idx(k, j)] = cl ? 1 : 0;
            f.contact_upper[f.idx(k, j)] = cu ? 1 : 0;
        }
    }
}

}  // namespace

double apply_L(const ModelParams& p, const GridSpec& g, const std::vector<double>& slice,
               std::size_t j) {
    const auto c = op_coeffs(p, g);
    return c.lo * slice[j - 1] + c.di * slice[j] + c.up * slice[j + 1];
}

PenaltyConfig PenaltyConfig::make(const DerivedSchedule& derived, const GridSpec& grid,
                                  double epsilon) {
    if (epsilon <= 0.0) throw std::invalid_argument("PenaltyConfig: epsilon > 0 required");
    double min_sum = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k <= 256; ++k) {
        const double tau = grid.T * double(k) / 256.0;
        min_sum = std::min(min_sum, derived.psi0(tau) + derived.psi1(tau));
    }
    if (epsilon >= min_sum)
        throw std::invalid_argument("PenaltyConfig: epsilon must be < min(psi0+psi1)");
    PenaltyConfig cfg;
    cfg.epsilon = epsilon;
    cfg.n_eff = std::max(std::abs(grid.x_min), std::abs(grid.x_max));
    const ModelParams& p = derived.params();
    cfg.c0 = p.leisure_coeff() * std::exp(cfg.n_eff / p.gamma1()) + derived.q();
    cfg.c1 = (p.eps0 - p.eps1) + derived.q();
    return cfg;
}

double penalty_beta0(double lambda, const PenaltyConfig& cfg) {
    const double e = cfg.epsilon;
    if (lambda >= e) return 0.0;
    if (lambda >= 0.0) {
        const double s = (e - lambda) / e;
        return cfg.c0 * s * s;
    }
    return cfg.c0 - 2.0 * cfg.c0 / e * lambda;
}

double penalty_beta0_deriv(double lambda, const PenaltyConfig& cfg) {
    const double e = cfg.epsilon;
    if (lambda >= e) return 0.0;
    if (lambda >= 0.0) return -2.0 * cfg.c0 * (e - lambda) / (e * e);
    return -2.0 * cfg.c0 / e;
}

double penalty_beta1(double lambda, const PenaltyConfig& cfg) {
    const double e = cfg.epsilon;
    if (lambda <= -e) return 0.0;
    if (lambda <= 0.0) {
        const double s = (lambda + e) / e;
        return -cfg.c1 * s * s;
    }
    return -cfg.c1 - 2.0 * cfg.c1 / e * lambda;
}

double penalty_beta1_deriv(double lambda, const PenaltyConfig& cfg) {
    const double e = cfg.epsilon;
    if (lambda <= -e) return 0.0;
    if (lambda <= 0.0) return -2.0 * cfg.c1 * (lambda + e) / (e * e);
    return -2.0 * cfg.c1 / e;
}

namespace {

/// One implicit step of the penalized problem over [tau_prev, tau_prev + dt].
/// theta_impl = 1 for implicit Euler, 0.5 for Crank-Nicolson; the penalty is
/// always treated implicitly.
void penalized_step(const DerivedSchedule& d, const GridSpec& g, const PenaltyConfig& cfg,
                    const std::vector<double>& prev, std::vector<double>& cur, double tau_new,
                    double dt, double theta_impl, double newton_tol, std::size_t max_iter,
                    SolveStats& stats) {
    const ModelParams& p = d.params();
    const auto c = op_coeffs(p, g);
    const std::size_t nx = g.nodes_x();
    const double psi0 = d.psi0(tau_new), psi1 = d.psi1(tau_new);

    cur = prev;
    cur[0] = d.rho0(tau_new, cfg.n_eff);
    cur[nx - 1] = d.rho1(tau_new);

    std::vector<double> rhs_exp(nx, 0.0);
    for (std::size_t j = 1; j + 1 < nx; ++j) {
        const double Lprev = c.lo * prev[j - 1] + c.di * prev[j] + c.up * prev[j + 1];
        rhs_exp[j] = prev[j] / dt + (1.0 - theta_impl) * Lprev + source_U(p, g.x(j));
    }

    std::vector<double> F(nx, 0.0), sub(nx - 2), dia(nx - 2), sup(nx - 2), delta(nx - 2);
    auto residual = [&](const std::vector<double>& w, std::vector<double>& out) {
        double norm = 0.0;
        for (std::size_t j = 1; j + 1 < nx; ++j) {
            const double Lw = c.lo * w[j - 1] + c.di * w[j] + c.up * w[j + 1];
            out[j] = w[j] / dt - theta_impl * Lw - rhs_exp[j] -
                     penalty_beta0(w[j] + psi0, cfg) - penalty_beta1(w[j] - psi1, cfg);
            norm = std::max(norm, std::abs(out[j]));
        }
        return norm;
    };

    double fnorm = residual(cur, F);
    std::size_t it = 0;
    while (fnorm > newton_tol && it < max_iter) {
        for (std::size_t j = 1; j + 1 < nx; ++j) {
            sub[j - 1] = (j > 1) ? -theta_impl * c.lo : 0.0;
            sup[j - 1] = (j + 2 < nx) ? -theta_impl * c.up : 0.0;
            dia[j - 1] = 1.0 / dt - theta_impl * c.di -
                         penalty_beta0_deriv(cur[j] + psi0, cfg) -
                         penalty_beta1_deriv(cur[j] - psi1, cfg);
            delta[j - 1] = -F[j];
        }
        solve_tridiag(sub, dia, sup, delta);

        // Damped update: halve until the residual does not increase.
        double step = 1.0;
        std::vector<double> trial = cur;
        double trial_norm = fnorm;
        for (int attempt = 0; attempt < 30; ++attempt) {
            for (std::size_t j = 1; j + 1 < nx; ++j) trial[j] = cur[j] + step * delta[j - 1];
            trial_norm = residual(trial, F);
            if (trial_norm <= fnorm || trial_norm <= newton_tol) break;
            step *= 0.5;
        }
        cur.swap(trial);
        fnorm = trial_norm;
        ++it;
    }
    stats.total_iterations += it;
    stats.max_step_iterations = std::max(stats.max_step_iterations, it);
    stats.worst_residual = std::max(stats.worst_residual, fnorm);
    if (fnorm > newton_tol) {
        stats.converged = false;
        std::size_t worst = 1;
        for (std::size_t j = 1; j + 1 < nx; ++j)
            if (std::abs(F[j]) > std::abs(F[worst])) worst = j;
        stats.note = "Newton stalled at tau=" + std::to_string(tau_new) +
                     " x=" + std::to_string(g.x(worst)) + " |F|=" + std::to_string(fnorm);
    }
}

}  // namespace

SolutionField solve_penalized(const DerivedSchedule& derived, const GridSpec& grid,
                              const PenaltyConfig& cfg, double newton_tol,
                              std::size_t max_iter) {
    grid.check_valid();
    SolutionField f;
    f.grid = grid;
    f.method = SolveMethod::Penalized;
    f.contact_tol = 10.0 * cfg.epsilon;
    const std::size_t nx = grid.nodes_x();
    f.v.assign(grid.nodes_tau() * nx, 0.0);

    std::vector<double> prev(nx, 0.0), cur(nx, 0.0), half(nx, 0.0);
    const double dt = grid.dtau();
    for (std::size_t k = 1; k < grid.nodes_tau(); ++k) {
        const double tau_new = grid.tau(k);
        const bool rannacher =
            grid.scheme == TimeScheme::CrankNicolson && k <= 2;  // damp the initial kink
        if (rannacher) {
            penalized_step(derived, grid, cfg, prev, half, tau_new - 0.5 * dt, 0.5 * dt, 1.0,
                           newton_tol, max_iter, f.stats);
            penalized_step(derived, grid, cfg, half, cur, tau_new, 0.5 * dt, 1.0, newton_tol,
                           max_iter, f.stats);
        } else {
            const double th = grid.scheme == TimeScheme::CrankNicolson ? 0.5 : 1.0;
            penalized_step(derived, grid, cfg, prev, cur, tau_new, dt, th, newton_tol, max_iter,
                           f.stats);
        }
        std::copy(cur.begin(), cur.end(), f.v.begin() + k * nx);
        prev.swap(cur);
    }
    mark_contacts(f, derived);
    return f;
}

namespace {

void lcp_step(const DerivedSchedule& d, const GridSpec& g, const std::vector<double>& prev,
              std::vector<double>& cur, double tau_new, double dt, double theta_impl,
              double omega, double lcp_tol, std::size_t max_sweeps, double n_eff,
              SolveStats& stats) {
    const ModelParams& p = d.params();
    const auto c = op_coeffs(p, g);
    const std::size_t nx = g.nodes_x();
    const double lo_obs = -d.psi0(tau_new), hi_obs = d.psi1(tau_new);

    cur = prev;
    cur[0] = d.rho0(tau_new, n_eff);
    cur[nx - 1] = d.rho1(tau_new);
    for (std::size_t j = 1; j + 1 < nx; ++j) cur[j] = std::clamp(cur[j], lo_obs, hi_obs);

    std::vector<double> rhs(nx, 0.0);
    for (std::size_t j = 1; j + 1 < nx; ++j) {
        const double Lprev = c.lo * prev[j - 1] + c.di * prev[j] + c.up * prev[j + 1];
        rhs[j] = prev[j] / dt + (1.0 - theta_impl) * Lprev + source_U(p, g.x(j));
    }
    const double A_lo = -theta_impl * c.lo;
    const double A_di = 1.0 / dt - theta_impl * c.di;
    const double A_up = -theta_impl * c.up;

    std::size_t sweep = 0;
    double change = std::numeric_limits<double>::infinity();
    while (change > lcp_tol && sweep < max_sweeps) {
        change = 0.0;
        for (std::size_t j = 1; j + 1 < nx; ++j) {
            const double gs = (rhs[j] - A_lo * cur[j - 1] - A_up * cur[j + 1]) / A_di;
            const double prop = cur[j] + omega * (gs - cur[j]);
            const double next = std::clamp(prop, lo_obs, hi_obs);
            change = std::max(change, std::abs(next - cur[j]));
            cur[j] = next;
        }
        ++sweep;
    }
    stats.total_iterations += sweep;
    stats.max_step_iterations = std::max(stats.max_step_iterations, sweep);
    stats.worst_residual = std::max(stats.worst_residual, change);
    if (change > lcp_tol) {
        stats.converged = false;
        stats.note = "PSOR exceeded max_sweeps at tau=" + std::to_string(tau_new) +
                     " change=" + std::to_string(change);
    }
}

}  // namespace

SolutionField solve_lcp(const DerivedSchedule& derived, const GridSpec& grid, double relax_omega,
                        double lcp_tol, std::size_t max_sweeps) {
    grid.check_valid();
    if (!(relax_omega >= 1.0 && relax_omega < 2.0))
        throw std::invalid_argument("solve_lcp: relax_omega must lie in [1,2)");
    SolutionField f;
    f.grid = grid;
    f.method = SolveMethod::Lcp;
    f.contact_tol = 10.0 * lcp_tol;
    const std::size_t nx = grid.nodes_x();
    f.v.assign(grid.nodes_tau() * nx, 0.0);
    const double n_eff = std::max(std::abs(grid.x_min), std::abs(grid.x_max));

    std::vector<double> prev(nx, 0.0), cur(nx, 0.0), half(nx, 0.0);
    const double dt = grid.dtau();
    for (std::size_t k = 1; k < grid.nodes_tau(); ++k) {
        const double tau_new = grid.tau(k);
        const bool rannacher = grid.scheme == TimeScheme::CrankNicolson && k <= 2;
        if (rannacher) {
            lcp_step(derived, grid, prev, half, tau_new - 0.5 * dt, 0.5 * dt, 1.0, relax_omega,
                     lcp_tol, max_sweeps, n_eff, f.stats);
            lcp_step(derived, grid, half, cur, tau_new, 0.5 * dt, 1.0, relax_omega, lcp_tol,
                     max_sweeps, n_eff, f.stats);
        } else {
            const double th = grid.scheme == TimeScheme::CrankNicolson ? 0.5 : 1.0;
            lcp_step(derived, grid, prev, cur, tau_new, dt, th, relax_omega, lcp_tol, max_sweeps,
                     n_eff, f.stats);
        }
        std::copy(cur.begin(), cur.end(), f.v.begin() + k * nx);
        prev.swap(cur);
    }
    mark_contacts(f, derived);
    return f;
}

ResidualStats residual_report(const SolutionField& field, const DerivedSchedule& derived) {
    const GridSpec& g = field.grid;
    const ModelParams& p = derived.params();
    const std::size_t nx = g.nodes_x();
    ResidualStats rs;
    rs.lower_contact_min = std::numeric_limits<double>::infinity();
    rs.upper_contact_max = -std::numeric_limits<double>::infinity();
    rs.continuation_max_abs.assign(g.nodes_tau(), 0.0);
    rs.continuation_mean_abs.assign(g.nodes_tau(), 0.0);

    std::vector<double> slice(nx), prev(nx);
    for (std::size_t k = 1; k < g.nodes_tau(); ++k) {
        const double tau = g.tau(k);
        std::copy(field.v.begin() + k * nx, field.v.begin() + (k + 1) * nx, slice.begin());
        std::copy(field.v.begin() + (k - 1) * nx, field.v.begin() + k * nx, prev.begin());
        double sum = 0.0;
        std::size_t cnt = 0;
        for (std::size_t j = 1; j + 1 < nx; ++j) {
            const double res = (slice[j] - prev[j]) / g.dtau() - apply_L(p, g, slice, j) -
                               source_U(p, g.x(j));
            const bool cl = field.contact_lower[field.idx(k, j)];
            const bool cu = field.contact_upper[field.idx(k, j)];
            if (cl) {
                rs.lower_contact_min = std::min(rs.lower_contact_min, res);
            } else if (cu) {
                rs.upper_contact_max = std::max(rs.upper_contact_max, res);
            } else {
                rs.continuation_max_abs[k] = std::max(rs.continuation_max_abs[k], std::abs(res));
                sum += std::abs(res);
                ++cnt;
            }
            const double viol = std::max(-derived.psi0(tau) - slice[j],
                                         slice[j] - derived.psi1(tau));
            rs.max_obstacle_violation = std::max(rs.max_obstacle_violation, viol);
        }
        rs.continuation_mean_abs[k] = cnt ? sum / double(cnt) : 0.0;
        rs.global_continuation_max =
            std::max(rs.global_continuation_max, rs.continuation_max_abs[k]);
    }
    return rs;
}

ConvergenceReport refine_study(const DerivedSchedule& derived, const GridSpec& base,
                               std::size_t levels, SolveMethod method, double penalty_epsilon) {
    if (levels < 3) throw std::invalid_argument("refine_study: levels >= 3");
    std::vector<SolutionField> fields;
    for (std::size_t l = 0; l < levels; ++l) {
        GridSpec g = base;
        g.n_x = base.n_x << l;
        g.n_tau = base.n_tau << l;
        if (method == SolveMethod::Penalized) {
            fields.push_back(
                solve_penalized(derived, g, PenaltyConfig::make(derived, g, penalty_epsilon)));
        } else {
            fields.push_back(solve_lcp(derived, g));
        }
    }
    ConvergenceReport rep;
    for (std::size_t l = 0; l + 1 < levels; ++l) {
        // Compare on the coarse nodes, which the finer grid contains.
        const SolutionField& fc = fields[l];
        const SolutionField& ff = fields[l + 1];
        double diff = 0.0;
        for (std::size_t k = 0; k < fc.grid.nodes_tau(); ++k)
            for (std::size_t j = 0; j < fc.grid.nodes_x(); ++j)
                diff = std::max(diff, std::abs(fc.at(k, j) - ff.at(2 * k, 2 * j)));
        rep.diffs.push_back(diff);
    }
    for (std::size_t l = 0; l + 1 < rep.diffs.size(); ++l) {
        rep.orders.push_back(std::log2(rep.diffs[l] / rep.diffs[l + 1]));
        if (rep.diffs[l + 1] > rep.diffs[l]) rep.monotone = false;
    }
    return rep;
}

GridSpec auto_domain(const DerivedSchedule& derived, std::size_t n_x, std::size_t n_tau,
                     TimeScheme scheme) {
    const ModelParams& p = derived.params();
    const double T = p.T;
    double g0_min = std::numeric_limits<double>::infinity();
    double g1_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i <= 256; ++i) {
        const double tau = T * double(i) / 256.0;
        g0_min = std::min(g0_min, derived.Gamma0(tau));
        if (tau >= derived.tau1()) g1_max = std::max(g1_max, derived.Gamma1(tau));
    }
    GridSpec coarse{g0_min - 6.0, g1_max + 6.0, 96, 96, T, TimeScheme::ImplicitEuler};
    SolutionField pre = solve_lcp(derived, coarse, 1.5, 1e-9, 20000);

    // Contact extremes on the pre-pass: widest lower boundary reach and
    // highest upper boundary reach over the bulk of the horizon.
    double lo = g0_min, hi = g1_max;
    for (std::size_t k = 0; k < pre.grid.nodes_tau(); ++k) {
        if (pre.grid.tau(k) < 0.02 * T) continue;
        for (std::size_t j = 0; j + 1 < pre.grid.nodes_x(); ++j)
            if (pre.contact_lower[pre.idx(k, j)] && !pre.contact_lower[pre.idx(k, j + 1)])
                lo = std::min(lo, pre.grid.x(j));
        for (std::size_t j = pre.grid.nodes_x() - 1; j-- > 1;)
            if (pre.contact_upper[pre.idx(k, j)] && !pre.contact_upper[pre.idx(k, j - 1)])
                hi = std::max(hi, pre.grid.x(j));
    }
    const double width = hi - lo;
    GridSpec g{lo - 0.25 * width, hi + 0.25 * width, n_x, n_tau, T, scheme};
    g.check_valid();
    return g;
}

}  // namespace swob
