#include "swob/dual.hpp"

#include "swob/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace swob {

namespace {

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

double expm1_ratio(double a, double tau) {
    // (1 - e^{-a tau}) / a, continuous through a = 0.
    if (std::abs(a * tau) < 1e-12) return tau * (1.0 - 0.5 * a * tau);
    return -std::expm1(-a * tau) / a;
}

/// One implicit-Euler step for (w_k - w_{k-1})/dtau - L w_k = rhs with
/// Dirichlet edge values already written into cur[0], cur[nx-1].
void recovery_step(const ModelParams& p, const GridSpec& g, const std::vector<double>& prev,
                   const std::vector<double>& rhs_interior, std::vector<double>& cur) {
    const std::size_t nx = g.nodes_x();
    const double dtau = g.dtau();
    const double a = p.theta() * p.theta() / 2.0;
    const double b = p.beta - p.r + a;
    const double dx = g.dx();
    const double lo = a / (dx * dx) - b / (2.0 * dx);
    const double di = -2.0 * a / (dx * dx) - p.r;
    const double up = a / (dx * dx) + b / (2.0 * dx);

    const std::size_t n = nx - 2;
    std::vector<double> sub(n, -dtau * lo), dia(n, 1.0 - dtau * di), sup(n, -dtau * up), rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = prev[i + 1] + dtau * rhs_interior[i + 1];
    rhs[0] += dtau * lo * cur[0];
    rhs[n - 1] += dtau * up * cur[nx - 1];
    solve_tridiag(sub, dia, sup, rhs);
    for (std::size_t i = 0; i < n; ++i) cur[i + 1] = rhs[i];
}

}  // namespace

double no_switch_w(const ModelParams& p, int j, double tau, double x) {
    if (j != 0 && j != 1) throw std::invalid_argument("no_switch_w: j must be 0 or 1");
    const double g1 = p.gamma1();
    const double L = (j == 0) ? p.L0 : p.L1;
    const double eps_j = (j == 0) ? p.eps0 : p.eps1;
    const double pow_part = g1 / (1.0 - g1) * std::pow(L, p.leisure_exp()) * std::exp(-x / g1);
    const double retire = g1 / (1.0 - g1) * std::pow(p.Lbar, p.leisure_exp()) / p.K1() *
                          std::exp(-x / g1);
    return pow_part * expm1_ratio(p.K1(), tau) + eps_j * expm1_ratio(p.r, tau) +
           retire * std::exp(-p.K1() * tau);
}

DualSolution recover_P(const SolutionField& field, const DerivedSchedule& derived) {
    const GridSpec& g = field.grid;
    const ModelParams& p = derived.params();
    const std::size_t nx = g.nodes_x(), nt = g.nodes_tau();
    const double n_eff = std::max(std::abs(g.x_min), std::abs(g.x_max));

    DualSolution sol;
    sol.grid = g;
    sol.v = field.v;
    sol.contact_lower = field.contact_lower;
    sol.contact_upper = field.contact_upper;
    sol.w0.assign(nx * nt, 0.0);
    sol.w1.assign(nx * nt, 0.0);
    sol.resid.assign(nx * nt, 0.0);

    for (std::size_t j = 0; j < nx; ++j) {
        const double w_term = std::exp(-g.x(j)) * merton_JR(p, std::exp(g.x(j)));
        sol.w0[sol.idx(0, j)] = w_term;
        sol.w1[sol.idx(0, j)] = w_term;
    }

    // Discrete residual of the obstacle solution in implicit-Euler form. The
    // solution of the marched systems below then reproduces w0 - w1 = v up to
    // round-off, whatever scheme produced v.
    std::vector<double> prev_v(field.v.begin(), field.v.begin() + nx);
    std::vector<double> rhs0(nx, 0.0), rhs1(nx, 0.0);
    for (std::size_t k = 1; k < nt; ++k) {
        const double tau = g.tau(k);
        std::vector<double> cur_v(field.v.begin() + k * nx, field.v.begin() + (k + 1) * nx);
        for (std::size_t j = 1; j + 1 < nx; ++j) {
            const double r = (cur_v[j] - prev_v[j]) / g.dtau() - apply_L(p, g, cur_v, j) -
                             source_U(p, g.x(j));
            sol.resid[sol.idx(k, j)] = r;
            rhs0[j] = source_u_job(p, 0, g.x(j)) + std::max(r, 0.0);
            rhs1[j] = source_u_job(p, 1, g.x(j)) + std::max(-r, 0.0);
        }

        std::vector<double> w0k(nx), w1k(nx);
        // Deep lower edge: job 1 never switches; job 0 is on its switching
        // boundary, offset by the lower Dirichlet datum of v. Mirror on the
        // upper edge with roles exchanged.
        w1k[0] = no_switch_w(p, 1, tau, g.x_min);
        w0k[0] = w1k[0] + derived.rho0(tau, n_eff);
        w0k[nx - 1] = no_switch_w(p, 0, tau, g.x_max);
        w1k[nx - 1] = w0k[nx - 1] - derived.rho1(tau);

        std::vector<double> prev0(sol.w0.begin() + (k - 1) * nx, sol.w0.begin() + k * nx);
        std::vector<double> prev1(sol.w1.begin() + (k - 1) * nx, sol.w1.begin() + k * nx);
        recovery_step(p, g, prev0, rhs0, w0k);
        recovery_step(p, g, prev1, rhs1, w1k);
        std::copy(w0k.begin(), w0k.end(), sol.w0.begin() + k * nx);
        std::copy(w1k.begin(), w1k.end(), sol.w1.begin() + k * nx);
        prev_v.swap(cur_v);
    }

    double err = 0.0;
    for (std::size_t i = 0; i < sol.v.size(); ++i)
        err = std::max(err, std::abs(sol.w0[i] - sol.w1[i] - sol.v[i]));
    sol.consistency_error = err;
    return sol;
}

namespace {

const std::vector<double>& slice_w(const DualSolution& sol, int j) {
    if (j != 0 && j != 1) throw std::invalid_argument("dual slice: j must be 0 or 1");
    return j == 0 ? sol.w0 : sol.w1;
}

/// Fritsch-Carlson monotone cubic interpolation on a uniform grid.
struct Pchip {
    double x0, dx;
    std::vector<double> y, m;

    Pchip(double x0_, double dx_, std::vector<double> y_) : x0(x0_), dx(dx_), y(std::move(y_)) {
        const std::size_t n = y.size();
        std::vector<double> d(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) d[i] = (y[i + 1] - y[i]) / dx;
        m.assign(n, 0.0);
        m[0] = d[0];
        m[n - 1] = d[n - 2];
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (d[i - 1] * d[i] <= 0.0)
                m[i] = 0.0;
            else
                m[i] = 2.0 * d[i - 1] * d[i] / (d[i - 1] + d[i]);  // harmonic mean
        }
    }

    double eval(double x) const {
        if (x < x0 - 1e-12 || x > x0 + dx * double(y.size() - 1) + 1e-12)
            throw std::out_of_range("pchip: query outside the tabulated range");
        const std::size_t n = y.size();
        std::size_t i = std::min<std::size_t>(
            n - 2, std::size_t(std::max(0.0, std::floor((x - x0) / dx))));
        const double t = (x - (x0 + dx * double(i))) / dx;
        const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
        const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
        return h00 * y[i] + dx * h10 * m[i] + h01 * y[i + 1] + dx * h11 * m[i + 1];
    }
};

std::vector<double> p_slice_t0(const DualSolution& sol, int j) {
    // P_j(0, e^x) = e^x w_j(T, x) along the last time slice.
    const GridSpec& g = sol.grid;
    const std::size_t k = g.nodes_tau() - 1;
    const auto& w = slice_w(sol, j);
    std::vector<double> out(g.nodes_x());
    for (std::size_t i = 0; i < g.nodes_x(); ++i)
        out[i] = std::exp(g.x(i)) * w[sol.idx(k, i)];
    return out;
}

std::vector<double> wealth_slice_t0(const DualSolution& sol, int j) {
    // W = -(w + d_x w); centered in the interior, one-sided at the edges.
    const GridSpec& g = sol.grid;
    const std::size_t k = g.nodes_tau() - 1, nx = g.nodes_x();
    const auto& w = slice_w(sol, j);
    const double dx = g.dx();
    std::vector<double> out(nx);
    auto wk = [&](std::size_t i) { return w[sol.idx(k, i)]; };
    out[0] = -(wk(0) + (wk(1) - wk(0)) / dx);
    out[nx - 1] = -(wk(nx - 1) + (wk(nx - 1) - wk(nx - 2)) / dx);
    for (std::size_t i = 1; i + 1 < nx; ++i)
        out[i] = -(wk(i) + (wk(i + 1) - wk(i - 1)) / (2.0 * dx));
    return out;
}

/// Pool-adjacent-violators projection onto non-increasing sequences.
std::vector<double> isotonic_decreasing(const std::vector<double>& y) {
    std::vector<double> level;
    std::vector<std::size_t> count;
    for (double v : y) {
        level.push_back(v);
        count.push_back(1);
        while (level.size() > 1 && level[level.size() - 2] < level.back()) {
            const double merged = (level[level.size() - 2] * double(count[count.size() - 2]) +
                                   level.back() * double(count.back())) /
                                  double(count[count.size() - 2] + count.back());
            count[count.size() - 2] += count.back();
            level[level.size() - 2] = merged;
            level.pop_back();
            count.pop_back();
        }
    }
    std::vector<double> out;
    out.reserve(y.size());
    for (std::size_t b = 0; b < level.size(); ++b)
        out.insert(out.end(), count[b], level[b]);
    return out;
}

}  // namespace

double dual_value_J(const DualSolution& sol, const DerivedSchedule& derived, int j, double y) {
    (void)derived;
    if (y <= 0.0) throw std::invalid_argument("dual_value_J: y must be positive");
    Pchip interp(sol.grid.x_min, sol.grid.dx(), p_slice_t0(sol, j));
    return interp.eval(std::log(y));
}

double dual_value_V_gridmin(const DualSolution& sol, const DerivedSchedule& derived, int j,
                            double w) {
    (void)derived;
    const auto P = p_slice_t0(sol, j);
    const GridSpec& g = sol.grid;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < P.size(); ++i)
        best = std::min(best, P[i] + std::exp(g.x(i)) * w);
    return best;
}

InvertResult invert_wealth(const DualSolution& sol, const DerivedSchedule& derived, int j,
                           double w) {
    const GridSpec& g = sol.grid;
    const auto W_raw = wealth_slice_t0(sol, j);
    const auto W = isotonic_decreasing(W_raw);
    if (w > W.front() || w < W.back())
        throw std::out_of_range("invert_wealth: target outside the resolved wealth range");

    // Piecewise-linear inverse of the monotone envelope.
    std::size_t i = 0;
    while (i + 1 < W.size() && W[i + 1] > w) ++i;
    double x_star;
    if (std::abs(W[i + 1] - W[i]) < 1e-300)
        x_star = 0.5 * (g.x(i) + g.x(i + 1));
    else
        x_star = g.x(i) + g.dx() * (w - W[i]) / (W[i + 1] - W[i]);

    InvertResult out;
    out.y_star = std::exp(x_star);
    out.value = dual_value_J(sol, derived, j, out.y_star) + out.y_star * w;
    const double t = (x_star - g.x(i)) / g.dx();
    out.wealth_check = (1.0 - t) * W_raw[i] + t * W_raw[i + 1];
    return out;
}

Controls optimal_controls(const DualSolution& sol, const DerivedSchedule& derived, double t,
                          double y, int eta) {
    const ModelParams& p = derived.params();
    if (y <= 0.0) throw std::invalid_argument("optimal_controls: y must be positive");
    Controls out;
    if (t >= p.T || eta == -1) {
        const double Wm = -merton_JR_prime(p, y);
        out.W = Wm;
        out.c = p.K1() * Wm;
        out.pi = p.theta() / (p.sigma * p.gamma1()) * Wm;
        return out;
    }
    if (eta != 0 && eta != 1) throw std::invalid_argument("optimal_controls: eta must be 0 or 1");

    const GridSpec& g = sol.grid;
    const double tau = p.T - t;
    const double x = std::log(y);
    if (x < g.x_min || x > g.x_max)
        throw std::out_of_range("optimal_controls: ln y outside the solve domain");
    const auto& w = slice_w(sol, eta);
    const double dx = g.dx();

    const double kf = std::clamp(tau / g.dtau(), 0.0, double(g.nodes_tau() - 1));
    const std::size_t k0 = std::min<std::size_t>(g.nodes_tau() - 2, std::size_t(kf));
    const double wk_t = kf - double(k0);

    const double jf = (x - g.x_min) / dx;
    const std::size_t jl =
        std::min<std::size_t>(g.nodes_x() - 2, std::size_t(std::max(0.0, jf)));
    const double s_x = jf - double(jl);

    // The surface for job eta kinks only on the edge of its own contact set:
    // w0 picks up the positive residual split (lower contact), w1 the negative
    // one (upper contact). Deep inside the set the surface is the other one
    // shifted by the obstacle, hence smooth; only a stencil straddling the
    // set's edge is garbage. Shift those toward a one-sided stencil and report
    // via quality_ok.
    const auto& kink_flags = (eta == 0) ? sol.contact_lower : sol.contact_upper;
    auto in_contact = [&](std::size_t k, std::size_t jj) {
        return kink_flags[sol.idx(k, jj)] != 0;
    };
    auto uniform = [&](std::size_t k, std::size_t c) {
        const bool f = in_contact(k, c - 1);
        return in_contact(k, c) == f && in_contact(k, c + 1) == f;
    };
    auto node_derivs = [&](std::size_t k, std::size_t c, double& wx, double& wxx, bool& clean) {
        c = std::clamp<std::size_t>(c, 1, g.nodes_x() - 2);
        if (!uniform(k, c)) {
            // Walk toward the majority side while a one-sided stencil exists.
            const long step = in_contact(k, c - 1) ? -1 : 1;
            long cc = long(c);
            for (int tries = 0; tries < 3; ++tries) {
                cc += step;
                if (cc < 1 || cc > long(g.nodes_x()) - 2) break;
                if (uniform(k, std::size_t(cc))) {
                    c = std::size_t(cc);
                    break;
                }
            }
            clean = false;
        }
        auto wkv = [&](std::size_t jj) { return w[sol.idx(k, jj)]; };
        wx = (wkv(c + 1) - wkv(c - 1)) / (2.0 * dx);
        wxx = (wkv(c + 1) - 2.0 * wkv(c) + wkv(c - 1)) / (dx * dx);
    };
    auto slice_derivs = [&](std::size_t k, double& wx, double& wxx, double& wv, bool& clean) {
        // Node-centered derivatives interpolated to the query point.
        double wx_l, wxx_l, wx_r, wxx_r;
        node_derivs(k, jl, wx_l, wxx_l, clean);
        node_derivs(k, jl + 1, wx_r, wxx_r, clean);
        wx = (1.0 - s_x) * wx_l + s_x * wx_r;
        wxx = (1.0 - s_x) * wxx_l + s_x * wxx_r;
        auto wkv = [&](std::size_t jj) { return w[sol.idx(k, jj)]; };
        wv = (1.0 - s_x) * wkv(jl) + s_x * wkv(jl + 1);
    };

    double wx0, wxx0, wv0, wx1, wxx1, wv1;
    bool clean = true;
    slice_derivs(k0, wx0, wxx0, wv0, clean);
    slice_derivs(k0 + 1, wx1, wxx1, wv1, clean);
    const double wx = (1.0 - wk_t) * wx0 + wk_t * wx1;
    const double wxx = (1.0 - wk_t) * wxx0 + wk_t * wxx1;
    const double wv = (1.0 - wk_t) * wv0 + wk_t * wv1;

    const double L = (eta == 0) ? p.L0 : p.L1;
    out.c = std::pow(L, p.leisure_exp()) * std::pow(y, -1.0 / p.gamma1());
    out.W = -(wv + wx);
    out.pi = p.theta() / p.sigma * (wx + wxx);
    out.quality_ok = clean;
    return out;
}

PolicyState policy_init(const DerivedSchedule& derived, const OriginalBoundary& S0,
                        const OriginalBoundary& S1, int j0, double y0) {
    if (j0 != 0 && j0 != 1) throw std::invalid_argument("policy_init: j0 must be 0 or 1");
    if (y0 <= 0.0) throw std::invalid_argument("policy_init: y0 must be positive");
    PolicyState st;
    st.t = 0.0;
    st.y = y0;
    st.eta = j0;
    if (j0 == 0) {
        if (auto s = S0.at(0.0); s && y0 <= *s) {
            st.events.push_back({0.0, 0, 1, derived.costs().phi0.value(0.0), y0});
            st.eta = 1;
        }
    } else {
        if (auto s = S1.at(0.0); s && y0 >= *s) {
            st.events.push_back({0.0, 1, 0, derived.costs().phi1.value(0.0), y0});
            st.eta = 0;
        }
    }
    return st;
}

void policy_step(PolicyState& state, const DerivedSchedule& derived, const OriginalBoundary& S0,
                 const OriginalBoundary& S1, double t_next, double y_next) {
    if (t_next < state.t) throw std::invalid_argument("policy_step: time must not decrease");
    const ModelParams& p = derived.params();
    if (t_next < p.T) {
        if (state.eta == 0) {
            if (auto s = S0.at(t_next); s && y_next < *s) {
                state.events.push_back({t_next, 0, 1, derived.costs().phi0.value(t_next), y_next});
                state.eta = 1;
            }
        } else if (state.eta == 1 && t_next < derived.t1()) {
            if (auto s = S1.at(t_next); s && y_next > *s) {
                state.events.push_back({t_next, 1, 0, derived.costs().phi1.value(t_next), y_next});
                state.eta = 0;
            }
        }
    }
    state.t = t_next;
    state.y = y_next;
}

}  // namespace swob
