#include "swob/mc.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <random>
#include <stdexcept>
#include <thread>

namespace swob {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Per-sample accumulation state; sums combine in fixed chunk order so the
/// result is independent of the thread schedule.
struct Acc {
    double sum = 0.0, sumsq = 0.0;
    double flow = 0.0, term = 0.0, swc = 0.0;
    std::size_t n = 0, events = 0;

    void add(const Acc& o) {
        sum += o.sum;
        sumsq += o.sumsq;
        flow += o.flow;
        term += o.term;
        swc += o.swc;
        n += o.n;
        events += o.events;
    }
};

McEstimate finish(const Acc& a) {
    McEstimate e;
    e.n = a.n;
    e.mean = a.sum / double(a.n);
    if (a.n > 1) {
        const double var = std::max(0.0, (a.sumsq - a.sum * a.sum / double(a.n)) /
                                             double(a.n - 1));
        e.stderr_ = std::sqrt(var / double(a.n));
    }
    return e;
}

/// Runs fn(sample, flip) over all samples (and both antithetic legs), chunked
/// across hardware threads with deterministic reduction order.
template <class PerSample>
Acc reduce_samples(std::size_t n_samples, PerSample fn) {
    const std::size_t hw = std::max<unsigned>(1, std::thread::hardware_concurrency());
    const std::size_t n_chunks = std::min<std::size_t>(std::max<std::size_t>(1, hw), n_samples);
    const std::size_t per = (n_samples + n_chunks - 1) / n_chunks;
    std::vector<std::future<Acc>> futs;
    for (std::size_t c = 0; c < n_chunks; ++c) {
        const std::size_t lo = c * per, hi = std::min(n_samples, lo + per);
        if (lo >= hi) break;
        futs.push_back(std::async(std::launch::async, [lo, hi, &fn] {
            Acc a;
            for (std::size_t s = lo; s < hi; ++s) fn(s, a);
            return a;
        }));
    }
    Acc total;
    for (auto& f : futs) total.add(f.get());
    return total;
}

struct PathSample {
    double total = 0.0, flow = 0.0, term = 0.0, swc = 0.0;
    std::size_t events = 0;
};

/// Scaled copy for boundary-perturbation policies.
OriginalBoundary scale_boundary(const OriginalBoundary& b, double s) {
    OriginalBoundary out = b;
    for (double& v : out.Ss) v *= s;
    return out;
}

}  // namespace

void McConfig::check_valid() const {
    if (n_paths < 2) throw std::invalid_argument("McConfig: n_paths must be at least 2");
    if (n_steps < 1) throw std::invalid_argument("McConfig: n_steps must be positive");
    if (y0 <= 0.0) throw std::invalid_argument("McConfig: y0 must be positive");
    if (j0 != 0 && j0 != 1) throw std::invalid_argument("McConfig: j0 must be 0 or 1");
}

bool McEstimate::within(double reference, double k) const {
    return std::abs(mean - reference) <= k * stderr_;
}

std::vector<double> simulate_path_logY(const ModelParams& p, const McConfig& cfg,
                                       std::size_t sample, bool flip_sign) {
    const double dt = cfg.dt(p.T);
    const double drift = (p.beta - p.r - 0.5 * p.theta() * p.theta()) * dt;
    const double vol = p.theta() * std::sqrt(dt);
    const double sgn = flip_sign ? -1.0 : 1.0;

    std::mt19937_64 gen(splitmix64(cfg.seed ^ splitmix64(sample)));
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<double> lnY(cfg.n_steps + 1);
    lnY[0] = std::log(cfg.y0);
    for (std::size_t k = 0; k < cfg.n_steps; ++k)
        lnY[k + 1] = lnY[k] + drift - vol * sgn * normal(gen);
    return lnY;
}

McEstimate mc_martingale(const ModelParams& p, const McConfig& cfg) {
    cfg.check_valid();
    const std::size_t n_samples = cfg.antithetic ? std::max<std::size_t>(1, cfg.n_paths / 2)
                                                 : cfg.n_paths;
    const double disc = std::exp(-(p.beta - p.r) * p.T);
    Acc total = reduce_samples(n_samples, [&](std::size_t s, Acc& a) {
        double v = 0.0;
        const int legs = cfg.antithetic ? 2 : 1;
        for (int leg = 0; leg < legs; ++leg) {
            const auto lnY = simulate_path_logY(p, cfg, s, leg == 1);
            v += disc * std::exp(lnY.back());
        }
        v /= double(legs);
        a.sum += v;
        a.sumsq += v * v;
        a.n += 1;
    });
    return finish(total);
}

McEstimate mc_merton(const ModelParams& p, const McConfig& cfg) {
    cfg.check_valid();
    const std::size_t n_samples = cfg.antithetic ? std::max<std::size_t>(1, cfg.n_paths / 2)
                                                 : cfg.n_paths;
    const double dt = cfg.dt(p.T);
    std::vector<double> disc(cfg.n_steps + 1);
    for (std::size_t k = 0; k <= cfg.n_steps; ++k) disc[k] = std::exp(-p.beta * dt * double(k));

    Acc total = reduce_samples(n_samples, [&](std::size_t s, Acc& a) {
        double v = 0.0;
        const int legs = cfg.antithetic ? 2 : 1;
        for (int leg = 0; leg < legs; ++leg) {
            const auto lnY = simulate_path_logY(p, cfg, s, leg == 1);
            double integral = 0.0;
            double prev = disc[0] * dual_utility(p, -1, std::exp(lnY[0]));
            for (std::size_t k = 1; k <= cfg.n_steps; ++k) {
                const double cur = disc[k] * dual_utility(p, -1, std::exp(lnY[k]));
                integral += 0.5 * (prev + cur) * dt;
                prev = cur;
            }
            v += integral + disc[cfg.n_steps] * merton_JR(p, std::exp(lnY.back()));
        }
        v /= double(legs);
        a.sum += v;
        a.sumsq += v * v;
        a.n += 1;
    });
    return finish(total);
}

McReport evaluate_dual_objective(const DerivedSchedule& derived, const OriginalBoundary& S0,
                                 const OriginalBoundary& S1, const McConfig& cfg,
                                 double s0_scale, bool never_switch) {
    cfg.check_valid();
    const ModelParams& p = derived.params();
    const OriginalBoundary S0s = scale_boundary(S0, s0_scale);
    const double dt = cfg.dt(p.T);
    std::vector<double> disc(cfg.n_steps + 1);
    for (std::size_t k = 0; k <= cfg.n_steps; ++k) disc[k] = std::exp(-p.beta * dt * double(k));

    auto run_path = [&](std::size_t sample, bool flip) {
        const auto lnY = simulate_path_logY(p, cfg, sample, flip);
        PathSample out;
        PolicyState st = never_switch
                             ? PolicyState{0.0, cfg.y0, cfg.j0, {}}
                             : policy_init(derived, S0s, S1, cfg.j0, cfg.y0);
        for (const auto& ev : st.events) out.swc -= disc[0] * ev.y * ev.cost;
        out.events += st.events.size();

        auto flow_at = [&](std::size_t k, int eta, double y) {
            const double eps = (eta == 0) ? p.eps0 : p.eps1;
            return disc[k] * (dual_utility(p, eta, y) + eps * y);
        };
        double prev = flow_at(0, st.eta, cfg.y0);
        for (std::size_t k = 1; k <= cfg.n_steps; ++k) {
            const double t_k = dt * double(k);
            const double y_k = std::exp(lnY[k]);
            if (!never_switch) {
                const std::size_t before = st.events.size();
                policy_step(st, derived, S0s, S1, t_k, y_k);
                for (std::size_t e = before; e < st.events.size(); ++e) {
                    out.swc -= disc[k] * st.events[e].y * st.events[e].cost;
                    ++out.events;
                }
            } else {
                st.t = t_k;
                st.y = y_k;
            }
            const double cur = flow_at(k, st.eta, y_k);
            out.flow += 0.5 * (prev + cur) * dt;
            prev = cur;
        }
        out.term = disc[cfg.n_steps] * merton_JR(p, std::exp(lnY.back()));
        out.total = out.flow + out.term + out.swc;
        return out;
    };

    const std::size_t n_samples = cfg.antithetic ? std::max<std::size_t>(1, cfg.n_paths / 2)
                                                 : cfg.n_paths;
    Acc total = reduce_samples(n_samples, [&](std::size_t s, Acc& a) {
        PathSample avg;
        const int legs = cfg.antithetic ? 2 : 1;
        for (int leg = 0; leg < legs; ++leg) {
            const PathSample ps = run_path(s, leg == 1);
            avg.total += ps.total / double(legs);
            avg.flow += ps.flow / double(legs);
            avg.term += ps.term / double(legs);
            avg.swc += ps.swc / double(legs);
            avg.events += ps.events;
        }
        a.sum += avg.total;
        a.sumsq += avg.total * avg.total;
        a.flow += avg.flow;
        a.term += avg.term;
        a.swc += avg.swc;
        a.events += avg.events;
        a.n += 1;
    });

    McReport rep;
    rep.total = finish(total);
    rep.flow_mean = total.flow / double(total.n);
    rep.terminal_mean = total.term / double(total.n);
    rep.switch_mean = total.swc / double(total.n);
    rep.n_switch_events = total.events;
    return rep;
}

McReport evaluate_budget(const DerivedSchedule& derived, const OriginalBoundary& S0,
                         const OriginalBoundary& S1, const McConfig& cfg, double wealth_ref,
                         double c_scale) {
    cfg.check_valid();
    const ModelParams& p = derived.params();
    const double dt = cfg.dt(p.T);
    std::vector<double> disc(cfg.n_steps + 1);
    for (std::size_t k = 0; k <= cfg.n_steps; ++k) disc[k] = std::exp(-p.beta * dt * double(k));

    // H_t = e^{-beta t} Y_t / y0: the state-price density with H_0 = 1.
    auto run_path = [&](std::size_t sample, bool flip) {
        const auto lnY = simulate_path_logY(p, cfg, sample, flip);
        PathSample out;
        PolicyState st = policy_init(derived, S0, S1, cfg.j0, cfg.y0);
        for (const auto& ev : st.events) out.swc += disc[0] * (ev.y / cfg.y0) * ev.cost;
        out.events += st.events.size();

        auto net_at = [&](std::size_t k, int eta, double y) {
            const double L = (eta == 0) ? p.L0 : p.L1;
            const double eps = (eta == 0) ? p.eps0 : p.eps1;
            const double c = c_scale * std::pow(L, p.leisure_exp()) *
                             std::pow(y, -1.0 / p.gamma1());
            return disc[k] * (y / cfg.y0) * (c - eps);
        };
        double prev = net_at(0, st.eta, cfg.y0);
        for (std::size_t k = 1; k <= cfg.n_steps; ++k) {
            const double t_k = dt * double(k);
            const double y_k = std::exp(lnY[k]);
            const std::size_t before = st.events.size();
            policy_step(st, derived, S0, S1, t_k, y_k);
            for (std::size_t e = before; e < st.events.size(); ++e) {
                out.swc += disc[k] * (st.events[e].y / cfg.y0) * st.events[e].cost;
                ++out.events;
            }
            const double cur = net_at(k, st.eta, y_k);
            out.flow += 0.5 * (prev + cur) * dt;
            prev = cur;
        }
        const double yT = std::exp(lnY.back());
        // Post-retirement leg: H_T * W*(Y_T); the Merton stream consumes the
        // whole remaining wealth, also scaled when probing suboptimal c.
        out.term = disc[cfg.n_steps] * (yT / cfg.y0) * c_scale * (-merton_JR_prime(p, yT));
        out.total = out.flow + out.term + out.swc;
        return out;
    };

    const std::size_t n_samples = cfg.antithetic ? std::max<std::size_t>(1, cfg.n_paths / 2)
                                                 : cfg.n_paths;
    Acc total = reduce_samples(n_samples, [&](std::size_t s, Acc& a) {
        PathSample avg;
        const int legs = cfg.antithetic ? 2 : 1;
        for (int leg = 0; leg < legs; ++leg) {
            const PathSample ps = run_path(s, leg == 1);
            avg.total += ps.total / double(legs);
            avg.flow += ps.flow / double(legs);
            avg.term += ps.term / double(legs);
            avg.swc += ps.swc / double(legs);
            avg.events += ps.events;
        }
        a.sum += avg.total;
        a.sumsq += avg.total * avg.total;
        a.flow += avg.flow;
        a.term += avg.term;
        a.swc += avg.swc;
        a.events += avg.events;
        a.n += 1;
    });

    McReport rep;
    rep.total = finish(total);
    rep.flow_mean = total.flow / double(total.n);
    rep.terminal_mean = total.term / double(total.n);
    rep.switch_mean = total.swc / double(total.n);
    rep.n_switch_events = total.events;
    rep.reference = wealth_ref;
    return rep;
}

WealthCheckReport simulate_wealth(const DualSolution& sol, const DerivedSchedule& derived,
                                  const OriginalBoundary& S0, const OriginalBoundary& S1,
                                  const McConfig& cfg, double w) {
    cfg.check_valid();
    const ModelParams& p = derived.params();
    const GridSpec& g = sol.grid;
    const double dt = cfg.dt(p.T);
    const double drift = (p.beta - p.r - 0.5 * p.theta() * p.theta()) * dt;

    WealthCheckReport rep;
    rep.n_paths = cfg.n_paths;
    double sum_max = 0.0;
    std::size_t used = 0;

    for (std::size_t path = 0; path < cfg.n_paths; ++path) {
        const std::size_t sample = cfg.antithetic ? path / 2 : path;
        const bool flip = cfg.antithetic && (path % 2 == 1);
        const auto lnY = simulate_path_logY(p, cfg, sample, flip);
        if (*std::min_element(lnY.begin(), lnY.end()) < g.x_min ||
            *std::max_element(lnY.begin(), lnY.end()) > g.x_max) {
            ++rep.n_excluded;
            continue;
        }

        PolicyState st = policy_init(derived, S0, S1, cfg.j0, cfg.y0);
        Controls ctl = optimal_controls(sol, derived, 0.0, cfg.y0, st.eta);
        double w_dyn = ctl.W;
        if (path == 0) rep.w0_error = std::abs(ctl.W - w);
        double max_disc = 0.0;

        for (std::size_t k = 0; k < cfg.n_steps; ++k) {
            const double dB = (p.theta() != 0.0)
                                  ? -((lnY[k + 1] - lnY[k]) - drift) / p.theta()
                                  : 0.0;
            const double eps = (st.eta == 0) ? p.eps0 : p.eps1;
            w_dyn += (p.r * w_dyn + ctl.pi * p.sigma * p.theta() + eps - ctl.c) * dt +
                     ctl.pi * p.sigma * dB;

            const double t_next = dt * double(k + 1);
            const double y_next = std::exp(lnY[k + 1]);
            const int eta_old = st.eta;
            const std::size_t before = st.events.size();
            policy_step(st, derived, S0, S1, t_next, y_next);
            Controls next = optimal_controls(sol, derived, t_next, y_next, st.eta);
            if (st.events.size() > before) {
                const double cost = st.events.back().cost;
                w_dyn -= cost;
                Controls old_side = optimal_controls(sol, derived, t_next, y_next, eta_old);
                if (next.quality_ok && old_side.quality_ok)
                    rep.max_jump_mismatch = std::max(
                        rep.max_jump_mismatch, std::abs((next.W - old_side.W) + cost));
                rep.n_switch_events += st.events.size() - before;
            }
            // The surface read-off is unreliable where the stencil had to shift
            // off the contact set; those points say nothing about the tracking.
            if (next.quality_ok) max_disc = std::max(max_disc, std::abs(next.W - w_dyn));
            ctl = next;
        }
        sum_max += max_disc;
        rep.max_discrepancy = std::max(rep.max_discrepancy, max_disc);
        ++used;
    }
    if (used > 0) rep.mean_max_discrepancy = sum_max / double(used);
    return rep;
}

}  // namespace swob
