#include "swob/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace swob {

namespace {

std::optional<double> interp_curve(const std::vector<double>& ts, const std::vector<double>& vs,
                                   double t) {
    if (ts.empty() || t < ts.front() || t > ts.back()) return std::nullopt;
    auto it = std::lower_bound(ts.begin(), ts.end(), t);
    if (it == ts.begin()) return vs.front();
    const std::size_t i = std::size_t(it - ts.begin());
    const double t0 = ts[i - 1], t1 = ts[i];
    const double w = (t1 > t0) ? (t - t0) / (t1 - t0) : 0.0;
    return (1.0 - w) * vs[i - 1] + w * vs[i];
}

}  // namespace

std::optional<double> FreeBoundaryCurve::at(double tau) const {
    return interp_curve(taus, xs, tau);
}

std::optional<double> OriginalBoundary::at(double t) const { return interp_curve(ts, Ss, t); }

FreeBoundaryCurve extract_chi(const SolutionField& field, const DerivedSchedule& derived,
                              BoundarySide side) {
    const GridSpec& g = field.grid;
    const std::size_t nx = g.nodes_x();
    FreeBoundaryCurve curve;
    curve.side = side;
    curve.dx = g.dx();
    curve.dtau = g.dtau();
    const double level = field.contact_tol;  // sub-grid level-set value

    for (std::size_t k = 1; k < g.nodes_tau(); ++k) {
        const double tau = g.tau(k);
        const auto& flags = (side == BoundarySide::Lower) ? field.contact_lower
                                                          : field.contact_upper;
        // Extremal contact node and connectivity scan.
        std::ptrdiff_t extremal = -1;
        std::size_t count = 0, first = 0, last = 0;
        for (std::size_t j = 0; j < nx; ++j) {
            if (!flags[field.idx(k, j)]) continue;
            if (count == 0) first = j;
            last = j;
            ++count;
            extremal = (side == BoundarySide::Lower) ? std::ptrdiff_t(j)
                                                     : (extremal < 0 ? std::ptrdiff_t(j) : extremal);
        }
        if (extremal < 0) continue;
        if (count != last - first + 1) ++curve.anomalies;

        double chi;
        if (side == BoundarySide::Lower) {
            const std::size_t j = std::size_t(extremal);
            if (j + 1 >= nx) {
                chi = g.x(j);
            } else {
                const double gj = field.at(k, j) + derived.psi0(tau);
                const double gj1 = field.at(k, j + 1) + derived.psi0(tau);
                chi = (gj1 > gj) ? g.x(j) + g.dx() * (level - gj) / (gj1 - gj) : g.x(j);
            }
        } else {
            const std::size_t j = std::size_t(extremal);
            if (j == 0) {
                chi = g.x(0);
            } else {
                const double hj = derived.psi1(tau) - field.at(k, j);
                const double hj1 = derived.psi1(tau) - field.at(k, j - 1);
                chi = (hj1 > hj) ? g.x(j) - g.dx() * (level - hj) / (hj1 - hj) : g.x(j);
            }
        }
        if (curve.taus.empty()) curve.valid_from = tau;
        curve.taus.push_back(tau);
        curve.xs.push_back(chi);
    }
    return curve;
}

OriginalBoundary to_original(const FreeBoundaryCurve& curve, double T) {
    OriginalBoundary ob;
    ob.side = curve.side;
    for (std::size_t i = curve.taus.size(); i-- > 0;) {
        ob.ts.push_back(T - curve.taus[i]);
        ob.Ss.push_back(std::exp(curve.xs[i]));
    }
    return ob;
}

LimitReport limit_diagnostics(const FreeBoundaryCurve& narrow, const FreeBoundaryCurve& wide) {
    LimitReport rep;
    const std::size_t k = std::min<std::size_t>(3, narrow.taus.size());
    const bool lower = narrow.side == BoundarySide::Lower;
    for (std::size_t i = 0; i < k; ++i) {
        const double tau = narrow.taus[i];
        ++rep.slices_checked;
        const auto w = wide.at(tau);
        if (!w) {
            ++rep.slices_detached;
            continue;
        }
        const double tol = 0.5 * (narrow.dx + wide.dx);
        if ((lower && *w <= narrow.xs[i] + tol) || (!lower && *w >= narrow.xs[i] - tol))
            ++rep.slices_outward;
    }
    rep.pass = rep.slices_checked > 0 &&
               rep.slices_outward + rep.slices_detached == rep.slices_checked;
    return rep;
}

namespace {

BandReport band_check_impl(const SolutionField& field, const DerivedSchedule& derived,
                           const FreeBoundaryCurve& curve, bool lower_band, double tau_lo,
                           double tau_hi) {
    const GridSpec& g = field.grid;
    const ModelParams& p = derived.params();
    const std::size_t nx = g.nodes_x();
    BandReport rep;
    for (std::size_t k = 1; k < g.nodes_tau(); ++k) {
        const double tau = g.tau(k);
        if (tau < tau_lo || tau > tau_hi) continue;
        const auto chi = curve.at(tau);
        if (!chi) continue;
        const double psi_d = lower_band ? derived.dpsi0(tau) : -derived.dpsi1(tau);
        const double lo_x = lower_band ? *chi : derived.M1(tau);
        const double hi_x = lower_band ? derived.M0(tau) : *chi;
        for (std::size_t j = 1; j + 1 < nx; ++j) {
            const double x = g.x(j);
            if (!(x > lo_x && x < hi_x)) continue;
            const double dvx = (field.at(k, j + 1) - field.at(k, j - 1)) / (2.0 * g.dx());
            const double dvt = (field.at(k, j) - field.at(k - 1, j)) / g.dtau();
            const double lhs = dvt + psi_d;
            if (dvx <= 0.0) {
                ++rep.dx_nonpositive;
                continue;
            }
            ++rep.nodes_tested;
            if (lhs < 0.0) rep.C_minus = std::max(rep.C_minus, -lhs / dvx);
            if (lhs > 0.0)
                rep.C_plus =
                    std::max(rep.C_plus, lhs / (std::exp(x / p.gamma1()) * dvx));
        }
    }
    return rep;
}

}  // namespace

BandReport derivative_band_check(const SolutionField& field, const DerivedSchedule& derived,
                                 const FreeBoundaryCurve& curve0, double tau_lo, double tau_hi) {
    return band_check_impl(field, derived, curve0, true, tau_lo, tau_hi);
}

BandReport derivative_band_check_upper(const SolutionField& field, const DerivedSchedule& derived,
                                       const FreeBoundaryCurve& curve1, double tau_lo,
                                       double tau_hi) {
    return band_check_impl(field, derived, curve1, false, tau_lo, tau_hi);
}

LipschitzReport lipschitz_estimate(const FreeBoundaryCurve& curve, std::size_t window) {
    LipschitzReport rep;
    const std::size_t n = curve.taus.size();
    if (n < window + 1) return rep;
    // Exclude the first and last 5% of the valid range; divergence there is
    // genuine and reported separately.
    const std::size_t skip = std::max<std::size_t>(1, n / 20);
    std::vector<double> quotients;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double q = std::abs(curve.xs[i + 1] - curve.xs[i]) /
                         (curve.taus[i + 1] - curve.taus[i]);
        if (i < skip || i + 1 >= n - skip) {
            rep.endpoint_max = std::max(rep.endpoint_max, q);
        } else {
            quotients.push_back(q);
        }
    }
    for (std::size_t i = 0; i < quotients.size(); i += window) {
        double wmax = 0.0;
        for (std::size_t j = i; j < std::min(i + window, quotients.size()); ++j)
            wmax = std::max(wmax, quotients[j]);
        rep.window_max.push_back(wmax);
        rep.max_quotient = std::max(rep.max_quotient, wmax);
    }
    return rep;
}

ContactTopologyReport contact_topology(const SolutionField& field,
                                       const DerivedSchedule& derived) {
    const GridSpec& g = field.grid;
    const std::size_t nx = g.nodes_x();
    ContactTopologyReport rep;
    for (std::size_t k = 0; k < g.nodes_tau(); ++k) {
        const double tau = g.tau(k);
        if (tau >= 0.05 * g.T) {
            // Lower contact must be a single interval touching the left edge.
            bool in_gap = false, anomaly = false;
            if (!field.contact_lower[field.idx(k, 0)]) anomaly = true;
            for (std::size_t j = 0; j < nx; ++j) {
                const bool c = field.contact_lower[field.idx(k, j)];
                if (!c) in_gap = true;
                if (c && in_gap) anomaly = true;
            }
            if (anomaly) ++rep.lower_anomalies;
        }
        if (tau >= derived.tau1() + 0.05 * g.T) {
            bool in_gap = false, anomaly = false;
            if (!field.contact_upper[field.idx(k, nx - 1)]) anomaly = true;
            for (std::size_t j = nx; j-- > 0;) {
                const bool c = field.contact_upper[field.idx(k, j)];
                if (!c) in_gap = true;
                if (c && in_gap) anomaly = true;
            }
            if (anomaly) ++rep.upper_anomalies;
        }
    }
    return rep;
}

}  // namespace swob
