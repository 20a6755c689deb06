#pragma once

#include "swob/grid.hpp"
#include "swob/model.hpp"

#include <optional>
#include <vector>

namespace swob {

enum class BoundarySide { Lower, Upper };

/// Parametrized free boundary chi_i(tau) with its validity window.
struct FreeBoundaryCurve {
    BoundarySide side = BoundarySide::Lower;
    std::vector<double> taus;  // slices where contact exists
    std::vector<double> xs;    // sub-grid refined boundary locations
    double valid_from = 0.0;   // first tau with contact
    double dx = 0.0;           // grid spacing of the source field
    double dtau = 0.0;
    std::size_t anomalies = 0;  // slices with disconnected contact sets

    bool empty() const { return taus.empty(); }
    /// Linear interpolation of chi at tau; nullopt outside the valid window.
    std::optional<double> at(double tau) const;
};

/// Free boundary in original coordinates S_i(t) = e^{chi_i(T - t)}.
struct OriginalBoundary {
    BoundarySide side = BoundarySide::Lower;
    std::vector<double> ts;  // increasing in t
    std::vector<double> Ss;
    std::optional<double> at(double t) const;
};

FreeBoundaryCurve extract_chi(const SolutionField& field, const DerivedSchedule& derived,
                              BoundarySide side);

OriginalBoundary to_original(const FreeBoundaryCurve& curve, double T);

struct LimitReport {
    bool pass = false;
    std::size_t slices_checked = 0;
    std::size_t slices_outward = 0;  // moved outward on the wider domain
    std::size_t slices_detached = 0; // contact disappeared on the wider domain
};

/// Divergence proxy: on a widened domain the boundary at the smallest valid
/// taus must move outward or the contact must disappear there.
LimitReport limit_diagnostics(const FreeBoundaryCurve& narrow, const FreeBoundaryCurve& wide);

struct BandReport {
    double C_minus = 0.0;      // smallest C with -C dv/dx <= d_tau v + psi'
    double C_plus = 0.0;       // smallest C with d_tau v + psi' <= C e^{x/g1} dv/dx
    std::size_t nodes_tested = 0;
    std::size_t dx_nonpositive = 0;  // monotonicity violations inside the band
    bool finite() const { return nodes_tested > 0 && dx_nonpositive == 0; }
};

/// Derivative-ratio band on chi_0 < x <= M0 (lower) over a compact interior
/// tau interval [tau_lo, tau_hi].
BandReport derivative_band_check(const SolutionField& field, const DerivedSchedule& derived,
                                 const FreeBoundaryCurve& curve0, double tau_lo, double tau_hi);
/// Same on M1 <= x < chi_1 (upper) with -psi1'.
BandReport derivative_band_check_upper(const SolutionField& field, const DerivedSchedule& derived,
                                       const FreeBoundaryCurve& curve1, double tau_lo,
                                       double tau_hi);

struct LipschitzReport {
    double max_quotient = 0.0;        // over the interior windows
    std::vector<double> window_max;   // per-window maxima
    double endpoint_max = 0.0;        // quotients in the excluded 5% tails
};

LipschitzReport lipschitz_estimate(const FreeBoundaryCurve& curve, std::size_t window);

struct ContactTopologyReport {
    std::size_t lower_anomalies = 0;  // slices whose lower contact set is not a
                                      // left-edge interval (tau >= 0.05 T)
    std::size_t upper_anomalies = 0;  // same for the right edge, tau >= tau1 + 0.05 T
};

/// Far-field contact structure check (half-line contact sets at grid resolution).
ContactTopologyReport contact_topology(const SolutionField& field, const DerivedSchedule& derived);

}  // namespace swob
