#pragma once

#include "swob/boundary.hpp"
#include "swob/grid.hpp"
#include "swob/model.hpp"

#include <optional>
#include <vector>

namespace swob {

/// Dual value surfaces recovered from the obstacle solution. Everything is
/// stored in transformed coordinates: w_j(tau, x) = e^{-x} P_j(T - tau, e^x),
/// so P_j(t, y) = y * w_j(T - t, ln y) and Q = y * v.
struct DualSolution {
    GridSpec grid;
    std::vector<double> v;        // copy of the obstacle solution
    std::vector<double> w0, w1;   // transformed P0, P1
    std::vector<double> resid;    // discrete d_tau v - L v - U (implicit-Euler form)
    std::vector<std::uint8_t> contact_lower, contact_upper;  // copied from the obstacle solve
    double consistency_error = 0.0;  // max |w0 - w1 - v|

    std::size_t idx(std::size_t k, std::size_t j) const { return k * grid.nodes_x() + j; }
};

/// Solves the two linear recovery problems with right-hand sides split from
/// the discrete obstacle residual and terminal (tau = 0) data J_R.
DualSolution recover_P(const SolutionField& field, const DerivedSchedule& derived);

/// Closed-form transformed dual value when switching is forbidden: collect
/// the job-j flow until the horizon, then retire. Used as recovery boundary
/// data on the truncated domain.
double no_switch_w(const ModelParams& p, int j, double tau, double x);

/// P_j(0, y) by monotone cubic interpolation along the tau = T slice.
double dual_value_J(const DualSolution& sol, const DerivedSchedule& derived, int j, double y);

/// Direct grid minimization of J(j, .) + y w, the duality oracle.
double dual_value_V_gridmin(const DualSolution& sol, const DerivedSchedule& derived, int j,
                            double w);

struct InvertResult {
    double y_star = 0.0;
    double value = 0.0;       // J(j, y*) + y* w
    double wealth_check = 0.0;  // -d_y J at y*, should equal w
};

/// Solves w = -d_y J(j, y*) on the monotone envelope of the discrete wealth map.
InvertResult invert_wealth(const DualSolution& sol, const DerivedSchedule& derived, int j,
                           double w);

struct Controls {
    double c = 0.0;
    double pi = 0.0;
    double W = 0.0;
    bool quality_ok = true;  // false when the second-difference stencil touched a contact node
};

/// Optimal controls at (t, y) in job eta; t >= T selects the Merton branch.
Controls optimal_controls(const DualSolution& sol, const DerivedSchedule& derived, double t,
                          double y, int eta);

struct SwitchEvent {
    double t = 0.0;
    int from = 0, to = 0;
    double cost = 0.0;  // phi_from(t), in wealth units
    double y = 0.0;
};

struct PolicyState {
    double t = 0.0;
    double y = 0.0;
    int eta = 0;
    std::vector<SwitchEvent> events;
};

/// Time-0 rules: immediate switch when starting on the wrong side of a boundary.
PolicyState policy_init(const DerivedSchedule& derived, const OriginalBoundary& S0,
                        const OriginalBoundary& S1, int j0, double y0);

/// Advances the hitting-time state machine by one step to (t_next, y_next).
/// Boundaries undefined at the queried time leave the trigger inert.
void policy_step(PolicyState& state, const DerivedSchedule& derived, const OriginalBoundary& S0,
                 const OriginalBoundary& S1, double t_next, double y_next);

}  // namespace swob
