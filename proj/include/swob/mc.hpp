#pragma once

#include "swob/boundary.hpp"
#include "swob/dual.hpp"
#include "swob/model.hpp"

#include <cstdint>
#include <vector>

namespace swob {

struct McConfig {
    std::size_t n_paths = 100000;
    std::size_t n_steps = 512;
    std::uint64_t seed = 20240817;
    bool antithetic = true;
    double y0 = 1.0;
    int j0 = 0;

    void check_valid() const;
    double dt(double T) const { return T / double(n_steps); }
};

struct McEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;  // independent samples (pairs count once under antithetics)

    bool within(double reference, double k = 3.0) const;
};

struct McReport {
    McEstimate total;
    double flow_mean = 0.0;      // running-utility (or consumption-minus-income) leg
    double terminal_mean = 0.0;  // closed-form tail conditional on Y_T
    double switch_mean = 0.0;    // switching-cost leg, signed as it enters the total
    double reference = 0.0;
    std::size_t n_switch_events = 0;
};

/// Exact log-scheme path of Y on the uniform step grid, ln Y_0 = ln y0.
/// Deterministic given (seed, sample, antithetic sign).
std::vector<double> simulate_path_logY(const ModelParams& p, const McConfig& cfg,
                                       std::size_t sample, bool flip_sign);

/// E[e^{-(beta-r)T} Y_T]; the exact value is y0.
McEstimate mc_martingale(const ModelParams& p, const McConfig& cfg);

/// Post-retirement discounted utility stream: the [0,T] window by trapezoid,
/// the tail in closed form; estimates J_R(y0).
McEstimate mc_merton(const ModelParams& p, const McConfig& cfg);

/// Replays the hitting-time policy of the scaled boundaries along simulated
/// paths and accumulates the dual objective: running dual utility plus income
/// leg, minus discounted switching costs, plus the closed-form terminal value.
/// never_switch freezes the job at j0 (a feasible policy, hence a lower bound).
McReport evaluate_dual_objective(const DerivedSchedule& derived, const OriginalBoundary& S0,
                                 const OriginalBoundary& S1, const McConfig& cfg,
                                 double s0_scale = 1.0, bool never_switch = false);

/// Budget identity at the duality point: E[int H (c - income) dt + sum H phi
/// + H_T W_T] with H_t = e^{-beta t} Y_t / y0 and the post-retirement leg in
/// closed form; equals the initial wealth at the optimum. c_scale != 1 probes
/// suboptimal consumption.
McReport evaluate_budget(const DerivedSchedule& derived, const OriginalBoundary& S0,
                         const OriginalBoundary& S1, const McConfig& cfg, double wealth_ref,
                         double c_scale = 1.0);

struct WealthCheckReport {
    double mean_max_discrepancy = 0.0;  // mean over paths of max_t |W_dual - W_dyn|
    double max_discrepancy = 0.0;
    double w0_error = 0.0;              // |W_dual(0) - w|
    double max_jump_mismatch = 0.0;     // switch-time jump vs the paid cost
    std::size_t n_excluded = 0;         // paths leaving the PDE domain
    std::size_t n_paths = 0;
    std::size_t n_switch_events = 0;
};

/// Two independent wealth constructions along each path: -d_y P read off the
/// recovered dual surface, and forward Euler on the wealth dynamics driven by
/// the same noise with the PDE controls. Reports their divergence.
WealthCheckReport simulate_wealth(const DualSolution& sol, const DerivedSchedule& derived,
                                  const OriginalBoundary& S0, const OriginalBoundary& S1,
                                  const McConfig& cfg, double w);

}  // namespace swob
