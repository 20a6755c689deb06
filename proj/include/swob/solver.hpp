#pragma once

#include "swob/grid.hpp"
#include "swob/model.hpp"

#include <vector>

namespace swob {

/// Penalty configuration for the penalized scheme. The concrete penalty
/// shape is a clipped quadratic with a linear tail; the values at zero
/// follow the penalized-problem construction.
struct PenaltyConfig {
    double epsilon = 1e-3;  // penalty scale
    double n_eff = 0.0;     // effective half-width entering c0
    double c0 = 0.0;        // lower-penalty value at 0
    double c1 = 0.0;        // upper-penalty magnitude at 0

    static PenaltyConfig make(const DerivedSchedule& derived, const GridSpec& grid,
                              double epsilon);
};

/// beta0: nonnegative, nonincreasing, beta0(0)=c0, zero for lambda >= eps.
double penalty_beta0(double lambda, const PenaltyConfig& cfg);
double penalty_beta0_deriv(double lambda, const PenaltyConfig& cfg);
/// beta1: nonpositive, nonincreasing, beta1(0)=-c1, zero for lambda <= -eps.
double penalty_beta1(double lambda, const PenaltyConfig& cfg);
double penalty_beta1_deriv(double lambda, const PenaltyConfig& cfg);

/// Solves the penalized problem by time marching with damped Newton steps
/// on each nonlinear tridiagonal system.
SolutionField solve_penalized(const DerivedSchedule& derived, const GridSpec& grid,
                              const PenaltyConfig& cfg, double newton_tol = 1e-12,
                              std::size_t max_iter = 60);

/// Solves the double-obstacle LCP by projected SOR at each implicit step.
SolutionField solve_lcp(const DerivedSchedule& derived, const GridSpec& grid,
                        double relax_omega = 1.5, double lcp_tol = 1e-10,
                        std::size_t max_sweeps = 20000);

struct ResidualStats {
    // Per-time-slice statistics of the discrete residual d_tau v - L v - U.
    std::vector<double> continuation_max_abs;
    std::vector<double> continuation_mean_abs;
    double lower_contact_min = 0.0;   // should be >= -tol (residual >= 0 on lower contact)
    double upper_contact_max = 0.0;   // should be <= +tol
    double max_obstacle_violation = 0.0;
    double global_continuation_max = 0.0;
};

ResidualStats residual_report(const SolutionField& field, const DerivedSchedule& derived);

struct ConvergenceReport {
    std::vector<double> diffs;   // L-inf difference between consecutive levels
    std::vector<double> orders;  // Richardson log2 ratios
    bool monotone = true;
};

/// Self-convergence study on successively halved steps.
ConvergenceReport refine_study(const DerivedSchedule& derived, const GridSpec& base,
                               std::size_t levels, SolveMethod method,
                               double penalty_epsilon = 1e-3);

/// Chooses the truncated domain: localization curves first, then a coarse
/// pre-pass solve, then 25% padding around the detected contact extremes.
GridSpec auto_domain(const DerivedSchedule& derived, std::size_t n_x, std::size_t n_tau,
                     TimeScheme scheme = TimeScheme::ImplicitEuler);

/// Discrete spatial operator L applied to one slice at interior node j.
double apply_L(const ModelParams& p, const GridSpec& g, const std::vector<double>& slice,
               std::size_t j);

}  // namespace swob
