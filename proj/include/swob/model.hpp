#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace swob {

/// Market, preference, and job primitives together with the derived
/// constants theta, gamma1, K1. Immutable after construction.
struct ModelParams {
    double r = 0.0;      // risk-free rate
    double mu = 0.0;     // risky drift
    double sigma = 0.0;  // risky volatility
    double beta = 0.0;   // subjective discount rate
    double gamma = 0.0;  // CRRA coefficient
    double alpha = 0.0;  // consumption weight in (0,1)
    double T = 0.0;      // retirement horizon
    double eps0 = 0.0;   // income in job 0
    double eps1 = 0.0;   // income in job 1
    double L0 = 0.0;     // leisure in job 0
    double L1 = 0.0;     // leisure in job 1
    double Lbar = 0.0;   // full leisure after retirement

    double theta() const { return (mu - r) / sigma; }
    double gamma1() const { return 1.0 - alpha * (1.0 - gamma); }
    double K1() const {
        const double g1 = gamma1();
        return r + (beta - r) / g1 + (g1 - 1.0) / (g1 * g1) * theta() * theta() / 2.0;
    }
    /// Exponent (gamma1-gamma)/gamma1 applied to leisure levels.
    double leisure_exp() const { return (gamma1() - gamma) / gamma1(); }
    /// Coefficient gamma1/(1-gamma1) * (L1^k - L0^k), k = leisure_exp().
    /// Positive under the standing parameter restrictions.
    double leisure_coeff() const;

    /// Throws std::invalid_argument on structurally invalid input
    /// (non-finite fields, T <= 0, sigma <= 0, gamma = 1, ...).
    void check_valid() const;
};

/// Closed family of switching-cost curves with exact derivatives.
struct CostFunction {
    enum class Kind { Constant, Affine, ExpDecay, CubicSpline };
    Kind kind = Kind::Constant;
    // Constant: a.  Affine: a + b*t.  ExpDecay: a + b*exp(-c*t).
    double a = 0.0, b = 0.0, c = 0.0;
    // CubicSpline: natural cubic spline through (knots_t, knots_y).
    std::vector<double> knots_t, knots_y;

    static CostFunction constant(double value);
    static CostFunction affine(double intercept, double slope);
    static CostFunction exp_decay(double floor, double scale, double rate);
    static CostFunction spline(std::vector<double> t, std::vector<double> y);

    double value(double t) const;
    double deriv(double t) const;
    /// Supremum of the second derivative magnitude over [0,T]
    /// (exact for the closed family; knot maxima for splines).
    double second_deriv_bound(double T) const;

  private:
    // Natural-spline second derivatives at the knots, built lazily.
    mutable std::vector<double> spline_m_;
    void build_spline() const;
};

/// Pair of switching-cost curves phi0, phi1 with the C^{1,1} bound q
/// computed from the descriptors.
struct CostSchedule {
    CostFunction phi0, phi1;

    double q(double T) const;  // ||phi0||_C11 + ||phi1||_C11
};

struct AssumptionCheck {
    std::string name;
    bool pass = false;
    double worst_margin = 0.0;  // strict margin; must be > 0
    double worst_t = 0.0;       // sample point achieving the margin
};

struct AssumptionReport {
    bool pass = false;
    std::vector<AssumptionCheck> checks;
    const AssumptionCheck* find(const std::string& name) const;
};

/// Everything derived from (params, costs) that the solver and the
/// diagnostics consume: reversed-time obstacles, the crossing time tau1,
/// localization curves, boundary data, wealth floors.
class DerivedSchedule {
  public:
    DerivedSchedule(ModelParams params, CostSchedule costs, double t1_tol_rel = 1e-10);

    const ModelParams& params() const { return params_; }
    const CostSchedule& costs() const { return costs_; }
    double q() const { return q_; }
    double t1() const { return t1_; }
    double tau1() const { return tau1_; }

    // Reversed-time obstacles psi_i(tau) = phi_i(T - tau).
    double psi0(double tau) const { return costs_.phi0.value(params_.T - tau); }
    double psi1(double tau) const { return costs_.phi1.value(params_.T - tau); }
    double dpsi0(double tau) const { return -costs_.phi0.deriv(params_.T - tau); }
    double dpsi1(double tau) const { return -costs_.phi1.deriv(params_.T - tau); }

    /// Income-gain function E(tau) = (eps0-eps1)(1-e^{-r tau})/r.
    double Ecal(double tau) const;
    /// G(tau) = leisure_coeff * e^{n/gamma1} * tau (left boundary envelope).
    double Gcal(double tau, double n) const;

    // Localization curves; Gamma1 is defined for tau >= tau1.
    double Gamma0(double tau) const;
    double Gamma1(double tau) const;
    double M(double tau) const { return 0.5 * (Gamma0(tau) + Gamma1(tau)); }
    double M0(double tau) const { return 0.25 * (3.0 * Gamma0(tau) + Gamma1(tau)); }
    double M1(double tau) const { return 0.25 * (Gamma0(tau) + 3.0 * Gamma1(tau)); }

    // Dirichlet data of the truncated problem; n is the half-width entering G.
    double rho0(double tau, double n) const;
    double rho1(double tau) const;

    /// Wealth floor iota(j): lowest admissible wealth while holding job j.
    double wealth_floor(int j) const;
    /// Alternative job-1 floor on [0, T-t1) that discounts the high income
    /// stream instead (uses eps0 inside the floor); reported alongside, never
    /// used for admissibility.
    double wealth_floor_j1_variant(double t) const;

  private:
    ModelParams params_;
    CostSchedule costs_;
    double q_ = 0.0;
    double t1_ = 0.0;
    double tau1_ = 0.0;
};

/// Source term U(x) of the transformed problem.
double source_U(const ModelParams& p, double x);
/// Transformed dual utility + income rate u_j(x) = e^{-x} utilde_j(e^x) + eps_j.
double source_u_job(const ModelParams& p, int j, double x);
/// Post-retirement dual value J_R(y), y > 0.
double merton_JR(const ModelParams& p, double y);
/// dJ_R/dy.
double merton_JR_prime(const ModelParams& p, double y);
/// utilde_j(y) for j in {0,1}; j = -1 selects the retirement utility.
double dual_utility(const ModelParams& p, int j, double y);

/// Validates Assumptions 1-4 on a uniform n_samples grid plus spline knots.
AssumptionReport validate_assumptions(const ModelParams& params, const CostSchedule& costs,
                                      std::size_t n_samples = 1000);

/// Unique root of phi1(t) = E(t) on (0,T), bisected to tol*T.
/// Returns {t1, tau1 = T - t1}. Throws if no sign change exists.
std::pair<double, double> solve_t1(const ModelParams& params, const CostSchedule& costs,
                                   double tol_rel = 1e-10);

}  // namespace swob
