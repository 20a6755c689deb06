#include "swob/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace swob {

namespace {

bool finite(double x) { return std::isfinite(x); }

double expm1_ratio(double r, double tau) {
    // (1 - e^{-r tau}) / r, stable for small r.
    if (std::abs(r) < 1e-14) return tau;
    return -std::expm1(-r * tau) / r;
}

}  // namespace

double ModelParams::leisure_coeff() const {
    const double k = leisure_exp();
    const double g1 = gamma1();
    return g1 / (1.0 - g1) * (std::pow(L1, k) - std::pow(L0, k));
}

void ModelParams::check_valid() const {
    for (double v : {r, mu, sigma, beta, gamma, alpha, T, eps0, eps1, L0, L1, Lbar})
        if (!finite(v)) throw std::invalid_argument("ModelParams: non-finite parameter");
    if (T <= 0.0) throw std::invalid_argument("ModelParams: T must be positive");
    if (sigma <= 0.0) throw std::invalid_argument("ModelParams: sigma must be positive");
    if (r <= 0.0) throw std::invalid_argument("ModelParams: r must be positive");
    if (mu == r) throw std::invalid_argument("ModelParams: mu must differ from r");
    if (beta <= 0.0) throw std::invalid_argument("ModelParams: beta must be positive");
    if (gamma <= 0.0 || gamma == 1.0)
        throw std::invalid_argument("ModelParams: gamma must be positive and != 1");
    if (alpha <= 0.0 || alpha >= 1.0)
        throw std::invalid_argument("ModelParams: alpha must lie in (0,1)");
    if (!(eps1 >= 0.0 && eps1 < eps0))
        throw std::invalid_argument("ModelParams: need 0 <= eps1 < eps0");
    if (!(0.0 < L0 && L0 < L1 && L1 < Lbar))
        throw std::invalid_argument("ModelParams: need 0 < L0 < L1 < Lbar");
    const double g1 = gamma1();
    if (g1 <= 0.0 || g1 == 1.0)
        throw std::invalid_argument("ModelParams: gamma1 must be positive and != 1");
}

CostFunction CostFunction::constant(double value) {
    CostFunction f;
    f.kind = Kind::Constant;
    f.a = value;
    return f;
}

CostFunction CostFunction::affine(double intercept, double slope) {
    CostFunction f;
    f.kind = Kind::Affine;
    f.a = intercept;
    f.b = slope;
    return f;
}

CostFunction CostFunction::exp_decay(double floor, double scale, double rate) {
    CostFunction f;
    f.kind = Kind::ExpDecay;
    f.a = floor;
    f.b = scale;
    f.c = rate;
    return f;
}

CostFunction CostFunction::spline(std::vector<double> t, std::vector<double> y) {
    if (t.size() < 2 || t.size() != y.size())
        throw std::invalid_argument("CostFunction::spline: need matching knot arrays, size >= 2");
    for (std::size_t i = 1; i < t.size(); ++i)
        if (!(t[i] > t[i - 1]))
            throw std::invalid_argument("CostFunction::spline: knots must be strictly increasing");
    CostFunction f;
    f.kind = Kind::CubicSpline;
    f.knots_t = std::move(t);
    f.knots_y = std::move(y);
    return f;
}

void CostFunction::build_spline() const {
    const std::size_t n = knots_t.size();
    if (!spline_m_.empty() || n == 0) return;
    // Natural cubic spline: tridiagonal system for second derivatives.
    spline_m_.assign(n, 0.0);
    if (n == 2) return;
    std::vector<double> sub(n, 0.0), diag(n, 0.0), sup(n, 0.0), rhs(n, 0.0);
    diag[0] = diag[n - 1] = 1.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h0 = knots_t[i] - knots_t[i - 1];
        const double h1 = knots_t[i + 1] - knots_t[i];
        sub[i] = h0 / 6.0;
        diag[i] = (h0 + h1) / 3.0;
        sup[i] = h1 / 6.0;
        rhs[i] = (knots_y[i + 1] - knots_y[i]) / h1 - (knots_y[i] - knots_y[i - 1]) / h0;
    }
    for (std::size_t i = 1; i < n; ++i) {
        const double m = sub[i] / diag[i - 1];
        diag[i] -= m * sup[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    spline_m_[n - 1] = rhs[n - 1] / diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;)
        spline_m_[i] = (rhs[i] - sup[i] * spline_m_[i + 1]) / diag[i];
}

double CostFunction::value(double t) const {
    switch (kind) {
        case Kind::Constant: return a;
        case Kind::Affine: return a + b * t;
        case Kind::ExpDecay: return a + b * std::exp(-c * t);
        case Kind::CubicSpline: break;
    }
    build_spline();
    const auto& T = knots_t;
    const double tc = std::clamp(t, T.front(), T.back());
    auto it = std::upper_bound(T.begin(), T.end(), tc);
    std::size_t i = std::min<std::size_t>(T.size() - 2, it == T.begin() ? 0 : (it - T.begin() - 1));
    const double h = T[i + 1] - T[i];
    const double A = (T[i + 1] - tc) / h, B = (tc - T[i]) / h;
    return A * knots_y[i] + B * knots_y[i + 1] +
           ((A * A * A - A) * spline_m_[i] + (B * B * B - B) * spline_m_[i + 1]) * h * h / 6.0;
}

double CostFunction::deriv(double t) const {
    switch (kind) {
        case Kind::Constant: return 0.0;
        case Kind::Affine: return b;
        case Kind::ExpDecay: return -b * c * std::exp(-c * t);
        case Kind::CubicSpline: break;
    }
    build_spline();
    const auto& T = knots_t;
    const double tc = std::clamp(t, T.front(), T.back());
    auto it = std::upper_bound(T.begin(), T.end(), tc);
    std::size_t i = std::min<std::size_t>(T.size() - 2, it == T.begin() ? 0 : (it - T.begin() - 1));
    const double h = T[i + 1] - T[i];
    const double A = (T[i + 1] - tc) / h, B = (tc - T[i]) / h;
    return (knots_y[i + 1] - knots_y[i]) / h -
           (3.0 * A * A - 1.0) / 6.0 * h * spline_m_[i] +
           (3.0 * B * B - 1.0) / 6.0 * h * spline_m_[i + 1];
}

double CostFunction::second_deriv_bound(double T) const {
    switch (kind) {
        case Kind::Constant: return 0.0;
        case Kind::Affine: return 0.0;
        case Kind::ExpDecay: return std::abs(b) * c * c;
        case Kind::CubicSpline: break;
    }
    build_spline();
    (void)T;
    double m = 0.0;
    for (double s : spline_m_) m = std::max(m, std::abs(s));
    return m;
}

double CostSchedule::q(double T) const {
    // ||phi||_{C^{1,1}} = sup|phi| + sup|phi'| + Lip(phi'), summed over both
    // curves, evaluated on a dense sample plus exact curvature bounds.
    const std::size_t n = 2001;
    double q_total = 0.0;
    for (const CostFunction* f : {&phi0, &phi1}) {
        double sup_v = 0.0, sup_d = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double t = T * double(i) / double(n - 1);
            sup_v = std::max(sup_v, std::abs(f->value(t)));
            sup_d = std::max(sup_d, std::abs(f->deriv(t)));
        }
        q_total += sup_v + sup_d + f->second_deriv_bound(T);
    }
    return q_total;
}

const AssumptionCheck* AssumptionReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

DerivedSchedule::DerivedSchedule(ModelParams params, CostSchedule costs, double t1_tol_rel)
    : params_(params), costs_(std::move(costs)) {
    params_.check_valid();
    q_ = costs_.q(params_.T);
    auto [t1, tau1] = solve_t1(params_, costs_, t1_tol_rel);
    t1_ = t1;
    tau1_ = tau1;
}

double DerivedSchedule::Ecal(double tau) const {
    return (params_.eps0 - params_.eps1) * expm1_ratio(params_.r, tau);
}

double DerivedSchedule::Gcal(double tau, double n) const {
    return params_.leisure_coeff() * std::exp(n / params_.gamma1()) * tau;
}

double DerivedSchedule::Gamma0(double tau) const {
    const double den = params_.eps0 - params_.eps1 + dpsi0(tau) + params_.r * psi0(tau);
    if (den <= 0.0)
        throw std::runtime_error("Gamma0: nonpositive denominator (cost separation condition violated)");
    return params_.gamma1() * std::log(params_.leisure_coeff() / den);
}

double DerivedSchedule::Gamma1(double tau) const {
    const double den = params_.eps0 - params_.eps1 - dpsi1(tau) - params_.r * psi1(tau);
    if (den <= 0.0)
        throw std::runtime_error("Gamma1: nonpositive denominator (cost separation condition violated)");
    return params_.gamma1() * std::log(params_.leisure_coeff() / den);
}

double DerivedSchedule::rho0(double tau, double n) const {
    return std::max(-Gcal(tau, n), -psi0(tau));
}

double DerivedSchedule::rho1(double tau) const { return std::min(Ecal(tau), psi1(tau)); }

double DerivedSchedule::wealth_floor(int j) const {
    if (j != 0 && j != 1) throw std::invalid_argument("wealth_floor: j must be 0 or 1");
    const double pv0 = params_.eps0 * expm1_ratio(params_.r, params_.T);
    const double pv1 = params_.eps1 * expm1_ratio(params_.r, params_.T);
    return j == 0 ? -pv0 : -pv1 + costs_.phi1.value(0.0);
}

double DerivedSchedule::wealth_floor_j1_variant(double t) const {
    return -params_.eps0 * expm1_ratio(params_.r, params_.T - t) + costs_.phi1.value(t);
}

double source_U(const ModelParams& p, double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("source_U: non-finite x");
    return (p.eps0 - p.eps1) - p.leisure_coeff() * std::exp(-x / p.gamma1());
}

double source_u_job(const ModelParams& p, int j, double x) {
    const double g1 = p.gamma1();
    const double L = (j == 0) ? p.L0 : p.L1;
    const double eps = (j == 0) ? p.eps0 : p.eps1;
    return g1 / (1.0 - g1) * std::pow(L, p.leisure_exp()) * std::exp(-x / g1) + eps;
}

double dual_utility(const ModelParams& p, int j, double y) {
    if (y <= 0.0) throw std::invalid_argument("dual_utility: y must be positive");
    const double g1 = p.gamma1();
    const double L = (j == 0) ? p.L0 : (j == 1 ? p.L1 : p.Lbar);
    return g1 / (1.0 - g1) * std::pow(L, p.leisure_exp()) * std::pow(y, -(1.0 - g1) / g1);
}

double merton_JR(const ModelParams& p, double y) {
    if (y <= 0.0) throw std::invalid_argument("merton_JR: y must be positive");
    return dual_utility(p, -1, y) / p.K1();
}

double merton_JR_prime(const ModelParams& p, double y) {
    const double g1 = p.gamma1();
    const double pw = (1.0 - g1) / g1;
    return -pw / y * merton_JR(p, y);
}

AssumptionReport validate_assumptions(const ModelParams& params, const CostSchedule& costs,
                                      std::size_t n_samples) {
    if (n_samples < 100) throw std::invalid_argument("validate_assumptions: n_samples >= 100");
    params.check_valid();

    const double T = params.T;
    std::vector<double> ts;
    ts.reserve(n_samples + 8);
    for (std::size_t i = 0; i < n_samples; ++i) ts.push_back(T * double(i) / double(n_samples - 1));
    for (const CostFunction* f : {&costs.phi0, &costs.phi1})
        for (double kt : f->knots_t)
            if (kt >= 0.0 && kt <= T) ts.push_back(kt);
    std::sort(ts.begin(), ts.end());

    AssumptionReport rep;
    auto scan = [&](const std::string& name, auto margin_fn) {
        AssumptionCheck c;
        c.name = name;
        c.worst_margin = std::numeric_limits<double>::infinity();
        for (double t : ts) {
            const double m = margin_fn(t);
            if (m < c.worst_margin) {
                c.worst_margin = m;
                c.worst_t = t;
            }
        }
        c.pass = c.worst_margin > 0.0;
        rep.checks.push_back(c);
    };

    // A1: cost positivity and the smoothness bound (the bound is computed
    // from the descriptors, so the only failure channel is positivity).
    scan("A1.positivity.phi0", [&](double t) { return costs.phi0.value(t); });
    scan("A1.positivity.phi1", [&](double t) { return costs.phi1.value(t); });

    // A2(i): phi0' - r phi0 < -phi1' + r phi1.
    scan("A2i.separation", [&](double t) {
        return (-costs.phi1.deriv(t) + params.r * costs.phi1.value(t)) -
               (costs.phi0.deriv(t) - params.r * costs.phi0.value(t));
    });

    // A2(ii): phi1(0) < E(0) and -phi1' + r phi1 < eps0 - eps1.
    {
        AssumptionCheck c;
        c.name = "A2ii.initial_gain";
        const double E0 = (params.eps0 - params.eps1) * expm1_ratio(params.r, T);
        c.worst_margin = E0 - costs.phi1.value(0.0);
        c.worst_t = 0.0;
        c.pass = c.worst_margin > 0.0;
        rep.checks.push_back(c);
    }
    scan("A2ii.income_bound", [&](double t) {
        return (params.eps0 - params.eps1) -
               (-costs.phi1.deriv(t) + params.r * costs.phi1.value(t));
    });

    // A4: positive Merton constant.
    {
        AssumptionCheck c;
        c.name = "A4.merton_constant";
        c.worst_margin = params.K1();
        c.pass = c.worst_margin > 0.0;
        rep.checks.push_back(c);
    }

    rep.pass = true;
    for (const auto& c : rep.checks) rep.pass = rep.pass && c.pass;
    return rep;
}

std::pair<double, double> solve_t1(const ModelParams& params, const CostSchedule& costs,
                                   double tol_rel) {
    const double T = params.T;
    auto g = [&](double t) {
        return costs.phi1.value(t) - (params.eps0 - params.eps1) * expm1_ratio(params.r, T - t);
    };
    double lo = 0.0, hi = T;
    if (!(g(lo) < 0.0 && g(hi) > 0.0))
        throw std::runtime_error(
            "solve_t1: no sign change of phi1 - E on (0,T); check A2ii.initial_gain");
    const double tol = tol_rel * T;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) < 0.0 ? lo : hi) = mid;
    }
    const double t1 = 0.5 * (lo + hi);
    return {t1, T - t1};
}

}  // namespace swob
