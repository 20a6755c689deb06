#include "swob/model.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <cmath>

using namespace swob;

TEST_CASE("derived scalar constants") {
    const ModelParams p = baseline_params();
    CHECK(p.theta() == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(p.gamma1() == doctest::Approx(1.5).epsilon(1e-14));
    // K1 = r + (beta-r)/g1 + (g1-1)/g1^2 * theta^2/2, assembled independently
    const double k1 = 0.02 + 0.01 / 1.5 + 0.5 / 2.25 * 0.25 * 0.25 / 2.0;
    CHECK(p.K1() == doctest::Approx(k1).epsilon(1e-14));
    // leisure coefficient: g1/(1-g1) * (L1^k - L0^k), k = (g1-gamma)/g1
    const double kexp = (1.5 - 2.0) / 1.5;
    const double coeff = 1.5 / (1.0 - 1.5) * (std::pow(0.7, kexp) - std::pow(0.4, kexp));
    CHECK(coeff > 0.0);
    CHECK(p.leisure_coeff() == doctest::Approx(coeff).epsilon(1e-14));
}

TEST_CASE("parameter validation rejects degenerate inputs") {
    ModelParams p = baseline_params();
    p.gamma = 1.0;
    CHECK_THROWS_AS(p.check_valid(), std::invalid_argument);
    p = baseline_params();
    p.sigma = 0.0;
    CHECK_THROWS_AS(p.check_valid(), std::invalid_argument);
    p = baseline_params();
    p.L0 = p.L1;
    CHECK_THROWS_AS(p.check_valid(), std::invalid_argument);
    CHECK_NOTHROW(baseline_params().check_valid());
}

TEST_CASE("cost function family: values, derivatives, curvature bounds") {
    const CostFunction aff = CostFunction::affine(0.2, 0.01);
    CHECK(aff.value(5.0) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(aff.deriv(3.0) == doctest::Approx(0.01).epsilon(1e-14));
    CHECK(aff.second_deriv_bound(10.0) == doctest::Approx(0.0));

    const CostFunction ed = CostFunction::exp_decay(0.15, 0.05, 0.3);
    const double h = 1e-6;
    for (double t : {0.0, 2.5, 7.0}) {
        const double num = (ed.value(t + h) - ed.value(t - h)) / (2 * h);
        CHECK(ed.deriv(t) == doctest::Approx(num).epsilon(1e-7));
    }
    CHECK(ed.second_deriv_bound(10.0) >= 0.05 * 0.09 - 1e-15);

    const CostFunction sp =
        CostFunction::spline({0.0, 2.0, 5.0, 10.0}, {0.3, 0.25, 0.28, 0.2});
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(sp.value(sp.knots_t[i]) == doctest::Approx(sp.knots_y[i]).epsilon(1e-12));
    for (double t : {1.0, 3.3, 8.2}) {
        const double num = (sp.value(t + h) - sp.value(t - h)) / (2 * h);
        CHECK(sp.deriv(t) == doctest::Approx(num).epsilon(1e-5));
    }
}

TEST_CASE("C11 norm of the cost schedule") {
    // Constant costs: no derivative contribution.
    CHECK(baseline_costs().q(10.0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("assumption gate on the baseline configuration") {
    const AssumptionReport rep = validate_assumptions(baseline_params(), baseline_costs());
    CHECK(rep.pass);
    for (const auto& c : rep.checks) {
        INFO(c.name);
        CHECK(c.pass);
        CHECK(c.worst_margin > 0.0);
    }
}

TEST_CASE("assumption mutations are rejected by name") {
    SUBCASE("negative growth constant") {
        ModelParams p = baseline_params();
        p.gamma = 0.5;   // gamma1 = 0.75
        p.beta = 0.01;   // K1 < 0
        const AssumptionReport rep = validate_assumptions(p, baseline_costs());
        CHECK_FALSE(rep.pass);
        REQUIRE(rep.find("A4.merton_constant") != nullptr);
        CHECK_FALSE(rep.find("A4.merton_constant")->pass);
        CHECK(rep.find("A1.positivity.phi0")->pass);
    }
    SUBCASE("cost-derivative separation reversed") {
        CostSchedule cs{CostFunction::affine(0.2, 0.1), CostFunction::constant(0.3)};
        const AssumptionReport rep = validate_assumptions(baseline_params(), cs);
        CHECK_FALSE(rep.pass);
        REQUIRE(rep.find("A2i.separation") != nullptr);
        CHECK_FALSE(rep.find("A2i.separation")->pass);
    }
    SUBCASE("entry cost exceeds the income gain") {
        CostSchedule cs{CostFunction::constant(0.2), CostFunction::constant(6.0)};
        const AssumptionReport rep = validate_assumptions(baseline_params(), cs);
        CHECK_FALSE(rep.pass);
        REQUIRE(rep.find("A2ii.initial_gain") != nullptr);
        CHECK_FALSE(rep.find("A2ii.initial_gain")->pass);
        CHECK(rep.find("A2ii.income_bound")->pass);
    }
    SUBCASE("non-positive cost") {
        CostSchedule cs{CostFunction::constant(0.0), CostFunction::constant(0.3)};
        const AssumptionReport rep = validate_assumptions(baseline_params(), cs);
        CHECK_FALSE(rep.pass);
        CHECK_FALSE(rep.find("A1.positivity.phi0")->pass);
        CHECK(rep.find("A1.positivity.phi1")->pass);
    }
}

TEST_CASE("cost crossing time") {
    const ModelParams p = baseline_params();
    // 0.3 = 0.6 (1 - e^{-r(T-t)}) / r has the closed-form root T + ln(0.99)/r.
    const double t1_exact = 10.0 + std::log(0.99) / 0.02;
    auto [t1, tau1] = solve_t1(p, baseline_costs());
    CHECK(t1 == doctest::Approx(t1_exact).epsilon(1e-10));
    CHECK(tau1 == doctest::Approx(10.0 - t1_exact).epsilon(1e-8));

    // Tighter tolerance moves the root by no more than the previous one.
    auto [t1b, tau1b] = solve_t1(p, baseline_costs(), 1e-12);
    CHECK(std::abs(t1b - t1) <= 1e-10 * p.T + 1e-12);

    // A cost above the income-gain envelope never crosses.
    CostSchedule none{CostFunction::constant(0.2), CostFunction::constant(6.0)};
    CHECK_THROWS_AS(solve_t1(p, none), std::runtime_error);
}

TEST_CASE("derived schedule: obstacles, envelopes, boundary data") {
    const DerivedSchedule d(baseline_params(), baseline_costs());
    const ModelParams& p = d.params();

    CHECK(d.psi0(3.0) == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(d.psi1(3.0) == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(d.dpsi0(3.0) == doctest::Approx(0.0));

    // E(T) (tau = T means t = 0) independently assembled.
    const double E0 = 0.6 * (1.0 - std::exp(-0.2)) / 0.02;
    CHECK(d.Ecal(p.T) == doctest::Approx(E0).epsilon(1e-13));
    CHECK(d.Ecal(0.0) == doctest::Approx(0.0));

    CHECK(d.rho0(0.0, 3.0) == doctest::Approx(0.0));
    CHECK(d.rho1(0.0) == doctest::Approx(0.0));
    // Past the crossing time the upper datum saturates at the obstacle.
    CHECK(d.rho1(d.tau1() + 0.5) == doctest::Approx(d.psi1(d.tau1() + 0.5)).epsilon(1e-14));
    // Large half-width: the lower envelope drops fast, so the datum sits on
    // -psi0 beyond a short initial interval.
    for (double tau = 0.2; tau <= p.T; tau += 0.5)
        CHECK(d.rho0(tau, 12.0) == doctest::Approx(-d.psi0(tau)).epsilon(1e-14));

    // Wealth floors.
    CHECK(d.wealth_floor(0) == doctest::Approx(-(1.0 / 0.02) * (1.0 - std::exp(-0.2)))
                                   .epsilon(1e-13));
    CHECK(d.wealth_floor(1) ==
          doctest::Approx(-(0.4 / 0.02) * (1.0 - std::exp(-0.2)) + 0.3).epsilon(1e-13));
}

TEST_CASE("localization curves are level sets of the source") {
    const DerivedSchedule d(baseline_params(), baseline_costs());
    const ModelParams& p = d.params();
    for (double tau : {1.0, 5.0, 9.0}) {
        const double g0 = d.Gamma0(tau);
        CHECK(source_U(p, g0) ==
              doctest::Approx(-d.dpsi0(tau) - p.r * d.psi0(tau)).epsilon(1e-12));
        if (tau >= d.tau1()) {
            const double g1 = d.Gamma1(tau);
            CHECK(source_U(p, g1) ==
                  doctest::Approx(d.dpsi1(tau) + p.r * d.psi1(tau)).epsilon(1e-12));
            CHECK(g1 > g0);
            CHECK(d.M0(tau) < d.M(tau));
            CHECK(d.M(tau) < d.M1(tau));
        }
    }
    // Constant costs: the curves are constant in tau to machine precision.
    CHECK(d.Gamma0(1.0) == doctest::Approx(d.Gamma0(9.0)).epsilon(1e-15));
    CHECK(d.Gamma1(d.tau1() + 0.1) == doctest::Approx(d.Gamma1(9.5)).epsilon(1e-15));
}

TEST_CASE("source terms and the dual utility") {
    const ModelParams p = baseline_params();
    // U is increasing, and equals the difference of the per-job sources.
    CHECK(source_U(p, 0.0) < source_U(p, 1.0));
    for (double x : {-2.0, 0.0, 1.5})
        CHECK(source_U(p, x) ==
              doctest::Approx(source_u_job(p, 0, x) - source_u_job(p, 1, x)).epsilon(1e-12));

    // Closed-form post-retirement value and its derivative.
    for (double y : {0.5, 1.0, 2.0}) {
        CHECK(merton_JR(p, y) == doctest::Approx(dual_utility(p, -1, y) / p.K1()).epsilon(1e-14));
        const double h = 1e-6 * y;
        const double num = (merton_JR(p, y + h) - merton_JR(p, y - h)) / (2 * h);
        CHECK(merton_JR_prime(p, y) == doctest::Approx(num).epsilon(1e-8));
    }
}

TEST_CASE("time-varying schedule keeps the assumption gate green") {
    const AssumptionReport rep = validate_assumptions(baseline_params(), decaying_costs());
    CHECK(rep.pass);
    const DerivedSchedule d(baseline_params(), decaying_costs());
    CHECK(d.tau1() > 0.0);
    CHECK(d.tau1() < baseline_params().T);
}
