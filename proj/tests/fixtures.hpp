#pragma once

#include "swob/model.hpp"

// Baseline configuration used across the test suites: two-job consumption/
// investment model with constant switching costs 0.2 / 0.3 on a 10-year
// horizon. Derived values: theta = 0.25, gamma1 = 1.5, K1 ~ 0.0336111.
inline swob::ModelParams baseline_params() {
    swob::ModelParams p;
    p.r = 0.02;
    p.mu = 0.07;
    p.sigma = 0.2;
    p.beta = 0.03;
    p.gamma = 2.0;
    p.alpha = 0.5;
    p.T = 10.0;
    p.eps0 = 1.0;
    p.eps1 = 0.4;
    p.L0 = 0.4;
    p.L1 = 0.7;
    p.Lbar = 1.0;
    return p;
}

inline swob::CostSchedule baseline_costs() {
    return {swob::CostFunction::constant(0.2), swob::CostFunction::constant(0.3)};
}

// Time-varying variant: costs decay toward a floor, respecting positivity
// and the separation inequality.
inline swob::CostSchedule decaying_costs() {
    return {swob::CostFunction::exp_decay(0.15, 0.05, 0.3),
            swob::CostFunction::exp_decay(0.25, 0.05, 0.3)};
}
