#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace swob {

enum class TimeScheme { ImplicitEuler, CrankNicolson };

/// Uniform (tau, x) grid for the transformed problem.
struct GridSpec {
    double x_min = 0.0;
    double x_max = 0.0;
    std::size_t n_x = 0;    // spatial intervals
    std::size_t n_tau = 0;  // time steps
    double T = 0.0;
    TimeScheme scheme = TimeScheme::ImplicitEuler;

    double dx() const { return (x_max - x_min) / double(n_x); }
    double dtau() const { return T / double(n_tau); }
    double x(std::size_t j) const { return x_min + dx() * double(j); }
    double tau(std::size_t k) const { return dtau() * double(k); }
    std::size_t nodes_x() const { return n_x + 1; }
    std::size_t nodes_tau() const { return n_tau + 1; }

    void check_valid() const {
        if (!(x_min < x_max)) throw std::invalid_argument("GridSpec: x_min < x_max required");
        if (n_x < 64 || n_tau < 64) throw std::invalid_argument("GridSpec: n_x, n_tau >= 64");
        if (!(T > 0.0)) throw std::invalid_argument("GridSpec: T > 0 required");
    }
};

enum class SolveMethod { Penalized, Lcp };

struct SolveStats {
    std::size_t total_iterations = 0;  // Newton iterations or PSOR sweeps
    std::size_t max_step_iterations = 0;
    double worst_residual = 0.0;
    bool converged = true;
    std::string note;
};

/// Value surface on the (tau, x) grid with obstacle-contact flags.
/// Row-major: index(k, j) = k * nodes_x + j.
struct SolutionField {
    GridSpec grid;
    SolveMethod method = SolveMethod::Penalized;
    double contact_tol = 0.0;  // threshold used for the contact flags
    std::vector<double> v;
    std::vector<std::uint8_t> contact_lower, contact_upper;
    SolveStats stats;

    std::size_t idx(std::size_t k, std::size_t j) const { return k * grid.nodes_x() + j; }
    double at(std::size_t k, std::size_t j) const { return v[idx(k, j)]; }
    double max_abs() const {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    }
};

}  // namespace swob
