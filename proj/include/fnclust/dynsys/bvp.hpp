#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "fnclust/dynsys/ode.hpp"
#include "fnclust/error.hpp"

namespace fnclust::dynsys {

inline void check_unit_grid(const std::vector<double>& grid, const char* who) {
    if (grid.size() < 2) throw ParameterError(std::string(who) + ": grid needs at least 2 points");
    if (grid.front() != 0.0 || grid.back() != 1.0)
        throw ParameterError(std::string(who) + ": grid must span [0, 1]");
    for (std::size_t j = 1; j < grid.size(); ++j)
        if (!(grid[j] > grid[j - 1])) throw ParameterError(std::string(who) + ": grid must be strictly increasing");
}

/// u'' = -k sin(k pi x), u(0) = u(1) = 0, evaluated in closed form on the grid.
inline std::vector<double> solve_linear_bvp(double k, const std::vector<double>& grid) {
    if (!std::isfinite(k)) throw ParameterError("solve_linear_bvp: non-finite k");
    if (k == 0.0) throw ParameterError("solve_linear_bvp: k must be nonzero");
    check_unit_grid(grid, "solve_linear_bvp");
    constexpr double pi = std::numbers::pi;
    const double scale = k * pi * pi;
    const double end = std::sin(k * pi);
    std::vector<double> u(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double x = grid[j];
        u[j] = std::sin(k * pi * x) / scale - x * end / scale;
    }
    return u;
}

struct BratuOptions {
    int max_iter = 50;
    double tol = 1e-12;
    double ode_tol = 1e-12;
};

/// u'' + lambda e^u = 0, u(0) = u(1) = 0; lower branch by Newton shooting on u'(0).
///
/// The shot u(1; s) is concave in s, so Newton started left of the lower root
/// (at the linearized slope lambda/2) increases monotonically toward it.
inline std::vector<double> solve_bratu(double lambda, const std::vector<double>& grid, const BratuOptions& opt = {}) {
    if (!std::isfinite(lambda) || lambda < 0.0) throw ParameterError("solve_bratu: lambda must be finite and >= 0");
    if (lambda >= 3.51) throw ParameterError("solve_bratu: lambda at or beyond the fold (3.51)");
    check_unit_grid(grid, "solve_bratu");
    if (lambda == 0.0) return std::vector<double>(grid.size(), 0.0);

    IvpOptions ivp;
    ivp.abs_tol = opt.ode_tol;
    ivp.rel_tol = opt.ode_tol;

    // State (u, u', w, w') with w = du/ds.
    const VectorField shot = [lambda](double, const State& y, State& dy) {
        const double e = lambda * std::exp(y[0]);
        dy[0] = y[1];
        dy[1] = -e;
        dy[2] = y[3];
        dy[3] = -e * y[2];
    };
    const std::vector<double> ends{0.0, 1.0};

    double s = 0.5 * lambda;
    double residual = 0.0;
    for (int it = 0; it < opt.max_iter; ++it) {
        State y0(4);
        y0 << 0.0, s, 0.0, 1.0;
        const auto end = integrate(shot, y0, ends, ivp);
        residual = end.states(0, 1);
        const double slope = end.states(2, 1);
        if (std::abs(residual) < opt.tol) {
            const auto sol = integrate(shot, y0, grid, ivp);
            std::vector<double> u(grid.size());
            for (std::size_t j = 0; j < grid.size(); ++j) u[j] = sol.states(0, static_cast<Eigen::Index>(j));
            u.front() = 0.0;
            return u;
        }
        if (!std::isfinite(residual) || !(std::abs(slope) > 1e-300))
            throw SolverError("solve_bratu: degenerate shooting derivative", residual);
        s -= residual / slope;
    }
    throw SolverError("solve_bratu: shooting did not converge in " + std::to_string(opt.max_iter) + " iterations",
                      residual);
}

}  // namespace fnclust::dynsys
