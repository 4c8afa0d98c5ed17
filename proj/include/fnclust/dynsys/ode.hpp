#pragma once

// Explicit Runge-Kutta integrators sampling the state on a uniform grid.
//
// rk45_adaptive is Dormand-Prince 5(4) with a PI-free step controller and the
// 4th-order continuous extension, so grid samples are interpolated from the
// accepted steps rather than forcing the step size onto the grid.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fnclust/error.hpp"

namespace fnclust::dynsys {

using State = Eigen::VectorXd;

/// dy/dt = f(t, y); writes the derivative into the third argument.
using VectorField = std::function<void(double, const State&, State&)>;

enum class Method { rk4_fixed, rk45_adaptive };

struct IvpOptions {
    Method method = Method::rk45_adaptive;
    /// Near-zero absolute floor: Lotka-Volterra orbits from (10, 5) dip to ~1e-13,
    /// and the error on ln u must stay controlled there.
    double abs_tol = 1e-18;
    double rel_tol = 1e-8;
    /// Fixed-step RK4 takes this many substeps per grid interval.
    int rk4_substeps = 10;
    double blowup = 1e12;
    long max_steps = 2'000'000;
};

/// Dense samples of an IVP solution: times[j] and states.col(j).
struct StateSeries {
    std::vector<double> times;
    Eigen::MatrixXd states;  // dim x grid_size
};

inline std::vector<double> uniform_grid(double t0, double t1, int n) {
    if (n < 2) throw ParameterError("grid needs at least 2 points");
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) g[j] = t0 + (t1 - t0) * static_cast<double>(j) / (n - 1);
    g.back() = t1;
    return g;
}

namespace detail {

inline void check_state(const State& y, double t, double blowup) {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (!std::isfinite(y[i]) || std::abs(y[i]) > blowup)
            throw DivergenceError("state overflow", t);
    }
}

inline StateSeries integrate_rk4(const VectorField& f, const State& u0, const std::vector<double>& grid,
                                 const IvpOptions& opt) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    StateSeries out{grid, Eigen::MatrixXd(u0.size(), n)};
    State y = u0, k1(u0.size()), k2(u0.size()), k3(u0.size()), k4(u0.size()), tmp(u0.size());
    out.states.col(0) = y;
    for (Eigen::Index j = 1; j < n; ++j) {
        const double ta = grid[j - 1];
        const double h = (grid[j] - ta) / opt.rk4_substeps;
        for (int s = 0; s < opt.rk4_substeps; ++s) {
            const double t = ta + s * h;
            f(t, y, k1);
            tmp = y + 0.5 * h * k1;
            f(t + 0.5 * h, tmp, k2);
            tmp = y + 0.5 * h * k2;
            f(t + 0.5 * h, tmp, k3);
            tmp = y + h * k3;
            f(t + h, tmp, k4);
            y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            check_state(y, t + h, opt.blowup);
        }
        out.states.col(j) = y;
    }
    return out;
}

// Dormand-Prince 5(4) tableau.
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                        a76 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                        e6 = 22.0 / 525, e7 = -1.0 / 40;
// Continuous extension (Hairer, Norsett & Wanner, dopri5 contd5).
inline constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                        d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                        d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

inline StateSeries integrate_dopri5(const VectorField& f, const State& u0, const std::vector<double>& grid,
                                    const IvpOptions& opt) {
    const auto dim = u0.size();
    const auto n = static_cast<Eigen::Index>(grid.size());
    StateSeries out{grid, Eigen::MatrixXd(dim, n)};
    out.states.col(0) = u0;

    const double t0 = grid.front(), t1 = grid.back();
    const double span = t1 - t0;
    State y = u0, ynew(dim), tmp(dim);
    State k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim), err(dim);
    State r2(dim), r3(dim), r4(dim), r5(dim);

    auto scaled_norm = [&](const State& a, const State& b, const State& e) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < dim; ++i) {
            const double sc = opt.abs_tol + opt.rel_tol * std::max(std::abs(a[i]), std::abs(b[i]));
            acc += (e[i] / sc) * (e[i] / sc);
        }
        return std::sqrt(acc / static_cast<double>(dim));
    };

    f(t0, y, k1);
    // Initial step from the derivative scale (Hairer's first guess, without the second probe).
    double h;
    {
        State zero = State::Zero(dim);
        const double dn = scaled_norm(y, zero, k1);
        const double yn = scaled_norm(y, zero, y);
        h = (dn < 1e-5 || yn < 1e-5) ? 1e-6 : 0.01 * yn / dn;
        h = std::min(h, 0.1 * span);
    }

    double t = t0;
    Eigen::Index next = 1;
    long steps = 0;
    while (next < n) {
        if (++steps > opt.max_steps) throw DivergenceError("step budget exhausted", t);
        if (h < 1e-14 * std::max(1.0, std::abs(t))) throw DivergenceError("step size underflow", t);
        bool hits_end = false;
        if (t + h >= t1) {
            h = t1 - t;
            hits_end = true;
        }

        tmp = y + h * a21 * k1;
        f(t + c2 * h, tmp, k2);
        tmp = y + h * (a31 * k1 + a32 * k2);
        f(t + c3 * h, tmp, k3);
        tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        f(t + c4 * h, tmp, k4);
        tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        f(t + c5 * h, tmp, k5);
        tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        f(t + h, tmp, k6);
        ynew = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        f(t + h, ynew, k7);
        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        const double en = scaled_norm(y, ynew, err);
        if (!std::isfinite(en)) {
            h *= 0.2;
            continue;
        }
        if (en <= 1.0) {
            check_state(ynew, t + h, opt.blowup);
            const double tnew = hits_end ? t1 : t + h;
            // Dense output coefficients for this step.
            r2 = ynew - y;
            r3 = h * k1 - r2;
            r4 = r2 - h * k7 - r3;
            r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
            while (next < n && grid[next] <= tnew) {
                const double th = (grid[next] - t) / h;
                const double th1 = 1.0 - th;
                out.states.col(next) = y + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
                ++next;
            }
            t = tnew;
            y = ynew;
            k1 = k7;  // FSAL
            const double fac = std::clamp(0.9 * std::pow(std::max(en, 1e-10), -0.2), 0.2, 10.0);
            h *= fac;
        } else {
            h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
        }
    }
    return out;
}

}  // namespace detail

/// Integrates y' = f(t, y) from u0 and samples the state on `grid` (strictly increasing).
inline StateSeries integrate(const VectorField& f, const State& u0, const std::vector<double>& grid,
                             const IvpOptions& opt = {}) {
    if (grid.size() < 2) throw ParameterError("integrate: grid needs at least 2 points");
    for (std::size_t j = 1; j < grid.size(); ++j)
        if (!(grid[j] > grid[j - 1])) throw ParameterError("integrate: grid must be strictly increasing");
    for (Eigen::Index i = 0; i < u0.size(); ++i)
        if (!std::isfinite(u0[i])) throw ParameterError("integrate: non-finite initial state");
    return opt.method == Method::rk4_fixed ? detail::integrate_rk4(f, u0, grid, opt)
                                           : detail::integrate_dopri5(f, u0, grid, opt);
}

/// Uniform-grid convenience overload over [t0, t1].
inline StateSeries integrate(const VectorField& f, const State& u0, double t0, double t1, int grid_size,
                             const IvpOptions& opt = {}) {
    if (!(t1 > t0)) throw ParameterError("integrate: t1 must exceed t0");
    return integrate(f, u0, uniform_grid(t0, t1, grid_size), opt);
}

}  // namespace fnclust::dynsys
