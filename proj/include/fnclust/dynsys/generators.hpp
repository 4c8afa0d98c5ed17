#pragma once

// Seeded generators for the ODE-6 and ODE-4 functional benchmarks.
//
// Every trajectory draws from its own stream keyed by (seed ^ index, attempt),
// so the output does not depend on generation order or thread count.

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fnclust/dynsys/bvp.hpp"
#include "fnclust/dynsys/dataset.hpp"
#include "fnclust/dynsys/ode.hpp"
#include "fnclust/parallel.hpp"
#include "fnclust/random.hpp"

namespace fnclust::dynsys {

inline constexpr int kMaxResamples = 10;

/// Power activation (max{0, z/r})^r, saturated as s_max tanh(. / s_max) above r = 8.
inline double power_activation(double z, int r, double s_max = 10.0) {
    if (r < 1) throw ParameterError("power_activation: r must be >= 1");
    const double base = std::max(0.0, z / r);
    const double v = std::pow(base, r);
    return r > 8 ? s_max * std::tanh(v / s_max) : v;
}

// ---------------------------------------------------------------------------
// ODE-6

enum class Ode6System : int { linear_bvp = 0, bratu = 1, linear_homogeneous = 2, linear_forced = 3,
                              lotka_volterra = 4, van_der_pol = 5 };

inline const char* ode6_name(int c) {
    static constexpr std::array<const char*, 6> names{"linear_bvp", "bratu", "linear_homogeneous",
                                                      "linear_forced", "lotka_volterra", "van_der_pol"};
    return names.at(static_cast<std::size_t>(c));
}

struct LotkaVolterraParams {
    double alpha = 1.5, beta = 1.0, delta = 3.0, gamma = 1.0;
};

inline VectorField lotka_volterra(LotkaVolterraParams p) {
    return [p](double, const State& u, State& du) {
        du[0] = p.alpha * u[0] - p.beta * u[0] * u[1];
        du[1] = p.delta * u[0] * u[1] - p.gamma * u[1];
    };
}

/// (u1, u2)' = M u + forcing(t)
inline VectorField linear_system(Eigen::Matrix2d m, std::function<Eigen::Vector2d(double)> forcing = {}) {
    return [m, forcing](double t, const State& u, State& du) {
        du = m * u;
        if (forcing) du += forcing(t);
    };
}

inline VectorField forced_van_der_pol(double mu, double amp, double omega) {
    return [=](double t, const State& u, State& du) {
        du[0] = u[1];
        du[1] = mu * (1.0 - u[0] * u[0]) * u[1] - u[0] + amp * std::cos(omega * t);
    };
}

struct Ode6Options {
    int grid_size = 101;
    /// Every `test_stride`-th trajectory of each subclass is tagged test.
    int test_stride = 5;
    IvpOptions ivp{};
    int threads = 1;
};

namespace detail {

inline double tertile_draw(Rng& rng, double lo, double hi, int sub) {
    const double w = (hi - lo) / 3.0;
    return uniform(rng, lo + sub * w, lo + (sub + 1) * w);
}

// trace(M) ~ N(0, 2) for M with N(0,1) entries; cuts at its 1/3 and 2/3 quantiles.
inline constexpr double kTraceCut = 0.6091377;

inline int trace_tertile(double tr) { return tr < -kTraceCut ? 0 : (tr < kTraceCut ? 1 : 2); }

inline int perturbation_tertile(double norm) { return std::min(2, static_cast<int>(norm / 0.1)); }

inline Trajectory ode6_attempt(int cls, int sub, Rng& rng, const Ode6Options& opt) {
    Trajectory tr;
    tr.class_label = cls;
    tr.subclass_label = sub;
    const State u11 = (State(2) << 1.0, 1.0).finished();
    auto take_first = [&](const StateSeries& s) {
        tr.times = s.times;
        tr.values.assign(s.states.row(0).begin(), s.states.row(0).end());
    };

    switch (static_cast<Ode6System>(cls)) {
    case Ode6System::linear_bvp: {
        const double k = tertile_draw(rng, 0.5, 5.5, sub);
        tr.params["k"] = k;
        tr.times = uniform_grid(0.0, 1.0, opt.grid_size);
        tr.values = solve_linear_bvp(k, tr.times);
        break;
    }
    case Ode6System::bratu: {
        const double lambda = tertile_draw(rng, 0.0, 3.5, sub);
        tr.params["lambda"] = lambda;
        tr.times = uniform_grid(0.0, 1.0, opt.grid_size);
        tr.values = solve_bratu(lambda, tr.times);
        break;
    }
    case Ode6System::linear_homogeneous: {
        Eigen::Matrix2d m;
        do {
            m << normal(rng), normal(rng), normal(rng), normal(rng);
        } while (trace_tertile(m.trace()) != sub);
        tr.params = {{"a", m(0, 0)}, {"b", m(0, 1)}, {"c", m(1, 0)}, {"d", m(1, 1)}, {"trace", m.trace()}};
        take_first(integrate(linear_system(m), u11, 0.0, 10.0, opt.grid_size, opt.ivp));
        break;
    }
    case Ode6System::linear_forced: {
        Eigen::Matrix2d m;
        const double a = uniform(rng, -0.5, -0.1), d = uniform(rng, -0.5, -0.1);
        const double b = uniform(rng, -1.0, 1.0), c = uniform(rng, -1.0, 1.0);
        const double omega = tertile_draw(rng, 0.1, 2.1, sub);
        m << a, b, c, d;
        tr.params = {{"a", a}, {"b", b}, {"c", c}, {"d", d}, {"omega", omega}};
        auto forcing = [omega](double t) { return Eigen::Vector2d(std::sin(omega * t), std::cos(omega * t)); };
        take_first(integrate(linear_system(m, forcing), u11, 0.0, 10.0, opt.grid_size, opt.ivp));
        break;
    }
    case Ode6System::lotka_volterra: {
        std::array<double, 4> eps{};
        double norm = 0.0;
        do {
            for (auto& e : eps) e = uniform(rng, -0.15, 0.15);
            norm = std::sqrt(eps[0] * eps[0] + eps[1] * eps[1] + eps[2] * eps[2] + eps[3] * eps[3]);
        } while (perturbation_tertile(norm) != sub);
        LotkaVolterraParams p;
        p.alpha *= 1.0 + eps[0];
        p.beta *= 1.0 + eps[1];
        p.delta *= 1.0 + eps[2];
        p.gamma *= 1.0 + eps[3];
        tr.params = {{"alpha", p.alpha}, {"beta", p.beta}, {"delta", p.delta}, {"gamma", p.gamma},
                     {"eps_0", eps[0]}, {"eps_1", eps[1]}, {"eps_2", eps[2]}, {"eps_3", eps[3]},
                     {"eps_norm", norm}};
        const State u0 = (State(2) << 10.0, 5.0).finished();
        take_first(integrate(lotka_volterra(p), u0, 0.0, 25.0, opt.grid_size, opt.ivp));
        break;
    }
    case Ode6System::van_der_pol: {
        const double mu = tertile_draw(rng, 0.1, 2.1, sub);
        const double amp = uniform(rng, 0.1, 1.1);
        const double omega = uniform(rng, 0.5, 2.5);
        tr.params = {{"mu", mu}, {"A", amp}, {"omega", omega}};
        const State u0 = (State(2) << 1.0, 0.0).finished();
        take_first(integrate(forced_van_der_pol(mu, amp, omega), u0, 0.0, 50.0, opt.grid_size, opt.ivp));
        break;
    }
    }
    return tr;
}

template <class Attempt>
Trajectory with_resampling(std::uint64_t traj_seed, Attempt&& attempt) {
    for (int a = 0; a <= kMaxResamples; ++a) {
        auto rng = make_rng(traj_seed, {static_cast<std::uint64_t>(a)});
        try {
            auto tr = attempt(rng);
            tr.seed = traj_seed;
            tr.params["resamples"] = a;
            validate(tr);
            return tr;
        } catch (const DivergenceError&) {
        } catch (const SolverError&) {
        }
    }
    throw Error("trajectory seed " + std::to_string(traj_seed) + " diverged after " +
                std::to_string(kMaxResamples) + " resamples");
}

}  // namespace detail

/// One ODE-6 trajectory; `index` is its position in the dataset.
inline Trajectory gen_ode6_trajectory(int cls, int sub, std::uint64_t index, std::uint64_t seed,
                                      const Ode6Options& opt = {}) {
    auto tr = detail::with_resampling(seed ^ index, [&](Rng& rng) { return detail::ode6_attempt(cls, sub, rng, opt); });
    tr.id = index;
    return tr;
}

/// 6 systems x 3 parameter tertiles x n_per_subclass trajectories.
inline Dataset gen_ode6(int n_per_subclass, std::uint64_t seed, const Ode6Options& opt = {}) {
    if (n_per_subclass < 1) throw ParameterError("gen_ode6: n_per_subclass must be >= 1");
    const std::size_t n = static_cast<std::size_t>(n_per_subclass);
    Dataset ds;
    ds.name = "ode6";
    ds.grid_size = opt.grid_size;
    ds.args = {{"n_per_subclass", std::to_string(n_per_subclass)}, {"seed", std::to_string(seed)},
               {"grid_size", std::to_string(opt.grid_size)}};
    ds.trajectories.resize(18 * n);
    parallel_for(ds.trajectories.size(), opt.threads, [&](std::size_t i) {
        const int group = static_cast<int>(i / n);
        auto tr = gen_ode6_trajectory(group / 3, group % 3, i, seed, opt);
        const auto j = static_cast<int>(i % n);
        tr.split = (opt.test_stride > 0 && j % opt.test_stride == opt.test_stride - 1) ? Split::test : Split::train;
        ds.trajectories[i] = std::move(tr);
    });
    return ds;
}

// ---------------------------------------------------------------------------
// ODE-4

enum class Ode4Class : int { first_homogeneous = 0, first_forced = 1, second_homogeneous = 2, second_forced = 3 };

struct Ode4Options {
    int grid_size = 101;
    double t_end = 50.0;
    int state_dim = 2;
    /// Weight range scale s(r) = s_base + s_slope * r.
    double s_base = 1.0;
    double s_slope = 0.1;
    double saturation = 10.0;
    /// First-order damping lambda.
    double damping = 0.05;
    /// Adaptive damping gamma(u, u') = gamma0 + gamma_slope * |V(u)|.
    double gamma0 = 0.1;
    double gamma_slope = 0.5;
    int test_stride = 5;
    IvpOptions ivp{};
    int threads = 1;
};

/// V(u) = A sigma_r(B u + c).
struct NeuralField {
    Eigen::MatrixXd A;  // d x W
    Eigen::MatrixXd B;  // W x d
    Eigen::VectorXd c;  // W
    int r = 1;
    double saturation = 10.0;

    Eigen::VectorXd operator()(const Eigen::VectorXd& u) const {
        Eigen::VectorXd z = B * u + c;
        for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = power_activation(z[i], r, saturation);
        return A * z;
    }
};

/// Random mixture of sinusoid, polynomial, exponential-decay and Gaussian bumps.
struct Forcing {
    enum class Kind : int { sinusoid = 0, polynomial = 1, decay = 2, gaussian = 3 };
    struct Term {
        Kind kind;
        double amp, p1, p2;
    };
    std::vector<std::vector<Term>> components;  // one mixture per state coordinate
    double t_end = 50.0;

    static Forcing sample(Rng& rng, int dim, double t_end) {
        Forcing f;
        f.t_end = t_end;
        f.components.resize(static_cast<std::size_t>(dim));
        for (auto& mix : f.components) {
            const int terms = std::uniform_int_distribution<int>(1, 3)(rng);
            for (int k = 0; k < terms; ++k) {
                Term t{};
                t.kind = static_cast<Kind>(std::uniform_int_distribution<int>(0, 3)(rng));
                t.amp = uniform(rng, 0.1, 1.0) * (uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0);
                switch (t.kind) {
                case Kind::sinusoid:
                    t.p1 = uniform(rng, 0.1, 2.0);
                    t.p2 = uniform(rng, 0.0, 2.0 * std::numbers::pi);
                    break;
                case Kind::polynomial:
                    t.p1 = std::uniform_int_distribution<int>(1, 3)(rng);
                    t.p2 = 0.0;
                    break;
                case Kind::decay:
                    t.p1 = uniform(rng, 0.05, 0.5);
                    t.p2 = 0.0;
                    break;
                case Kind::gaussian:
                    t.p1 = uniform(rng, 0.0, 50.0);
                    t.p2 = uniform(rng, 1.0, 10.0);
                    break;
                }
                mix.push_back(t);
            }
        }
        return f;
    }

    Eigen::VectorXd operator()(double t) const {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(components.size()));
        for (std::size_t i = 0; i < components.size(); ++i) {
            double acc = 0.0;
            for (const auto& term : components[i]) {
                switch (term.kind) {
                case Kind::sinusoid: acc += term.amp * std::sin(term.p1 * t + term.p2); break;
                case Kind::polynomial: acc += term.amp * std::pow(t / t_end, term.p1); break;
                case Kind::decay: acc += term.amp * std::exp(-term.p1 * t); break;
                case Kind::gaussian: {
                    const double z = (t - term.p1) / term.p2;
                    acc += term.amp * std::exp(-0.5 * z * z);
                    break;
                }
                }
            }
            out[static_cast<Eigen::Index>(i)] = acc;
        }
        return out;
    }

    void record(std::map<std::string, double>& params, const std::string& prefix) const {
        for (std::size_t i = 0; i < components.size(); ++i)
            for (std::size_t k = 0; k < components[i].size(); ++k) {
                const auto& t = components[i][k];
                const std::string key = prefix + "[" + std::to_string(i) + "][" + std::to_string(k) + "].";
                params[key + "kind"] = static_cast<int>(t.kind);
                params[key + "amp"] = t.amp;
                params[key + "p1"] = t.p1;
                params[key + "p2"] = t.p2;
            }
    }
};

namespace detail {

inline Trajectory ode4_attempt(int cls, int r, int width, Rng& rng, const Ode4Options& opt) {
    const int d = opt.state_dim;
    const double s = opt.s_base + opt.s_slope * r;
    const double bound = s / std::sqrt(static_cast<double>(width));
    auto draw = [&](Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = uniform(rng, -bound, bound);
        return m;
    };
    NeuralField field;
    field.A = draw(d, width);
    field.B = draw(width, d);
    field.c = draw(width, 1);
    field.r = r;
    field.saturation = opt.saturation;

    Eigen::VectorXd u0(d);
    for (int i = 0; i < d; ++i) u0[i] = uniform(rng, -1.0, 1.0);

    Trajectory tr;
    tr.class_label = cls;
    tr.subclass_label = r;
    tr.params["r"] = r;
    tr.params["s"] = s;
    tr.params["width"] = width;
    for (Eigen::Index i = 0; i < field.A.rows(); ++i)
        for (Eigen::Index j = 0; j < field.A.cols(); ++j)
            tr.params["A[" + std::to_string(i) + "][" + std::to_string(j) + "]"] = field.A(i, j);
    for (Eigen::Index i = 0; i < field.B.rows(); ++i) {
        for (Eigen::Index j = 0; j < field.B.cols(); ++j)
            tr.params["B[" + std::to_string(i) + "][" + std::to_string(j) + "]"] = field.B(i, j);
        tr.params["c[" + std::to_string(i) + "]"] = field.c[i];
    }
    for (int i = 0; i < d; ++i) tr.params["u0[" + std::to_string(i) + "]"] = u0[i];

    const bool forced = cls == static_cast<int>(Ode4Class::first_forced) ||
                        cls == static_cast<int>(Ode4Class::second_forced);
    Forcing forcing;
    if (forced) {
        forcing = Forcing::sample(rng, d, opt.t_end);
        forcing.record(tr.params, cls == static_cast<int>(Ode4Class::first_forced) ? "f" : "F");
    }

    VectorField rhs;
    State y0;
    if (cls <= static_cast<int>(Ode4Class::first_forced)) {
        y0 = u0;
        const double lambda = opt.damping;
        rhs = [field, forcing, forced, lambda](double t, const State& u, State& du) {
            du = field(u);
            if (forced) du += forcing(t) - lambda * u;
        };
    } else {
        y0 = Eigen::VectorXd::Zero(2 * d);
        y0.head(d) = u0;
        const double g0 = opt.gamma0, gs = opt.gamma_slope;
        rhs = [field, forcing, forced, d, g0, gs](double t, const State& y, State& dy) {
            const auto u = y.head(d);
            const auto v = y.tail(d);
            const Eigen::VectorXd vf = field(u);
            const double gamma = g0 + gs * vf.norm();
            dy.head(d) = v;
            dy.tail(d) = -vf - gamma * v;
            if (forced) dy.tail(d) += forcing(t);
        };
    }
    const auto sol = integrate(rhs, y0, 0.0, opt.t_end, opt.grid_size, opt.ivp);
    tr.times = sol.times;
    tr.values.assign(sol.states.row(0).begin(), sol.states.row(0).end());
    return tr;
}

}  // namespace detail

/// One ODE-4 trajectory of class `cls` at complexity level r (1-based).
inline Trajectory gen_ode4_trajectory(int cls, int r, int width, std::uint64_t index, std::uint64_t seed,
                                      const Ode4Options& opt = {}) {
    auto tr = detail::with_resampling(seed ^ index,
                                      [&](Rng& rng) { return detail::ode4_attempt(cls, r, width, rng, opt); });
    tr.id = index;
    return tr;
}

/// 4 neural-ODE classes x `levels` complexity orders x n_per_level trajectories.
inline Dataset gen_ode4(int n_per_level, int levels, int width, std::uint64_t seed, const Ode4Options& opt = {}) {
    if (n_per_level < 1) throw ParameterError("gen_ode4: n_per_level must be >= 1");
    if (levels < 1) throw ParameterError("gen_ode4: levels must be >= 1");
    if (width < 1) throw ParameterError("gen_ode4: width must be >= 1");
    const std::size_t n = static_cast<std::size_t>(n_per_level);
    Dataset ds;
    ds.name = "ode4";
    ds.grid_size = opt.grid_size;
    ds.args = {{"n_per_level", std::to_string(n_per_level)}, {"levels", std::to_string(levels)},
               {"width", std::to_string(width)}, {"seed", std::to_string(seed)},
               {"grid_size", std::to_string(opt.grid_size)}, {"state_dim", std::to_string(opt.state_dim)}};
    ds.trajectories.resize(4 * static_cast<std::size_t>(levels) * n);
    parallel_for(ds.trajectories.size(), opt.threads, [&](std::size_t i) {
        const auto group = static_cast<int>(i / n);
        auto tr = gen_ode4_trajectory(group / levels, group % levels + 1, width, i, seed, opt);
        const auto j = static_cast<int>(i % n);
        tr.split = (opt.test_stride > 0 && j % opt.test_stride == opt.test_stride - 1) ? Split::test : Split::train;
        ds.trajectories[i] = std::move(tr);
    });
    return ds;
}

}  // namespace fnclust::dynsys
