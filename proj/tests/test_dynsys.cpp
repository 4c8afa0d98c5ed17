#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>

#include <gtest/gtest.h>

#include "fnclust/dynsys/bvp.hpp"
#include "fnclust/dynsys/dataset_io.hpp"
#include "fnclust/dynsys/generators.hpp"
#include "fnclust/dynsys/ode.hpp"
#include "oracles.hpp"

using namespace fnclust;
using namespace fnclust::dynsys;

namespace {

constexpr double pi = std::numbers::pi;

}  // namespace

TEST(LinearBvp, BoundaryAndMidpointValues) {
    const std::vector<double> grid{0.0, 0.25, 0.5, 1.0};
    const auto u1 = solve_linear_bvp(1.0, grid);
    EXPECT_EQ(u1[0], 0.0);
    EXPECT_NEAR(u1[2], 0.1013211836, 1e-10);
    EXPECT_NEAR(u1[3], 0.0, 1e-15);
    const auto u2 = solve_linear_bvp(2.0, grid);
    EXPECT_NEAR(u2[1], 0.0506605918, 1e-10);
}

TEST(LinearBvp, SatisfiesEquationBySecondDifferences) {
    const auto grid = uniform_grid(0.0, 1.0, 2001);
    for (double k : {0.5, 1.7, 3.3, 5.5}) {
        const auto u = solve_linear_bvp(k, grid);
        const double h = grid[1];
        for (std::size_t j = 1; j + 1 < grid.size(); j += 97) {
            const double upp = (u[j - 1] - 2 * u[j] + u[j + 1]) / (h * h);
            EXPECT_NEAR(upp, -k * std::sin(k * pi * grid[j]), 1e-4);
        }
    }
}

TEST(LinearBvp, RejectsNonFiniteK) {
    EXPECT_THROW(solve_linear_bvp(std::nan(""), uniform_grid(0, 1, 11)), ParameterError);
}

TEST(Bratu, ZeroLambdaIsZero) {
    for (double v : solve_bratu(0.0, uniform_grid(0, 1, 17))) EXPECT_EQ(v, 0.0);
}

TEST(Bratu, MatchesAnalyticSolution) {
    const auto grid = uniform_grid(0.0, 1.0, 101);
    for (double lambda : {0.5, 1.0, 2.0, 3.4}) {
        const auto u = solve_bratu(lambda, grid);
        for (std::size_t j = 0; j < grid.size(); ++j) EXPECT_NEAR(u[j], oracle::bratu_exact(lambda, grid[j]), 1e-6);
    }
}

TEST(Bratu, FourthOrderResidualIsSmall) {
    const auto grid = uniform_grid(0.0, 1.0, 101);
    const double h = grid[1];
    for (double lambda : {0.5, 1.0, 2.0}) {
        const auto u = solve_bratu(lambda, grid);
        double worst = 0.0;
        for (std::size_t j = 2; j + 2 < grid.size(); ++j) {
            const double upp = (-u[j - 2] + 16 * u[j - 1] - 30 * u[j] + 16 * u[j + 1] - u[j + 2]) / (12 * h * h);
            worst = std::max(worst, std::abs(upp + lambda * std::exp(u[j])));
        }
        EXPECT_LE(worst, 1e-6) << "lambda=" << lambda;
    }
}

TEST(Bratu, ExhaustedIterationsReportSolverError) {
    BratuOptions opt;
    opt.max_iter = 1;
    try {
        solve_bratu(3.5, uniform_grid(0, 1, 11), opt);
        FAIL() << "expected SolverError";
    } catch (const SolverError& e) {
        EXPECT_TRUE(std::isfinite(e.residual()));
        EXPECT_GT(std::abs(e.residual()), 0.0);
    }
}

TEST(Ivp, LotkaVolterraEquilibriumStaysPut) {
    const LotkaVolterraParams p;
    const State u0 = (State(2) << p.gamma / p.delta, p.alpha / p.beta).finished();
    for (auto m : {Method::rk45_adaptive, Method::rk4_fixed}) {
        IvpOptions opt;
        opt.method = m;
        const auto s = integrate(lotka_volterra(p), u0, 0.0, 25.0, 101, opt);
        for (Eigen::Index j = 0; j < s.states.cols(); ++j) {
            EXPECT_NEAR(s.states(0, j), u0[0], 1e-9);
            EXPECT_NEAR(s.states(1, j), u0[1], 1e-9);
        }
    }
}

TEST(Ivp, ExponentialDecayMatchesClosedForm) {
    Eigen::Matrix2d m;
    m << -1, 0, 0, -1;
    const State u0 = (State(2) << 1.0, 1.0).finished();
    const auto s = integrate(linear_system(m), u0, 0.0, 10.0, 101);
    double worst = 0.0;
    for (Eigen::Index j = 0; j < s.states.cols(); ++j)
        worst = std::max(worst, std::abs(s.states(0, j) - std::exp(-s.times[static_cast<std::size_t>(j)])));
    EXPECT_LE(worst, 1e-7);

    IvpOptions rk4;
    rk4.method = Method::rk4_fixed;
    const auto f = integrate(linear_system(m), u0, 0.0, 10.0, 101, rk4);
    EXPECT_NEAR(f.states(0, 100), std::exp(-10.0), 1e-9);
}

TEST(Ivp, LotkaVolterraFirstIntegralIsConserved) {
    const LotkaVolterraParams p;
    const State u0 = (State(2) << 10.0, 5.0).finished();
    const auto s = integrate(lotka_volterra(p), u0, 0.0, 25.0, 101);
    const double v0 = oracle::lv_invariant(p, u0[0], u0[1]);
    double drift = 0.0;
    for (Eigen::Index j = 0; j < s.states.cols(); ++j)
        drift = std::max(drift, std::abs(oracle::lv_invariant(p, s.states(0, j), s.states(1, j)) - v0) / std::abs(v0));
    EXPECT_LE(drift, 1e-6);
}

TEST(Ivp, BlowupRaisesDivergenceWithTime) {
    const VectorField f = [](double, const State& u, State& du) { du[0] = u[0] * u[0]; };
    try {
        integrate(f, State::Ones(1), 0.0, 2.0, 11);
        FAIL() << "expected DivergenceError";
    } catch (const DivergenceError& e) {
        EXPECT_GT(e.time(), 0.9);
        EXPECT_LT(e.time(), 1.0 + 1e-6);
    }
}

TEST(Ivp, RejectsBadSpan) {
    const VectorField f = [](double, const State& u, State& du) { du = -u; };
    EXPECT_THROW(integrate(f, State::Ones(1), 1.0, 1.0, 11), ParameterError);
}

TEST(PowerActivation, ClosedForms) {
    EXPECT_EQ(power_activation(-2.0, 1), 0.0);
    EXPECT_EQ(power_activation(3.0, 1), 3.0);
    EXPECT_DOUBLE_EQ(power_activation(3.0, 2), 2.25);
    for (int r = 1; r <= 20; ++r) EXPECT_EQ(power_activation(0.0, r), 0.0);
}

TEST(PowerActivation, ContinuousAndNondecreasing) {
    for (int r = 1; r <= 20; ++r) {
        double prev = power_activation(-50.0, r);
        for (double z = -50.0; z <= 200.0; z += 0.01) {
            const double v = power_activation(z, r);
            ASSERT_GE(v, prev) << "r=" << r << " z=" << z;
            // Local slope is bounded on this range, so consecutive samples stay close.
            ASSERT_LE(v - prev, std::pow(std::max(0.0, z / r), r - 1) * 0.0101 + 1e-9)
                << "r=" << r << " z=" << z;
            prev = v;
        }
    }
}

TEST(Ode6, CountsAndLabels) {
    const auto ds = gen_ode6(1, 3);
    ASSERT_EQ(ds.size(), 18u);
    std::array<int, 6> per_class{};
    for (const auto& t : ds.trajectories) ++per_class[static_cast<std::size_t>(t.class_label)];
    for (int c : per_class) EXPECT_EQ(c, 3);
    EXPECT_NO_THROW(validate(ds));
    EXPECT_EQ(ds.num_classes(), 6);
}

TEST(Ode6, SubclassesAreParameterTertiles) {
    const auto ds = gen_ode6(4, 11);
    for (const auto& t : ds.trajectories) {
        const int s = t.subclass_label;
        switch (t.class_label) {
        case 0: EXPECT_EQ(static_cast<int>((t.params.at("k") - 0.5) / (5.0 / 3)), s); break;
        case 1: EXPECT_EQ(static_cast<int>(t.params.at("lambda") / (3.5 / 3)), s); break;
        case 3: EXPECT_EQ(static_cast<int>((t.params.at("omega") - 0.1) / (2.0 / 3)), s); break;
        case 4: EXPECT_EQ(std::min(2, static_cast<int>(t.params.at("eps_norm") / 0.1)), s); break;
        case 5: EXPECT_EQ(static_cast<int>((t.params.at("mu") - 0.1) / (2.0 / 3)), s); break;
        default:
            break;
        }
    }
}

TEST(Ode6, DeterministicAndOrderIndependent) {
    const auto a = gen_ode6(2, 42);
    Ode6Options threaded;
    threaded.threads = 3;
    const auto b = gen_ode6(2, 42, threaded);
    EXPECT_EQ(encode_dataset(a).data(), encode_dataset(b).data());
    // A single trajectory regenerated in isolation matches its dataset slot.
    const auto lone = gen_ode6_trajectory(2, 1, 15, 42);
    EXPECT_EQ(lone.values, a.trajectories[15].values);
    EXPECT_EQ(lone.seed, 42u ^ 15u);
}

TEST(Ode6, AllTrajectoriesFiniteOnCommonGrid) {
    const auto ds = gen_ode6(6, 5);
    for (const auto& t : ds.trajectories) {
        ASSERT_EQ(t.size(), 101u);
        for (double v : t.values) ASSERT_TRUE(std::isfinite(v));
    }
}

TEST(Ode4, CountsLevelsAndGrid) {
    const auto ds = gen_ode4(1, 3, 16, 9);
    ASSERT_EQ(ds.size(), 12u);
    for (const auto& t : ds.trajectories) {
        EXPECT_EQ(t.size(), 101u);
        EXPECT_DOUBLE_EQ(t.times.back(), 50.0);
        EXPECT_GE(t.subclass_label, 1);
        EXPECT_LE(t.subclass_label, 3);
        EXPECT_EQ(t.params.at("r"), t.subclass_label);
    }
    EXPECT_NO_THROW(validate(ds));
}

TEST(Ode4, DeterministicAndRecordsWeights) {
    const auto a = gen_ode4(2, 2, 8, 1);
    const auto b = gen_ode4(2, 2, 8, 1);
    EXPECT_EQ(encode_dataset(a).data(), encode_dataset(b).data());
    const auto& p = a.trajectories[0].params;
    EXPECT_TRUE(p.contains("A[1][7]"));
    EXPECT_TRUE(p.contains("B[7][1]"));
    EXPECT_TRUE(p.contains("c[7]"));
    // Forced classes record their mixture.
    bool has_forcing = false;
    for (const auto& [k, v] : a.trajectories.back().params) has_forcing |= k.rfind("F[", 0) == 0;
    EXPECT_TRUE(has_forcing);
}

TEST(Ode4, WeightsWithinScaledRange) {
    const auto ds = gen_ode4(1, 4, 32, 2);
    for (const auto& t : ds.trajectories) {
        const double bound = (1.0 + 0.1 * t.params.at("r")) / std::sqrt(32.0);
        for (const auto& [k, v] : t.params) {
            if (k[0] == 'A' || k[0] == 'B' || k[0] == 'c') {
                EXPECT_LE(std::abs(v), bound);
            }
        }
    }
}

TEST(DatasetIo, RoundTripAndCsv) {
    const auto ds = gen_ode6(1, 8);
    const auto dir = std::filesystem::temp_directory_path() / "fnclust_ds_test";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "d.fncds").string();
    save_dataset(ds, path);
    const auto back = load_dataset(path);
    ASSERT_EQ(back.size(), ds.size());
    EXPECT_EQ(back.name, "ode6");
    for (std::size_t i = 0; i < ds.size(); ++i) {
        EXPECT_EQ(back.trajectories[i].values, ds.trajectories[i].values);
        EXPECT_EQ(back.trajectories[i].params, ds.trajectories[i].params);
        EXPECT_EQ(back.trajectories[i].split, ds.trajectories[i].split);
    }
    EXPECT_EQ(encode_dataset(back).data(), encode_dataset(ds).data());

    // Header: 7-byte magic then N, T, C.
    std::ifstream in(path, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    ASSERT_GE(bytes.size(), 19u);
    EXPECT_EQ(std::string(bytes.data(), 6), "FNCDS1");
    EXPECT_EQ(bytes[6], '\0');
    EXPECT_EQ(bytes.size(), 19u + 18u * (16u + 16u * 101u));

    export_dataset_csv(ds, (dir / "d.csv").string());
    std::ifstream csv(dir / "d.csv");
    std::string header;
    std::getline(csv, header);
    EXPECT_EQ(header.rfind("id,class,subclass,v_0,", 0), 0u);
    std::filesystem::remove_all(dir);
}

TEST(DatasetIo, TruncatedFileIsRejected) {
    const auto ds = gen_ode6(1, 8);
    auto bytes = encode_dataset(ds).data();
    bytes.resize(bytes.size() - 3);
    const auto path = (std::filesystem::temp_directory_path() / "fnclust_trunc.fncds").string();
    {
        std::ofstream out(path, std::ios::binary);
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    }
    EXPECT_THROW(load_dataset(path), FormatError);
    std::filesystem::remove(path);
}
