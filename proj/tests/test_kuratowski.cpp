#include <cmath>

#include <gtest/gtest.h>

#include "fnclust/kuratowski.hpp"
#include "oracles.hpp"

using namespace fnclust;
using namespace fnclust::kuratowski;

namespace {

KernelSpace random_space(Rng& rng, int m, KernelKind kind) {
    Eigen::MatrixXd pts(m, 2);
    for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = uniform(rng, 0.0, 3.0);
    return make_space(pts, kind, 1.0);
}

Eigen::VectorXd random_vector(Rng& rng, Eigen::Index n, double sd = 1.0) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng, 0.0, sd);
    return v;
}

}  // namespace

TEST(KernelSpace, GramIsSymmetricPsdWithUnitDiagonal) {
    auto rng = make_rng(1);
    for (auto kind : {KernelKind::gaussian, KernelKind::laplacian}) {
        const auto s = random_space(rng, 9, kind);
        EXPECT_TRUE(s.gram.isApprox(s.gram.transpose(), 0.0));
        EXPECT_EQ(s.gram.diagonal().minCoeff(), 1.0);
        EXPECT_GE(oracle::psd_eigen_range(s.gram).first, -1e-10);
    }
    EXPECT_THROW(make_space(Eigen::MatrixXd(0, 2), KernelKind::gaussian, 1.0), ParameterError);
    EXPECT_THROW(make_space(Eigen::MatrixXd::Zero(2, 2), KernelKind::gaussian, 0.0), ParameterError);
    EXPECT_EQ(parse_kernel("laplacian"), KernelKind::laplacian);
    EXPECT_THROW(parse_kernel("cosine"), ParameterError);
}

TEST(RkhsNorm, ClosedFormsAndHomogeneity) {
    const auto single = make_space(Eigen::MatrixXd::Zero(1, 2), KernelKind::gaussian, 1.0);
    EXPECT_EQ(rkhs_norm(Eigen::VectorXd::Constant(1, 2.0), single), 2.0);
    auto rng = make_rng(2);
    for (auto kind : {KernelKind::gaussian, KernelKind::laplacian}) {
        const auto s = random_space(rng, 6, kind);
        EXPECT_EQ(rkhs_norm(Eigen::VectorXd::Zero(6), s), 0.0);
        for (int t = 0; t < 20; ++t) {
            const Eigen::VectorXd a = random_vector(rng, 6);
            const double c = normal(rng, 0.0, 3.0);
            EXPECT_NEAR(rkhs_norm(c * a, s), std::abs(c) * rkhs_norm(a, s), 1e-12 * (1 + std::abs(c)));
            const double q = oracle::kernel_form(s.points, kind == KernelKind::gaussian, 1.0, a, a);
            EXPECT_NEAR(rkhs_norm(a, s), std::sqrt(q), 1e-12);
        }
    }
    EXPECT_THROW(rkhs_norm(Eigen::VectorXd::Zero(2), single), ParameterError);
}

TEST(FrameBounds, WithinEigenvalueBracket) {
    const auto r = oracle::frame_bound_sweep(10, 31);
    EXPECT_EQ(r.cases, 20);
    EXPECT_LE(r.worst_violation, 1e-9);
}

TEST(FrameBounds, SinglePointAndOrthonormalCases) {
    const auto single = make_space(Eigen::MatrixXd::Zero(1, 3), KernelKind::laplacian, 2.0);
    const auto a = estimate_frame_bounds(single, 100, 0);
    EXPECT_NEAR(a.c_low, 1.0, 1e-15);
    EXPECT_NEAR(a.c_high, 1.0, 1e-15);

    // Far-apart points: the Gram matrix is the identity to double precision.
    Eigen::MatrixXd pts(3, 1);
    pts << 0.0, 100.0, 200.0;
    const auto ortho = estimate_frame_bounds(make_space(pts, KernelKind::gaussian, 1.0), 200, 1);
    EXPECT_NEAR(ortho.c_low, 1.0, 1e-9);
    EXPECT_NEAR(ortho.c_high, 1.0, 1e-9);
    EXPECT_TRUE(ortho.sampling);
    EXPECT_THROW(estimate_frame_bounds(single, 99, 0), ParameterError);
}

TEST(FrameBounds, MergingPointsLoseTheSamplingProperty) {
    Eigen::MatrixXd pts(2, 1);
    pts << 0.0, 1e-7;
    const auto fb = estimate_frame_bounds(make_space(pts, KernelKind::gaussian, 10.0), 500, 2);
    EXPECT_FALSE(fb.sampling);
    EXPECT_LT(fb.c_low, 1e-3);
    EXPECT_GT(fb.c_high, 1.0);
}

TEST(Membership, CentersMidpointsAndSingleCluster) {
    const auto toy = toy_problem();
    const auto& g = toy.geometry;
    for (Eigen::Index k = 0; k < g.k(); ++k) EXPECT_EQ(true_membership(g.centers.row(k).transpose(), g, toy.space), std::vector<int>{static_cast<int>(k)});
    ClusterGeometry two = g;
    two.centers = g.centers.topRows(2);
    const Eigen::VectorXd mid = 0.5 * (two.centers.row(0) + two.centers.row(1)).transpose();
    EXPECT_EQ(true_membership(mid, two, toy.space), (std::vector<int>{0, 1}));
    EXPECT_NEAR(margin(mid, 0, two, toy.space), 0.0, 1e-12);
    ClusterGeometry one = g;
    one.centers = g.centers.topRows(1);
    auto rng = make_rng(3);
    for (int t = 0; t < 10; ++t) EXPECT_EQ(true_membership(random_vector(rng, 2, 5.0), one, toy.space), std::vector<int>{0});
    EXPECT_THROW(margin(mid, 0, one, toy.space), ParameterError);
}

TEST(Membership, EveryProbeBelongsToSomeCluster) {
    const auto toy = toy_problem();
    const Eigen::MatrixXd probes = draw_probes(toy.geometry, 500, 3.0, 4, 0);
    for (Eigen::Index j = 0; j < probes.cols(); ++j) {
        const Eigen::VectorXd h = probes.col(j);
        const auto members = true_membership(h, toy.geometry, toy.space);
        ASSERT_FALSE(members.empty());
        for (Eigen::Index k = 0; k < toy.geometry.k(); ++k) {
            const bool in = std::find(members.begin(), members.end(), k) != members.end();
            EXPECT_EQ(in, margin(h, k, toy.geometry, toy.space) >= -1e-12);
        }
    }
}

TEST(Margin, CenterValueAndLipschitzBound) {
    const auto toy = toy_problem();
    const auto& g = toy.geometry;
    const Eigen::VectorXd f0 = g.centers.row(0).transpose();
    const double nearest = std::min(rkhs_norm((g.centers.row(1) - g.centers.row(0)).transpose(), toy.space),
                                    rkhs_norm((g.centers.row(2) - g.centers.row(0)).transpose(), toy.space));
    EXPECT_NEAR(margin(f0, 0, g, toy.space), nearest, 1e-12);
    auto rng = make_rng(5);
    for (int t = 0; t < 200; ++t) {
        const Eigen::VectorXd h = random_vector(rng, 2, 2.0), h2 = h + random_vector(rng, 2, 0.3);
        const double d = rkhs_norm(h - h2, toy.space);
        for (Eigen::Index k = 0; k < g.k(); ++k)
            EXPECT_LE(std::abs(margin(h, k, g, toy.space) - margin(h2, k, g, toy.space)), 2 * d + 1e-12);
    }
}

TEST(SoftOracle, LimitsComplementAndThresholdEquivalence) {
    const auto toy = toy_problem(0.3);
    const auto& g = toy.geometry;
    const Eigen::VectorXd far = 1000.0 * g.centers.row(0).transpose();
    EXPECT_GT(soft_oracle(far, g, toy.space)(0), 0.99);
    EXPECT_EQ(soft_oracle(far, g, toy.space)(1), 0.3);

    const Eigen::MatrixXd probes = draw_probes(g, 1000, 3.0, 6, 0);
    for (Eigen::Index j = 0; j < probes.cols(); ++j) {
        const Eigen::VectorXd h = probes.col(j);
        const Eigen::VectorXd c = soft_oracle(h, g, toy.space), s = signed_oracle(h, g, toy.space);
        for (Eigen::Index k = 0; k < g.k(); ++k) {
            const double psi = margin(h, k, g, toy.space);
            if (std::abs(psi) <= 1e-9) continue;
            EXPECT_EQ(c(k) > g.gamma, psi > 0);
            EXPECT_EQ(s(k) > g.gamma, psi > 0);
            EXPECT_EQ(s(k) < g.gamma, psi < 0);
            EXPECT_GE(c(k), g.gamma);
            EXPECT_LT(c(k), 1.0);
        }
    }
}

TEST(SoftOracle, DistanceToComplementIsExactAlongASegment) {
    // Walking from f_0 toward f_1, the complement is reached at the bisector (half the gap).
    const auto toy = toy_problem();
    const auto& g = toy.geometry;
    ClusterGeometry two = g;
    two.centers = g.centers.topRows(2);
    const Eigen::VectorXd f0 = two.centers.row(0).transpose(), f1 = two.centers.row(1).transpose();
    const double gap = rkhs_norm(f1 - f0, toy.space);
    for (double t : {0.0, 0.1, 0.25, 0.4}) {
        const Eigen::VectorXd h = f0 + t * (f1 - f0);
        EXPECT_NEAR(signed_boundary_distance(h, 0, two, toy.space), (0.5 - t) * gap, 1e-12);
    }
    EXPECT_NEAR(signed_boundary_distance(f1, 0, two, toy.space), -0.5 * gap, 1e-12);
}

TEST(SoftOracle, MonotoneInDistance) {
    const auto toy = toy_problem();
    const auto& g = toy.geometry;
    const Eigen::VectorXd f0 = g.centers.row(0).transpose();
    double prev = 0.0;
    for (double s : {1.0, 1.5, 2.0, 4.0, 8.0}) {
        const double c = soft_oracle(s * f0, g, toy.space)(0);
        EXPECT_GE(c, prev);
        prev = c;
    }
}

TEST(FprCurve, PerfectAndAllAcceptClassifiers) {
    const auto toy = toy_problem();
    const auto& g = toy.geometry;
    const Eigen::MatrixXd probes = draw_probes(g, 600, 2.0, 7, 1);
    const double eps = 0.05 * min_center_gap(g, toy.space);
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> perfect(g.k(), probes.cols()), all(g.k(), probes.cols());
    all.setConstant(true);
    for (Eigen::Index j = 0; j < probes.cols(); ++j)
        for (Eigen::Index k = 0; k < g.k(); ++k) perfect(k, j) = signed_oracle(probes.col(j), g, toy.space)(k) > g.gamma;
    const auto p = score_membership(perfect, probes, g, toy.space, eps);
    EXPECT_EQ(p.fpr, 0.0);
    EXPECT_EQ(p.fnr, 0.0);

    // Probes placed exactly on the centers: one true cluster each, balanced over K.
    Eigen::MatrixXd on_centers(2, 3 * 20);
    for (int j = 0; j < on_centers.cols(); ++j) on_centers.col(j) = g.centers.row(j % 3).transpose();
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> accept(3, on_centers.cols());
    accept.setConstant(true);
    EXPECT_NEAR(score_membership(accept, on_centers, g, toy.space, eps).fpr, 2.0 / 3.0, 1e-15);
}

TEST(FprCurve, ReproducibleAndWideHeadsAreAccurate) {
    const auto toy = toy_problem();
    FprOptions opt;
    opt.widths = {4, 64};
    opt.epochs = 40;
    opt.n_train = 500;
    opt.n_test = 500;
    opt.seed = 3;
    const auto a = fpr_curve(toy.geometry, toy.space, opt);
    const auto b = fpr_curve(toy.geometry, toy.space, opt, 2);
    ASSERT_EQ(a.size(), 2u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].fpr, b[i].fpr);
        EXPECT_EQ(a[i].train_loss, b[i].train_loss);
        EXPECT_FALSE(a[i].diverged);
        EXPECT_GT(a[i].pairs, 0u);
    }
    EXPECT_LT(a[1].fpr, 0.02);
    opt.widths = {0};
    EXPECT_THROW(fpr_curve(toy.geometry, toy.space, opt), ParameterError);
}
