#pragma once

// Finite-dimensional RKHS geometry: kernel spaces over sampling points, frame bounds,
// nearest-center clusters, margins, soft classifiers and false-positive-rate curves.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fnclust/clusterhead/mlp.hpp"
#include "fnclust/clusterhead/train.hpp"
#include "fnclust/error.hpp"
#include "fnclust/parallel.hpp"
#include "fnclust/random.hpp"

namespace fnclust::kuratowski {

enum class KernelKind { gaussian, laplacian };

inline const char* kernel_name(KernelKind k) { return k == KernelKind::gaussian ? "gaussian" : "laplacian"; }

inline KernelKind parse_kernel(const std::string& s) {
    if (s == "gaussian") return KernelKind::gaussian;
    if (s == "laplacian") return KernelKind::laplacian;
    throw ParameterError("unknown kernel '" + s + "' (valid kernels: gaussian, laplacian)");
}

inline double kernel_value(KernelKind kind, double length, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    const double d2 = (x - y).squaredNorm();
    return kind == KernelKind::gaussian ? std::exp(-d2 / (2.0 * length * length)) : std::exp(-std::sqrt(d2) / length);
}

inline constexpr double kGramTol = 1e-10;

/// Span of kernel sections at M sampling points (rows of `points`).
struct KernelSpace {
    Eigen::MatrixXd points;  // M x d
    KernelKind kernel = KernelKind::gaussian;
    double length = 1.0;
    Eigen::MatrixXd gram;  // M x M

    Eigen::Index size() const { return gram.rows(); }

    /// Point evaluations h(x_j) = (G a)_j.
    Eigen::VectorXd evaluate(const Eigen::VectorXd& a) const { return gram * a; }
};

inline KernelSpace make_space(Eigen::MatrixXd points, KernelKind kind, double length) {
    if (points.rows() < 1) throw ParameterError("kernel space needs at least one point");
    if (!(length > 0.0) || !std::isfinite(length)) throw ParameterError("kernel length must be positive");
    KernelSpace s;
    s.kernel = kind;
    s.length = length;
    const Eigen::Index m = points.rows();
    s.gram.resize(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j <= i; ++j)
            s.gram(i, j) = s.gram(j, i) = kernel_value(kind, length, points.row(i).transpose(), points.row(j).transpose());
    s.points = std::move(points);
    const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s.gram, Eigen::EigenvaluesOnly).eigenvalues()(0);
    if (lmin < -kGramTol) throw NumericalError("gram matrix is not positive semidefinite");
    return s;
}

/// Norm of f = sum_i a_i k(., x_i): sqrt(a' G a).
inline double rkhs_norm(const Eigen::VectorXd& a, const KernelSpace& space) {
    if (a.size() != space.size()) throw ParameterError("coefficient vector does not match the kernel space");
    if (!a.allFinite()) throw ParameterError("non-finite coefficients");
    const double q = a.dot(space.gram * a);
    if (q < -kGramTol * std::max(1.0, a.squaredNorm())) throw NumericalError("gram matrix is not positive semidefinite");
    return std::sqrt(std::max(q, 0.0));
}

struct FrameBounds {
    double c_low = 0.0;
    double c_high = 0.0;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    bool sampling = true;  // false when the Gram matrix is numerically singular
};

/// Empirical frame constants: extremes of ||(G a)||_2 / ||f|| over random probes a ~ N(0, I).
/// A numerically singular Gram matrix clears `sampling` and reports c_low = sqrt(lambda_min).
inline FrameBounds estimate_frame_bounds(const KernelSpace& space, int n_probes, std::uint64_t seed) {
    if (n_probes < 100) throw ParameterError("frame bounds need at least 100 probes");
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(space.gram, Eigen::EigenvaluesOnly).eigenvalues();
    FrameBounds fb;
    fb.lambda_min = ev(0);
    fb.lambda_max = ev(ev.size() - 1);
    fb.sampling = fb.lambda_min >= 1e-12;
    fb.c_low = std::numeric_limits<double>::infinity();
    auto rng = make_rng(seed, {0xf4a3e});
    Eigen::VectorXd a(space.size());
    for (int p = 0; p < n_probes; ++p) {
        for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = normal(rng);
        const double norm = rkhs_norm(a, space);
        if (!(norm > 0.0)) continue;
        const double r = space.evaluate(a).norm() / norm;
        fb.c_low = std::min(fb.c_low, r);
        fb.c_high = std::max(fb.c_high, r);
    }
    if (!std::isfinite(fb.c_low)) fb.c_low = 0.0;
    // Random probes rarely hit the near-null direction of a singular Gram matrix.
    if (!fb.sampling) fb.c_low = std::sqrt(std::max(fb.lambda_min, 0.0));
    return fb;
}

/// Cluster centers f_k as coefficient rows in the kernel basis, with threshold gamma.
struct ClusterGeometry {
    Eigen::MatrixXd centers;  // K x M
    double gamma = 0.5;

    Eigen::Index k() const { return centers.rows(); }
};

inline double min_center_gap(const ClusterGeometry& g, const KernelSpace& space) {
    double gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < g.k(); ++i)
        for (Eigen::Index j = i + 1; j < g.k(); ++j)
            gap = std::min(gap, rkhs_norm((g.centers.row(i) - g.centers.row(j)).transpose(), space));
    return gap;
}

inline void validate(const ClusterGeometry& g, const KernelSpace& space) {
    if (g.k() < 1) throw ParameterError("geometry needs at least one center");
    if (g.centers.cols() != space.size()) throw ParameterError("centers do not match the kernel space");
    if (!(g.gamma > 0.0 && g.gamma < 1.0)) throw ParameterError("gamma must lie in (0, 1)");
    if (g.k() > 1 && min_center_gap(g, space) < 1e-6) throw ParameterError("cluster centers are not distinct");
}

/// RKHS distances from h to every center.
inline Eigen::VectorXd center_distances(const Eigen::VectorXd& h, const ClusterGeometry& g, const KernelSpace& space) {
    Eigen::VectorXd d(g.k());
    for (Eigen::Index i = 0; i < g.k(); ++i) d(i) = rkhs_norm(h - g.centers.row(i).transpose(), space);
    return d;
}

/// Psi_k(h) = min_{i != k} ||h - f_i|| - ||h - f_k||.
inline double margin(const Eigen::VectorXd& h, Eigen::Index k, const ClusterGeometry& g, const KernelSpace& space) {
    if (g.k() < 2) throw ParameterError("margin needs at least two centers");
    if (k < 0 || k >= g.k()) throw ParameterError("cluster index out of range");
    const Eigen::VectorXd d = center_distances(h, g, space);
    double other = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < g.k(); ++i)
        if (i != k) other = std::min(other, d(i));
    return other - d(k);
}

/// Relative slack under which two center distances count as tied.
inline constexpr double kTieTol = 1e-12;

/// Nearest-center clusters containing h (ties give several).
inline std::vector<int> true_membership(const Eigen::VectorXd& h, const ClusterGeometry& g, const KernelSpace& space) {
    const Eigen::VectorXd d = center_distances(h, g, space);
    const double best = d.minCoeff();
    std::vector<int> out;
    for (Eigen::Index i = 0; i < g.k(); ++i)
        if (d(i) <= best + kTieTol * std::max(1.0, best)) out.push_back(static_cast<int>(i));
    return out;
}

/// Signed distance from h to the boundary of C_k: for h in C_k it is the exact distance to
/// the complement, min over i != k of the distance to the bisecting hyperplane
/// (||h-f_i||^2 - ||h-f_k||^2) / (2 ||f_i - f_k||); outside C_k it is minus the largest
/// hyperplane violation.
inline double signed_boundary_distance(const Eigen::VectorXd& h, Eigen::Index k, const ClusterGeometry& g,
                                       const KernelSpace& space) {
    if (g.k() < 2) return std::numeric_limits<double>::infinity();
    const Eigen::VectorXd d = center_distances(h, g, space);
    double out = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < g.k(); ++i) {
        if (i == k) continue;
        const double gap = rkhs_norm((g.centers.row(i) - g.centers.row(k)).transpose(), space);
        out = std::min(out, (d(i) * d(i) - d(k) * d(k)) / (2.0 * gap));
    }
    return out;
}

/// c_k(h) = gamma + (1 - gamma) x / (1 + x) with x the distance from h to the complement of C_k.
inline Eigen::VectorXd soft_oracle(const Eigen::VectorXd& h, const ClusterGeometry& g, const KernelSpace& space) {
    Eigen::VectorXd c(g.k());
    for (Eigen::Index k = 0; k < g.k(); ++k) {
        const double x = std::max(signed_boundary_distance(h, k, g, space), 0.0);
        c(k) = std::isinf(x) ? 1.0 : g.gamma + (1.0 - g.gamma) * x / (1.0 + x);
    }
    return c;
}

/// Continuous extension of c_k below gamma on the complement: gamma (1 - y / (1 + y)) with y
/// the hyperplane violation, so thresholding at gamma separates both sides strictly.
inline Eigen::VectorXd signed_oracle(const Eigen::VectorXd& h, const ClusterGeometry& g, const KernelSpace& space) {
    Eigen::VectorXd c(g.k());
    for (Eigen::Index k = 0; k < g.k(); ++k) {
        const double s = signed_boundary_distance(h, k, g, space);
        if (std::isinf(s)) {
            c(k) = 1.0;
        } else if (s >= 0.0) {
            c(k) = g.gamma + (1.0 - g.gamma) * s / (1.0 + s);
        } else {
            c(k) = g.gamma * (1.0 - (-s) / (1.0 - s));
        }
    }
    return c;
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

// ---------------------------------------------------------------------------
// False-positive-rate curves

struct FprOptions {
    std::vector<int> widths{8, 32, 128};
    int epochs = 200;
    int batch_size = 128;
    double lr0 = 3e-3;
    int hidden_layers = 2;
    double margin_eps = 0.0;  // <= 0 selects 0.05 * min center gap
    int n_train = 2000;
    int n_test = 2000;
    double probe_radius = 2.0;  // probes ~ U[-r, r]^M around the center mean
    std::uint64_t seed = 0;
};

struct FprPoint {
    int width = 0;
    double fpr = 0.0;
    double fnr = 0.0;
    std::size_t pairs = 0;  // (h, k) pairs with |Psi_k(h)| >= eps
    double train_loss = 0.0;
    bool diverged = false;
};

/// Probe coefficient vectors, one per column.
inline Eigen::MatrixXd draw_probes(const ClusterGeometry& g, int n, double radius, std::uint64_t seed, std::uint64_t stream) {
    const Eigen::VectorXd mid = g.centers.colwise().mean().transpose();
    auto rng = make_rng(seed, {0x9b0be, stream});
    Eigen::MatrixXd p(g.centers.cols(), n);
    for (int j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < p.rows(); ++i) p(i, j) = mid(i) + uniform(rng, -radius, radius);
    return p;
}

/// Counts false positives and negatives of a membership mask (K x N) against true clusters,
/// over pairs whose margin satisfies |Psi_k| >= eps.
template <class Mask>
FprPoint score_membership(const Mask& induced, const Eigen::MatrixXd& probes, const ClusterGeometry& g,
                          const KernelSpace& space, double eps) {
    FprPoint r;
    std::size_t fp = 0, fn = 0, pos = 0;
    for (Eigen::Index j = 0; j < probes.cols(); ++j) {
        const Eigen::VectorXd h = probes.col(j);
        for (Eigen::Index k = 0; k < g.k(); ++k) {
            const double psi = margin(h, k, g, space);
            if (std::abs(psi) < eps) continue;
            ++r.pairs;
            const bool truth = psi >= 0.0, got = induced(k, j);
            if (truth) {
                ++pos;
                fn += !got;
            } else {
                fp += got;
            }
        }
    }
    r.fpr = r.pairs ? static_cast<double>(fp) / static_cast<double>(r.pairs) : 0.0;
    r.fnr = pos ? static_cast<double>(fn) / static_cast<double>(pos) : 0.0;
    return r;
}

/// Regresses an MLP head (inputs: point evaluations of h) onto logit(signed_oracle) for
/// each width, then thresholds sigma(logits) >= gamma on held-out probes.
inline std::vector<FprPoint> fpr_curve(const ClusterGeometry& g, const KernelSpace& space, const FprOptions& opt,
                                       int threads = 1) {
    validate(g, space);
    if (g.k() < 2) throw ParameterError("fpr curve needs at least two centers");
    if (opt.epochs < 1 || opt.batch_size < 1 || opt.n_train < 1 || opt.n_test < 1)
        throw ParameterError("fpr curve: invalid training options");
    const double eps = opt.margin_eps > 0.0 ? opt.margin_eps : 0.05 * min_center_gap(g, space);
    const Eigen::MatrixXd train_h = draw_probes(g, opt.n_train, opt.probe_radius, opt.seed, 0);
    const Eigen::MatrixXd test_h = draw_probes(g, opt.n_test, opt.probe_radius, opt.seed, 1);
    const Eigen::MatrixXd x_train = space.gram * train_h, x_test = space.gram * test_h;
    Eigen::MatrixXd target(g.k(), opt.n_train);
    for (int j = 0; j < opt.n_train; ++j) {
        const Eigen::VectorXd c = signed_oracle(train_h.col(j), g, space);
        for (Eigen::Index k = 0; k < g.k(); ++k) target(k, j) = logit(std::clamp(c(k), 1e-12, 1.0 - 1e-12));
    }
    const double threshold = logit(g.gamma);

    std::vector<FprPoint> out(opt.widths.size());
    parallel_for(opt.widths.size(), threads, [&](std::size_t w) {
        const int width = opt.widths[w];
        if (width < 1) throw ParameterError("fpr curve: widths must be positive");
        std::vector<int> dims{static_cast<int>(space.size())};
        for (int l = 0; l < opt.hidden_layers; ++l) dims.push_back(width);
        dims.push_back(static_cast<int>(g.k()));
        auto net = Mlp<double>::kaiming(dims, derive_seed(opt.seed, {0x4ea1, static_cast<std::uint64_t>(width)}));
        Adam<double> adam(net);
        const std::size_t per_epoch = static_cast<std::size_t>((opt.n_train + opt.batch_size - 1) / opt.batch_size);
        const std::size_t total = per_epoch * static_cast<std::size_t>(opt.epochs);
        std::vector<int> order(static_cast<std::size_t>(opt.n_train));
        FprPoint point;
        point.width = width;
        try {
            for (int epoch = 0; epoch < opt.epochs; ++epoch) {
                std::iota(order.begin(), order.end(), 0);
                auto rng = make_rng(opt.seed, {0x5f1f, static_cast<std::uint64_t>(width), static_cast<std::uint64_t>(epoch)});
                std::shuffle(order.begin(), order.end(), rng);
                double loss = 0.0;
                for (int start = 0; start < opt.n_train; start += opt.batch_size) {
                    const int b = std::min(opt.batch_size, opt.n_train - start);
                    Eigen::MatrixXd xb(x_train.rows(), b), tb(g.k(), b);
                    for (int j = 0; j < b; ++j) {
                        xb.col(j) = x_train.col(order[static_cast<std::size_t>(start + j)]);
                        tb.col(j) = target.col(order[static_cast<std::size_t>(start + j)]);
                    }
                    const auto cache = mlp_forward(net, xb);
                    const Eigen::MatrixXd diff = cache.logits() - tb;
                    loss += diff.squaredNorm();
                    const auto grad = mlp_backward(net, cache, Eigen::MatrixXd(2.0 * diff / static_cast<double>(diff.size())));
                    adam.step(net, grad, cosine_lr(opt.lr0, adam.steps(), total));
                }
                point.train_loss = loss / static_cast<double>(target.size());
                if (!std::isfinite(point.train_loss)) throw NumericalError("non-finite regression loss");
            }
            const Eigen::MatrixXd z = mlp_logits(net, x_test);
            const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> induced = (z.array() >= threshold).matrix();
            const auto scored = score_membership(induced, test_h, g, space, eps);
            point.fpr = scored.fpr;
            point.fnr = scored.fnr;
            point.pairs = scored.pairs;
        } catch (const NumericalError&) {
            point.diverged = true;
            point.fpr = point.fnr = std::numeric_limits<double>::quiet_NaN();
        }
        out[w] = point;
    });
    return out;
}

/// Toy geometry in two sampling points: three well-separated centers, Gaussian kernel.
struct Toy {
    KernelSpace space;
    ClusterGeometry geometry;
};

inline Toy toy_problem(double gamma = 0.5) {
    Eigen::MatrixXd pts(2, 2);
    pts << 0.0, 0.0, 1.0, 0.0;
    Toy t{make_space(pts, KernelKind::gaussian, 1.0), {}};
    t.geometry.centers.resize(3, 2);
    t.geometry.centers << 1.0, 0.0, -0.5, 1.0, -0.5, -1.0;
    t.geometry.gamma = gamma;
    validate(t.geometry, t.space);
    return t;
}

}  // namespace fnclust::kuratowski
