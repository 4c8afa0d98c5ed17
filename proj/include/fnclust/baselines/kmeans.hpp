#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "fnclust/error.hpp"
#include "fnclust/random.hpp"

namespace fnclust {

/// Points are rows of an N x D matrix.
struct KMeansResult {
    Eigen::MatrixXd centers;  // K x D
    std::vector<int> labels;
    double objective = 0.0;
    int iterations = 0;
};

struct KMeansOptions {
    int n_init = 10;
    int max_iter = 300;
    double tol = 1e-8;  // relative objective change
};

/// Nearest-center labels and the summed squared distances.
inline std::pair<std::vector<int>, double> assign_to_centers(const Eigen::MatrixXd& x, const Eigen::MatrixXd& centers) {
    if (x.cols() != centers.cols()) throw ParameterError("kmeans: points and centers differ in dimension");
    std::vector<int> labels(static_cast<std::size_t>(x.rows()));
    const Eigen::VectorXd cn = centers.rowwise().squaredNorm();
    const Eigen::MatrixXd cross = x * centers.transpose();
    double obj = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        int best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < centers.rows(); ++k) {
            const double d = cn(k) - 2.0 * cross(i, k);
            if (d < bd) {
                bd = d;
                best = static_cast<int>(k);
            }
        }
        labels[static_cast<std::size_t>(i)] = best;
        obj += (x.row(i) - centers.row(best)).squaredNorm();
    }
    return {std::move(labels), obj};
}

namespace detail {

inline Eigen::MatrixXd kmeanspp(const Eigen::MatrixXd& x, int k, Rng& rng) {
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd centers(k, x.cols());
    std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
    centers.row(0) = x.row(first(rng));
    Eigen::VectorXd d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = d2.sum();
        Eigen::Index pick = 0;
        if (total > 0.0) {
            double u = uniform(rng, 0.0, total);
            for (pick = 0; pick < n - 1; ++pick) {
                u -= d2(pick);
                if (u < 0.0) break;
            }
            while (d2(pick) == 0.0 && pick > 0) --pick;
        } else {
            pick = first(rng);
        }
        centers.row(c) = x.row(pick);
        d2 = d2.cwiseMin((x.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }
    return centers;
}

inline KMeansResult lloyd_iterate(const Eigen::MatrixXd& x, Eigen::MatrixXd centers, const KMeansOptions& opt) {
    const Eigen::Index n = x.rows(), k = centers.rows();
    KMeansResult r;
    auto [labels, obj] = assign_to_centers(x, centers);
    for (int it = 1; it <= opt.max_iter; ++it) {
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
        Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(labels[static_cast<std::size_t>(i)]) += x.row(i);
            counts(labels[static_cast<std::size_t>(i)]) += 1.0;
        }
        std::vector<char> taken(static_cast<std::size_t>(n), 0);
        for (Eigen::Index c = 0; c < k; ++c) {
            if (counts(c) > 0) {
                centers.row(c) = sums.row(c) / counts(c);
                continue;
            }
            // Empty cluster: move its center onto the point farthest from its current center.
            Eigen::Index far = 0;
            double fd = -1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (taken[static_cast<std::size_t>(i)]) continue;
                const double d = (x.row(i) - centers.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
                if (d > fd) {
                    fd = d;
                    far = i;
                }
            }
            taken[static_cast<std::size_t>(far)] = 1;
            centers.row(c) = x.row(far);
        }
        auto [next_labels, next_obj] = assign_to_centers(x, centers);
        labels = std::move(next_labels);
        const double prev = obj;
        obj = next_obj;
        r.iterations = it;
        if (prev == 0.0 || std::abs(prev - obj) / prev < opt.tol) break;
    }
    r.centers = std::move(centers);
    r.labels = std::move(labels);
    r.objective = obj;
    return r;
}

/// One Hartigan pass: moves single points whenever the exact change in the objective,
/// n_b/(n_b+1)|x-c_b|^2 - n_a/(n_a-1)|x-c_a|^2, is negative. Returns whether any point moved.
inline bool hartigan_pass(const Eigen::MatrixXd& x, std::vector<int>& labels, Eigen::MatrixXd& centers) {
    const Eigen::Index n = x.rows(), k = centers.rows();
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    centers.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
        centers.row(labels[static_cast<std::size_t>(i)]) += x.row(i);
        counts(labels[static_cast<std::size_t>(i)]) += 1.0;
    }
    for (Eigen::Index c = 0; c < k; ++c)
        if (counts(c) > 0) centers.row(c) /= counts(c);
    bool moved = false;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int a = labels[static_cast<std::size_t>(i)];
        if (counts(a) < 2) continue;
        const double remove = counts(a) / (counts(a) - 1.0) * (x.row(i) - centers.row(a)).squaredNorm();
        int best = a;
        double best_add = remove;
        for (Eigen::Index b = 0; b < k; ++b) {
            if (b == a) continue;
            const double add = counts(b) / (counts(b) + 1.0) * (x.row(i) - centers.row(b)).squaredNorm();
            if (add < best_add - 1e-12 * std::max(1.0, remove)) {
                best_add = add;
                best = static_cast<int>(b);
            }
        }
        if (best == a) continue;
        centers.row(a) = (centers.row(a) * counts(a) - x.row(i)) / (counts(a) - 1.0);
        centers.row(best) = (centers.row(best) * counts(best) + x.row(i)) / (counts(best) + 1.0);
        counts(a) -= 1.0;
        counts(best) += 1.0;
        labels[static_cast<std::size_t>(i)] = best;
        moved = true;
    }
    return moved;
}

/// Lloyd iterations alternated with Hartigan single-point transfers until neither improves.
inline KMeansResult lloyd(const Eigen::MatrixXd& x, Eigen::MatrixXd centers, const KMeansOptions& opt) {
    auto r = lloyd_iterate(x, std::move(centers), opt);
    for (int round = 0; round < opt.max_iter; ++round) {
        Eigen::MatrixXd c = r.centers;
        auto labels = r.labels;
        if (!hartigan_pass(x, labels, c)) break;
        const int done = r.iterations;
        auto next = lloyd_iterate(x, std::move(c), opt);
        if (!(next.objective < r.objective)) break;
        r = std::move(next);
        r.iterations += done;
    }
    return r;
}

}  // namespace detail

/// k-means++ seeding with Lloyd iterations and Hartigan refinement; best of opt.n_init restarts.
inline KMeansResult kmeans(const Eigen::MatrixXd& x, int k, std::uint64_t seed, const KMeansOptions& opt = {}) {
    if (k < 1) throw ParameterError("kmeans: k must be >= 1");
    if (x.rows() < k) throw ParameterError("kmeans: fewer points than clusters");
    if (opt.n_init < 1) throw ParameterError("kmeans: n_init must be >= 1");
    KMeansResult best;
    best.objective = std::numeric_limits<double>::infinity();
    for (int run = 0; run < opt.n_init; ++run) {
        auto rng = make_rng(seed, {0x6b6d, static_cast<std::uint64_t>(run)});
        auto r = detail::lloyd(x, detail::kmeanspp(x, k, rng), opt);
        if (r.objective < best.objective) best = std::move(r);
    }
    return best;
}

}  // namespace fnclust
