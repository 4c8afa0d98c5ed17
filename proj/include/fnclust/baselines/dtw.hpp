#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "fnclust/error.hpp"
#include "fnclust/parallel.hpp"
#include "fnclust/random.hpp"

namespace fnclust {

/// Dynamic time warping with squared local cost and the symmetric step pattern
/// (match, insertion, deletion all weight 1); returns sqrt of the accumulated cost.
inline double dtw_distance(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw ParameterError("dtw: empty series");
    const std::size_t m = b.size();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
    prev[0] = 0.0;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = inf;
        for (std::size_t j = 1; j <= m; ++j) {
            const double d = a[i - 1] - b[j - 1];
            cur[j] = d * d + std::min({prev[j - 1], prev[j], cur[j - 1]});
        }
        std::swap(prev, cur);
    }
    return std::sqrt(prev[m]);
}

/// Symmetric N x N DTW matrix, parallel over rows.
inline Eigen::MatrixXd dtw_matrix(const std::vector<std::vector<double>>& series, int threads = 1) {
    const auto n = static_cast<Eigen::Index>(series.size());
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    parallel_for(series.size(), threads, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < series.size(); ++j)
            d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = dtw_distance(series[i], series[j]);
    });
    d.triangularView<Eigen::StrictlyLower>() = d.transpose();
    return d;
}

struct KMedoidsResult {
    std::vector<int> medoids;
    std::vector<int> labels;
    double cost = 0.0;
};

namespace detail {

inline double medoid_cost(const Eigen::MatrixXd& d, const std::vector<int>& med, std::vector<int>* labels) {
    double cost = 0.0;
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        int best = 0;
        for (std::size_t k = 1; k < med.size(); ++k)
            if (d(i, med[k]) < d(i, med[static_cast<std::size_t>(best)])) best = static_cast<int>(k);
        cost += d(i, med[static_cast<std::size_t>(best)]);
        if (labels) (*labels)[static_cast<std::size_t>(i)] = best;
    }
    return cost;
}

}  // namespace detail

/// PAM: random distinct initial medoids, then best-improvement swaps until none
/// lowers the total distance; best of n_init restarts.
inline KMedoidsResult kmedoids(const Eigen::MatrixXd& d, int k, std::uint64_t seed, int n_init = 5) {
    const auto n = static_cast<int>(d.rows());
    if (k < 1 || n < k) throw ParameterError("kmedoids: need 1 <= k <= N");
    KMedoidsResult best;
    best.cost = std::numeric_limits<double>::infinity();
    for (int run = 0; run < n_init; ++run) {
        auto rng = make_rng(seed, {0x3ed, static_cast<std::uint64_t>(run)});
        std::vector<int> pool(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
        for (int i = 0; i < k; ++i) {
            std::uniform_int_distribution<int> pick(i, n - 1);
            std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
        }
        std::vector<int> med(pool.begin(), pool.begin() + k);
        std::vector<char> is_med(static_cast<std::size_t>(n), 0);
        for (int m : med) is_med[static_cast<std::size_t>(m)] = 1;
        double cost = detail::medoid_cost(d, med, nullptr);
        std::vector<int> near(static_cast<std::size_t>(n));
        std::vector<double> d1(static_cast<std::size_t>(n)), d2(static_cast<std::size_t>(n));
        for (;;) {
            for (int i = 0; i < n; ++i) {
                double a = std::numeric_limits<double>::infinity(), b = a;
                int slot = 0;
                for (int s = 0; s < k; ++s) {
                    const double v = d(i, med[static_cast<std::size_t>(s)]);
                    if (v < a) {
                        b = a;
                        a = v;
                        slot = s;
                    } else if (v < b) {
                        b = v;
                    }
                }
                near[static_cast<std::size_t>(i)] = slot;
                d1[static_cast<std::size_t>(i)] = a;
                d2[static_cast<std::size_t>(i)] = b;
            }
            // Cost change of replacing medoid `slot` by point o, from nearest/second-nearest distances.
            double best_delta = 0.0;
            int best_slot = -1, best_point = -1;
            for (int slot = 0; slot < k; ++slot)
                for (int o = 0; o < n; ++o) {
                    if (is_med[static_cast<std::size_t>(o)]) continue;
                    double delta = 0.0;
                    for (int i = 0; i < n; ++i) {
                        const auto u = static_cast<std::size_t>(i);
                        const double dio = d(i, o);
                        delta += near[u] == slot ? std::min(d2[u], dio) - d1[u] : std::min(0.0, dio - d1[u]);
                    }
                    if (delta < best_delta - 1e-12 * std::max(1.0, cost)) {
                        best_delta = delta;
                        best_slot = slot;
                        best_point = o;
                    }
                }
            if (best_slot < 0) break;
            is_med[static_cast<std::size_t>(med[static_cast<std::size_t>(best_slot)])] = 0;
            is_med[static_cast<std::size_t>(best_point)] = 1;
            med[static_cast<std::size_t>(best_slot)] = best_point;
            cost = detail::medoid_cost(d, med, nullptr);
        }
        if (cost < best.cost) {
            best.medoids = med;
            best.cost = cost;
        }
    }
    best.labels.assign(static_cast<std::size_t>(n), 0);
    detail::medoid_cost(d, best.medoids, &best.labels);
    return best;
}

inline KMedoidsResult dtw_kmedoids(const std::vector<std::vector<double>>& series, int k, std::uint64_t seed,
                                   int n_init = 5, int threads = 1) {
    return kmedoids(dtw_matrix(series, threads), k, seed, n_init);
}

}  // namespace fnclust
