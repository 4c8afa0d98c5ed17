#pragma once

// External clustering metrics on integer labelings.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "fnclust/error.hpp"

namespace fnclust {

using Labels = std::vector<int>;

namespace detail {

inline int label_count(std::span<const int> labels) {
    int k = 0;
    for (int v : labels) {
        if (v < 0) throw ParameterError("labels must be non-negative");
        k = std::max(k, v + 1);
    }
    return k;
}

inline void check_lengths(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) throw ParameterError("labelings differ in length");
}

/// Minimum-cost perfect assignment on a square matrix (Hungarian method, O(n^3)).
inline std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost) {
    const int n = static_cast<int>(cost.rows());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(n);
    for (int j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

inline double comb2(double x) { return x * (x - 1.0) / 2.0; }

}  // namespace detail

/// Square contingency table (padded with zeros to max(K_pred, K_truth)).
inline Eigen::MatrixXd contingency(std::span<const int> pred, std::span<const int> truth) {
    detail::check_lengths(pred, truth);
    const int k = std::max(detail::label_count(pred), detail::label_count(truth));
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(k, k);
    for (std::size_t i = 0; i < pred.size(); ++i) c(pred[i], truth[i]) += 1.0;
    return c;
}

/// Best matching fraction over label bijections: brute force for K <= 8, Hungarian above.
inline double accuracy(std::span<const int> pred, std::span<const int> truth) {
    detail::check_lengths(pred, truth);
    if (pred.empty()) return 1.0;
    const Eigen::MatrixXd c = contingency(pred, truth);
    const int k = static_cast<int>(c.rows());
    double best = 0.0;
    if (k <= 8) {
        std::vector<int> perm(k);
        std::iota(perm.begin(), perm.end(), 0);
        do {
            double s = 0.0;
            for (int i = 0; i < k; ++i) s += c(i, perm[i]);
            best = std::max(best, s);
        } while (std::next_permutation(perm.begin(), perm.end()));
    } else {
        const auto match = detail::min_cost_assignment(-c);
        for (int i = 0; i < k; ++i) best += c(i, match[i]);
    }
    return best / static_cast<double>(pred.size());
}

/// Adjusted Rand index; when the expected and maximal indices coincide, 1 for
/// identical partitions and 0 otherwise.
inline double ari(std::span<const int> pred, std::span<const int> truth) {
    const Eigen::MatrixXd c = contingency(pred, truth);
    const double n = static_cast<double>(pred.size());
    double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
    for (Eigen::Index i = 0; i < c.rows(); ++i)
        for (Eigen::Index j = 0; j < c.cols(); ++j) sum_ij += detail::comb2(c(i, j));
    for (Eigen::Index i = 0; i < c.rows(); ++i) sum_a += detail::comb2(c.row(i).sum());
    for (Eigen::Index j = 0; j < c.cols(); ++j) sum_b += detail::comb2(c.col(j).sum());
    const double total = detail::comb2(n);
    const double expected = total > 0 ? sum_a * sum_b / total : 0.0;
    const double max_index = 0.5 * (sum_a + sum_b);
    if (max_index == expected) return sum_a == sum_b && sum_ij == sum_a ? 1.0 : 0.0;
    return (sum_ij - expected) / (max_index - expected);
}

/// Normalized mutual information with arithmetic-mean normalization.
inline double nmi(std::span<const int> pred, std::span<const int> truth) {
    const Eigen::MatrixXd c = contingency(pred, truth);
    const double n = static_cast<double>(pred.size());
    if (n == 0) return 1.0;
    const Eigen::VectorXd a = c.rowwise().sum(), b = c.colwise().sum().transpose();
    auto entropy = [n](const Eigen::VectorXd& counts) {
        double h = 0.0;
        for (Eigen::Index i = 0; i < counts.size(); ++i)
            if (counts(i) > 0) h -= counts(i) / n * std::log(counts(i) / n);
        return h;
    };
    const double ha = entropy(a), hb = entropy(b);
    if (ha == 0.0 && hb == 0.0) return 1.0;
    double mi = 0.0;
    for (Eigen::Index i = 0; i < c.rows(); ++i)
        for (Eigen::Index j = 0; j < c.cols(); ++j)
            if (c(i, j) > 0) mi += c(i, j) / n * std::log(n * c(i, j) / (a(i) * b(j)));
    return std::clamp(mi / (0.5 * (ha + hb)), 0.0, 1.0);
}

struct Scores {
    double acc = 0.0;
    double ari = 0.0;
    double nmi = 0.0;
};

inline Scores score(std::span<const int> pred, std::span<const int> truth) {
    return {accuracy(pred, truth), ari(pred, truth), nmi(pred, truth)};
}

}  // namespace fnclust
