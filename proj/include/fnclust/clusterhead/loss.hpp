#pragma once

// Clustering objective L_clu = L_e + L_con - alpha * H(Y) on two views.
//
// Assignment matrices are K x N (one sample per column, each column on the
// simplex), matching the head's column-per-sample layout.

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Core>

#include "fnclust/error.hpp"

namespace fnclust {

enum class Reduction { sum, mean };

inline constexpr double kLogFloor = 1e-12;

struct LossConfig {
    double alpha = 1.0;
    bool symmetric_ce = true;
    Reduction reduction = Reduction::mean;
    bool use_consistency = true;  // L_e enabled
    bool use_confidence = true;   // L_con enabled
};

struct LossTerms {
    double consistency = 0.0;
    double confidence = 0.0;
    double entropy = 0.0;
    double total = 0.0;
};

struct LossGradient {
    LossTerms terms;
    Eigen::MatrixXd d_ya;
    Eigen::MatrixXd d_yb;
};

/// Column-wise softmax with max subtraction.
inline Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& z) {
    Eigen::MatrixXd y(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < z.cols(); ++i) {
        const double m = z.col(i).maxCoeff();
        y.col(i) = (z.col(i).array() - m).exp().matrix();
        y.col(i) /= y.col(i).sum();
    }
    return y;
}

/// dL/dz for y = softmax(z) given dL/dy, column by column.
inline Eigen::MatrixXd softmax_backward(const Eigen::MatrixXd& y, const Eigen::MatrixXd& dy) {
    Eigen::MatrixXd dz(y.rows(), y.cols());
    for (Eigen::Index i = 0; i < y.cols(); ++i)
        dz.col(i) = y.col(i).cwiseProduct((dy.col(i).array() - dy.col(i).dot(y.col(i))).matrix());
    return dz;
}

namespace detail {

inline double safe_log(double x) { return std::log(std::max(x, kLogFloor)); }
inline double safe_log_deriv(double x) { return x > kLogFloor ? 1.0 / x : 0.0; }

inline void check_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ParameterError("assignment matrices differ in shape");
    if (a.cols() == 0) throw ParameterError("assignment matrices are empty");
}

inline void check_positive(const Eigen::MatrixXd& y, const char* which) {
    for (Eigen::Index i = 0; i < y.size(); ++i)
        if (!(y.data()[i] > 0.0) || !std::isfinite(y.data()[i]))
            throw DomainError(std::string("cross-entropy target ") + which + " has an entry <= 0 or non-finite");
}

// -sum_{i,k} a_ik ln b_ik, reduced; optionally accumulates gradients scaled by `w`.
inline double cross_entropy(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double r, double w,
                            Eigen::MatrixXd* da, Eigen::MatrixXd* db) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index k = 0; k < a.rows(); ++k) {
            const double lb = safe_log(b(k, j));
            s -= a(k, j) * lb;
            if (da) (*da)(k, j) -= w * r * lb;
            if (db) (*db)(k, j) -= w * r * a(k, j) * safe_log_deriv(b(k, j));
        }
    return r * s;
}

inline double reduction_factor(Reduction red, Eigen::Index n) {
    return red == Reduction::mean ? 1.0 / static_cast<double>(n) : 1.0;
}

inline double view_entropy(const Eigen::VectorXd& p) {
    double h = 0.0;
    for (Eigen::Index k = 0; k < p.size(); ++k)
        if (p(k) > 0.0) h -= p(k) * safe_log(p(k));
    return h;
}

}  // namespace detail

/// Row-wise cross-entropy L_e; symmetric averages both directions.
inline double loss_consistency(const Eigen::MatrixXd& ya, const Eigen::MatrixXd& yb, const LossConfig& cfg = {}) {
    detail::check_same_shape(ya, yb);
    detail::check_positive(yb, "Yb");
    const double r = detail::reduction_factor(cfg.reduction, ya.cols());
    if (!cfg.symmetric_ce) return detail::cross_entropy(ya, yb, r, 1.0, nullptr, nullptr);
    detail::check_positive(ya, "Ya");
    return 0.5 * (detail::cross_entropy(ya, yb, r, 1.0, nullptr, nullptr) +
                  detail::cross_entropy(yb, ya, r, 1.0, nullptr, nullptr));
}

/// L_con = -ln(mean_i <ya_i, yb_i>), the mean clamped at 1e-12.
inline double loss_confidence(const Eigen::MatrixXd& ya, const Eigen::MatrixXd& yb) {
    detail::check_same_shape(ya, yb);
    const double m = ya.cwiseProduct(yb).sum() / static_cast<double>(ya.cols());
    return -detail::safe_log(m);
}

/// H(Y) = H(P^a) + H(P^b) with P the per-view cluster marginals.
inline double marginal_entropy(const Eigen::MatrixXd& ya, const Eigen::MatrixXd& yb) {
    detail::check_same_shape(ya, yb);
    const double n = static_cast<double>(ya.cols());
    return detail::view_entropy(ya.rowwise().sum() / n) + detail::view_entropy(yb.rowwise().sum() / n);
}

inline double loss_total(const Eigen::MatrixXd& ya, const Eigen::MatrixXd& yb, const LossConfig& cfg = {}) {
    if (!(cfg.alpha >= 0.0)) throw ParameterError("alpha must be >= 0");
    double total = -cfg.alpha * marginal_entropy(ya, yb);
    if (cfg.use_consistency) total += loss_consistency(ya, yb, cfg);
    if (cfg.use_confidence) total += loss_confidence(ya, yb);
    return total;
}

/// Loss terms and the exact gradient with respect to both assignment matrices.
inline LossGradient loss_gradient(const Eigen::MatrixXd& ya, const Eigen::MatrixXd& yb, const LossConfig& cfg = {}) {
    if (!(cfg.alpha >= 0.0)) throw ParameterError("alpha must be >= 0");
    detail::check_same_shape(ya, yb);
    if (cfg.use_consistency) {
        detail::check_positive(yb, "Yb");
        if (cfg.symmetric_ce) detail::check_positive(ya, "Ya");
    }
    const Eigen::Index n = ya.cols();
    const double nn = static_cast<double>(n);
    LossGradient g;
    g.d_ya = Eigen::MatrixXd::Zero(ya.rows(), n);
    g.d_yb = Eigen::MatrixXd::Zero(ya.rows(), n);

    const double r = detail::reduction_factor(cfg.reduction, n);
    if (cfg.use_consistency && cfg.symmetric_ce) {
        g.terms.consistency = 0.5 * (detail::cross_entropy(ya, yb, r, 0.5, &g.d_ya, &g.d_yb) +
                                     detail::cross_entropy(yb, ya, r, 0.5, &g.d_yb, &g.d_ya));
    } else if (cfg.use_consistency) {
        g.terms.consistency = detail::cross_entropy(ya, yb, r, 1.0, &g.d_ya, &g.d_yb);
    }

    const double m = ya.cwiseProduct(yb).sum() / nn;
    g.terms.confidence = -detail::safe_log(m);
    if (cfg.use_confidence && m > kLogFloor) {
        g.d_ya -= yb / (m * nn);
        g.d_yb -= ya / (m * nn);
    }

    const Eigen::VectorXd pa = ya.rowwise().sum() / nn, pb = yb.rowwise().sum() / nn;
    g.terms.entropy = detail::view_entropy(pa) + detail::view_entropy(pb);
    if (cfg.alpha != 0.0) {
        // d(-alpha H)/dP_k = alpha (ln P_k + 1), and dP_k / dy_ik = 1/N.
        for (Eigen::Index k = 0; k < ya.rows(); ++k) {
            auto slope = [](double p) { return p > kLogFloor ? std::log(p) + 1.0 : std::log(kLogFloor); };
            const double ga = cfg.alpha * slope(pa(k)) / nn, gb = cfg.alpha * slope(pb(k)) / nn;
            g.d_ya.row(k).array() += ga;
            g.d_yb.row(k).array() += gb;
        }
    }
    g.terms.total = (cfg.use_consistency ? g.terms.consistency : 0.0) + (cfg.use_confidence ? g.terms.confidence : 0.0) -
                    cfg.alpha * g.terms.entropy;
    return g;
}

/// Fraction of samples whose argmax is the most popular cluster.
inline double max_cluster_share(const Eigen::MatrixXd& y) {
    if (y.cols() == 0) return 0.0;
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(y.rows());
    for (Eigen::Index i = 0; i < y.cols(); ++i) {
        Eigen::Index k;
        y.col(i).maxCoeff(&k);
        counts(k) += 1.0;
    }
    return counts.maxCoeff() / static_cast<double>(y.cols());
}

}  // namespace fnclust
