#pragma once

// Classical functional-data features: FPCA scores and cubic B-spline coefficients.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "fnclust/dynsys/dataset.hpp"
#include "fnclust/error.hpp"
#include "fnclust/registration.hpp"

namespace fnclust {

/// N x T matrix of trajectory values (one row per trajectory).
inline Eigen::MatrixXd value_matrix(const Dataset& ds) {
    if (ds.trajectories.empty()) throw ParameterError("empty dataset");
    const auto t = static_cast<Eigen::Index>(ds.trajectories.front().size());
    Eigen::MatrixXd x(static_cast<Eigen::Index>(ds.size()), t);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& v = ds.trajectories[i].values;
        if (static_cast<Eigen::Index>(v.size()) != t) throw ParameterError("trajectories are not on a common grid");
        x.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(v.data(), t);
    }
    return x;
}

// ---------------------------------------------------------------------------
// FPCA

struct FpcaModel {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd scale;
    Eigen::RowVectorXd inv_scale;  // 0 on constant columns
    Eigen::MatrixXd components;  // T x n_components; orthonormal leading columns, zero padding
    Eigen::VectorXd singular_values;
    bool rank_deficient = false;  // fewer than the requested components were available

    Eigen::MatrixXd standardize(const Eigen::MatrixXd& x) const {
        return (x.rowwise() - mean).array().rowwise() * inv_scale.array();
    }
    Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const { return standardize(x) * components; }
    /// Standardized curves rebuilt from scores.
    Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& scores) const { return scores * components.transpose(); }
};

/// Standard-scales each time coordinate (population std; columns whose spread is at
/// round-off level are treated as constant and map to 0) and keeps the leading right
/// singular vectors of the scaled data. Missing components (rank < n_components) are
/// zero columns and set rank_deficient.
inline FpcaModel fit_fpca(const Eigen::MatrixXd& x, int n_components) {
    if (n_components < 1) throw ParameterError("fpca: n_components must be >= 1");
    if (x.rows() <= n_components) throw ParameterError("fpca: need more curves than components");
    FpcaModel m;
    const double n = static_cast<double>(x.rows());
    m.mean = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - m.mean;
    m.scale = (centered.colwise().squaredNorm() / n).cwiseSqrt();
    m.inv_scale.resize(m.scale.size());
    for (Eigen::Index j = 0; j < m.scale.size(); ++j) {
        const double noise = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(m.mean(j)));
        if (m.scale(j) > noise) {
            m.inv_scale(j) = 1.0 / m.scale(j);
        } else {
            m.scale(j) = 1.0;
            m.inv_scale(j) = 0.0;
        }
    }
    const Eigen::MatrixXd z = m.standardize(x);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(z, Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    const double tol = s.size() ? s(0) * std::max(z.rows(), z.cols()) * std::numeric_limits<double>::epsilon() : 0.0;
    Eigen::Index rank = 0;
    while (rank < s.size() && s(rank) > tol) ++rank;
    const Eigen::Index r = std::min<Eigen::Index>(rank, n_components);
    m.rank_deficient = r < n_components;
    m.components = Eigen::MatrixXd::Zero(z.cols(), n_components);
    m.components.leftCols(r) = svd.matrixV().leftCols(r);
    m.singular_values = Eigen::VectorXd::Zero(n_components);
    m.singular_values.head(r) = s.head(r);
    for (Eigen::Index c = 0; c < r; ++c) {
        Eigen::Index at;
        m.components.col(c).cwiseAbs().maxCoeff(&at);
        if (m.components(at, c) < 0) m.components.col(c) *= -1.0;
    }
    return m;
}

inline Eigen::MatrixXd fpca_features(const Dataset& ds, int n_components = 30) {
    const Eigen::MatrixXd x = value_matrix(ds);
    return fit_fpca(x, n_components).transform(x);
}

// ---------------------------------------------------------------------------
// Cubic B-splines

/// Clamped uniform knot vector on [a, b] for n_basis cubic B-splines.
inline std::vector<double> clamped_knots(double a, double b, int n_basis, int degree = 3) {
    if (n_basis < degree + 1) throw ParameterError("bspline: need at least degree + 1 basis functions");
    const int intervals = n_basis - degree;
    std::vector<double> k;
    for (int i = 0; i < degree; ++i) k.push_back(a);
    for (int i = 0; i <= intervals; ++i) k.push_back(a + (b - a) * i / intervals);
    for (int i = 0; i < degree; ++i) k.push_back(b);
    return k;
}

/// Cox-de Boor basis values at t; the right end belongs to the last interval.
inline Eigen::VectorXd bspline_basis(const std::vector<double>& knots, int n_basis, double t, int degree = 3) {
    const double a = knots.front(), b = knots.back();
    t = std::clamp(t, a, b);
    Eigen::VectorXd nb = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(knots.size()) - 1);
    std::size_t span = static_cast<std::size_t>(degree);
    while (span + 1 < knots.size() - static_cast<std::size_t>(degree) - 1 && t >= knots[span + 1]) ++span;
    nb(static_cast<Eigen::Index>(span)) = 1.0;
    for (int p = 1; p <= degree; ++p) {
        Eigen::VectorXd next = Eigen::VectorXd::Zero(nb.size());
        for (Eigen::Index i = 0; i + p < nb.size(); ++i) {
            double v = 0.0;
            const double d1 = knots[i + p] - knots[i], d2 = knots[i + p + 1] - knots[i + 1];
            if (d1 > 0) v += (t - knots[i]) / d1 * nb(i);
            if (d2 > 0) v += (knots[i + p + 1] - t) / d2 * nb(i + 1);
            next(i) = v;
        }
        nb = next;
    }
    return nb.head(n_basis);
}

/// T x n_basis design matrix of cubic B-splines with uniform knots on the time span.
inline Eigen::MatrixXd bspline_design(const std::vector<double>& times, int n_basis) {
    if (times.size() < 2) throw ParameterError("bspline: need at least two sample times");
    const auto knots = clamped_knots(times.front(), times.back(), n_basis);
    Eigen::MatrixXd b(static_cast<Eigen::Index>(times.size()), n_basis);
    for (std::size_t j = 0; j < times.size(); ++j) b.row(static_cast<Eigen::Index>(j)) = bspline_basis(knots, n_basis, times[j]).transpose();
    return b;
}

/// Least-squares coefficients (rows) of curves sampled at `times`, via column-pivoted QR.
inline Eigen::MatrixXd bspline_fit(const Eigen::MatrixXd& curves, const std::vector<double>& times, int n_basis) {
    if (static_cast<int>(times.size()) < n_basis) throw ParameterError("bspline: grid shorter than the basis");
    if (curves.cols() != static_cast<Eigen::Index>(times.size())) throw ParameterError("bspline: curves off the grid");
    const Eigen::MatrixXd design = bspline_design(times, n_basis);
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    return qr.solve(curves.transpose()).transpose();
}

/// Coefficients of each trajectory after min-max scaling to [-1, 1].
inline Eigen::MatrixXd bspline_features(const Dataset& ds, int n_basis = 40) {
    Eigen::MatrixXd x = value_matrix(ds);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const auto v = normalize(ds.trajectories[static_cast<std::size_t>(i)].values);
        x.row(i) = Eigen::Map<const Eigen::RowVectorXd>(v.data(), x.cols());
    }
    return bspline_fit(x, ds.trajectories.front().times, n_basis);
}

}  // namespace fnclust
