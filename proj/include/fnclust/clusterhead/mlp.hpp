#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fnclust/error.hpp"
#include "fnclust/random.hpp"

namespace fnclust {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

/// Fully connected ReLU network; samples are columns. Layer l maps dims[l] -> dims[l+1].
template <class T>
struct Mlp {
    std::vector<int> dims;
    std::vector<Mat<T>> weights;
    std::vector<Vec<T>> biases;

    std::size_t layers() const noexcept { return weights.size(); }
    int input_dim() const { return dims.front(); }
    int output_dim() const { return dims.back(); }

    std::size_t num_params() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < layers(); ++l) n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
        return n;
    }

    template <class U>
    Mlp<U> cast() const {
        Mlp<U> out;
        out.dims = dims;
        for (std::size_t l = 0; l < layers(); ++l) {
            out.weights.push_back(weights[l].template cast<U>());
            out.biases.push_back(biases[l].template cast<U>());
        }
        return out;
    }

    static Mlp zeros(std::vector<int> layer_dims) {
        check_dims(layer_dims);
        Mlp m;
        m.dims = std::move(layer_dims);
        for (std::size_t l = 0; l + 1 < m.dims.size(); ++l) {
            m.weights.push_back(Mat<T>::Zero(m.dims[l + 1], m.dims[l]));
            m.biases.push_back(Vec<T>::Zero(m.dims[l + 1]));
        }
        return m;
    }

    /// Kaiming-uniform (fan-in, ReLU gain) weights and zero biases.
    static Mlp kaiming(std::vector<int> layer_dims, std::uint64_t seed) {
        Mlp m = zeros(std::move(layer_dims));
        for (std::size_t l = 0; l < m.layers(); ++l) {
            auto rng = make_rng(seed, {0x4ead, l});
            const double bound = std::sqrt(6.0 / m.dims[l]);
            auto& w = m.weights[l];
            for (Eigen::Index r = 0; r < w.rows(); ++r)
                for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = static_cast<T>(uniform(rng, -bound, bound));
        }
        return m;
    }

    static void check_dims(const std::vector<int>& d) {
        if (d.size() < 2) throw ParameterError("mlp: need at least input and output dimensions");
        for (int v : d)
            if (v <= 0) throw ParameterError("mlp: layer dimensions must be positive");
    }
};

/// Per-layer activations kept for the backward pass; acts[0] is the input.
template <class T>
struct MlpCache {
    std::vector<Mat<T>> acts;
    const Mat<T>& logits() const { return acts.back(); }
};

template <class T>
MlpCache<T> mlp_forward(const Mlp<T>& net, const Mat<T>& x) {
    if (x.rows() != net.input_dim())
        throw ParameterError("mlp: input has dimension " + std::to_string(x.rows()) + ", expected " +
                             std::to_string(net.input_dim()));
    MlpCache<T> cache;
    cache.acts.reserve(net.layers() + 1);
    cache.acts.push_back(x);
    for (std::size_t l = 0; l < net.layers(); ++l) {
        Mat<T> z = net.weights[l] * cache.acts.back();
        z.colwise() += net.biases[l];
        if (l + 1 < net.layers()) z = z.cwiseMax(T(0));
        if (!z.allFinite()) throw NumericalError("mlp: non-finite activation in layer " + std::to_string(l + 1));
        cache.acts.push_back(std::move(z));
    }
    return cache;
}

template <class T>
Mat<T> mlp_logits(const Mlp<T>& net, const Mat<T>& x) {
    return std::move(mlp_forward(net, x).acts.back());
}

/// Parameter gradients given dL/dlogits; shapes mirror the network.
template <class T>
Mlp<T> mlp_backward(const Mlp<T>& net, const MlpCache<T>& cache, Mat<T> dz) {
    Mlp<T> grad;
    grad.dims = net.dims;
    grad.weights.resize(net.layers());
    grad.biases.resize(net.layers());
    for (std::size_t l = net.layers(); l-- > 0;) {
        const Mat<T>& a = cache.acts[l];
        grad.weights[l].noalias() = dz * a.transpose();
        grad.biases[l] = dz.rowwise().sum();
        if (l == 0) break;
        Mat<T> da = net.weights[l].transpose() * dz;
        dz = (a.array() > T(0)).select(da, T(0));
    }
    return grad;
}

}  // namespace fnclust
