#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fnclust/clusterhead/loss.hpp"
#include "fnclust/clusterhead/mlp.hpp"
#include "fnclust/error.hpp"
#include "fnclust/featmap.hpp"
#include "fnclust/parallel.hpp"
#include "fnclust/random.hpp"
#include "fnclust/registration.hpp"

namespace fnclust {

// ---------------------------------------------------------------------------
// Objective through the head

template <class T>
struct HeadStep {
    LossTerms terms;
    Mlp<T> grad;
    Eigen::MatrixXd ya, yb;
};

namespace detail {

template <class T>
Mat<T> stack_views(const Mat<T>& xa, const Mat<T>& xb) {
    if (xa.rows() != xb.rows() || xa.cols() != xb.cols()) throw ParameterError("views differ in shape");
    if (xa.cols() == 0) throw ParameterError("empty batch");
    Mat<T> x(xa.rows(), 2 * xa.cols());
    x << xa, xb;
    return x;
}

}  // namespace detail

/// L_clu of a two-view batch (features as columns).
template <class T>
double head_loss(const Mlp<T>& net, const Mat<T>& xa, const Mat<T>& xb, const LossConfig& cfg) {
    const Eigen::Index n = xa.cols();
    const Eigen::MatrixXd y = softmax_columns(mlp_logits(net, detail::stack_views(xa, xb)).template cast<double>());
    return loss_total(y.leftCols(n), y.rightCols(n), cfg);
}

/// Loss terms and the exact parameter gradient for views stacked as [xa, xb]; gradients flow through both views.
template <class T>
HeadStep<T> head_step_stacked(const Mlp<T>& net, const Mat<T>& x, const LossConfig& cfg) {
    if (x.cols() == 0 || x.cols() % 2 != 0) throw ParameterError("stacked views need an even, non-zero column count");
    const Eigen::Index n = x.cols() / 2;
    const auto cache = mlp_forward(net, x);
    const Eigen::MatrixXd y = softmax_columns(cache.logits().template cast<double>());
    HeadStep<T> out;
    out.ya = y.leftCols(n);
    out.yb = y.rightCols(n);
    const auto lg = loss_gradient(out.ya, out.yb, cfg);
    out.terms = lg.terms;
    Eigen::MatrixXd dy(y.rows(), 2 * n);
    dy << lg.d_ya, lg.d_yb;
    out.grad = mlp_backward(net, cache, softmax_backward(y, dy).template cast<T>().eval());
    return out;
}

template <class T>
HeadStep<T> head_step(const Mlp<T>& net, const Mat<T>& xa, const Mat<T>& xb, const LossConfig& cfg) {
    return head_step_stacked(net, detail::stack_views(xa, xb), cfg);
}

// ---------------------------------------------------------------------------
// Optimizer and schedule

/// lr(t) = lr0 (1 + cos(pi t / total)) / 2.
inline double cosine_lr(double lr0, std::size_t t, std::size_t total) {
    if (total == 0) return lr0;
    return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(t) / static_cast<double>(total)));
}

struct AdamOptions {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <class T>
class Adam {
public:
    explicit Adam(const Mlp<T>& like, AdamOptions opt = {}) : opt_(opt), m_(Mlp<T>::zeros(like.dims)), v_(m_) {}

    void step(Mlp<T>& p, const Mlp<T>& g, double lr) {
        ++t_;
        const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
        for (std::size_t l = 0; l < p.layers(); ++l) {
            update(p.weights[l], g.weights[l], m_.weights[l], v_.weights[l], lr, c1, c2);
            update(p.biases[l], g.biases[l], m_.biases[l], v_.biases[l], lr, c1, c2);
        }
    }

    std::size_t steps() const noexcept { return t_; }

private:
    template <class M>
    void update(M& p, const M& g, M& m, M& v, double lr, double c1, double c2) const {
        const T b1 = static_cast<T>(opt_.beta1), b2 = static_cast<T>(opt_.beta2);
        const T step = static_cast<T>(lr / c1), root_c2 = static_cast<T>(std::sqrt(c2)), eps = static_cast<T>(opt_.eps);
        constexpr Eigen::Index block = 2048;
        for (Eigen::Index lo = 0; lo < p.size(); lo += block) {
            const Eigen::Index len = std::min(block, p.size() - lo);
            using Arr = Eigen::Array<T, Eigen::Dynamic, 1>;
            Eigen::Map<Arr> pb(p.data() + lo, len), mb(m.data() + lo, len), vb(v.data() + lo, len);
            const Eigen::Map<const Arr> gb(g.data() + lo, len);
            mb = b1 * mb + (T(1) - b1) * gb;
            vb = b2 * vb + (T(1) - b2) * gb.square();
            pb -= step * mb / (vb.sqrt() / root_c2 + eps);
        }
    }

    AdamOptions opt_;
    Mlp<T> m_, v_;
    std::size_t t_ = 0;
};

// ---------------------------------------------------------------------------
// Training (two augmented views per sample, frozen encoder, trainable head)

struct TrainConfig {
    double alpha = 1.0;
    int epochs = 50;
    int batch_size = 512;
    double lr0 = 1e-3;
    int k = 6;
    std::uint64_t seed = 0;
    Reduction loss_reduction = Reduction::mean;
    bool symmetric_ce = true;
    bool use_consistency = true;
    bool use_confidence = true;
    std::vector<int> hidden = {1024, 768, 512, 1024};
    AugmentOptions augment{};
    int threads = 1;

    LossConfig loss() const { return {alpha, symmetric_ce, loss_reduction, use_consistency, use_confidence}; }

    /// Every violated constraint, in field order.
    std::vector<std::string> problems() const {
        std::vector<std::string> out;
        if (!(alpha >= 0.0)) out.emplace_back("alpha must be >= 0");
        if (epochs < 0) out.emplace_back("epochs must be >= 0");
        if (batch_size <= 0) out.emplace_back("batch_size must be positive");
        if (!(lr0 > 0.0)) out.emplace_back("lr0 must be positive");
        if (k < 2) out.emplace_back("k must be >= 2");
        for (int h : hidden)
            if (h < 1) out.emplace_back("hidden layer widths must be positive");
        if (!(augment.crop_min > 0.0 && augment.crop_min <= augment.crop_max && augment.crop_max <= 1.0))
            out.emplace_back("crop fractions must satisfy 0 < crop_min <= crop_max <= 1");
        if (!(augment.sigma_min >= 0.0 && augment.sigma_min <= augment.sigma_max))
            out.emplace_back("blur sigmas must satisfy 0 <= sigma_min <= sigma_max");
        return out;
    }

    void validate() const {
        const auto p = problems();
        if (p.empty()) return;
        std::string msg = p.front();
        for (std::size_t i = 1; i < p.size(); ++i) msg += "; " + p[i];
        throw ParameterError(msg);
    }
};

struct EpochRecord {
    int epoch = 0;
    double lr = 0.0;  // rate used by the epoch's last step
    LossTerms loss;   // batch-size-weighted means
    double max_share = 0.0;  // largest argmax-cluster share over the epoch's first views
    std::map<std::string, double> metrics;
};

using HeadParams = Mlp<float>;

struct TrainResult {
    HeadParams params;
    std::vector<EpochRecord> history;
};

/// Called after each epoch; may fill record.metrics.
using EpochCallback = std::function<void(const HeadParams&, EpochRecord&)>;

inline std::vector<int> head_dims(int input_dim, const TrainConfig& cfg) {
    std::vector<int> d{input_dim};
    d.insert(d.end(), cfg.hidden.begin(), cfg.hidden.end());
    d.push_back(cfg.k);
    return d;
}

inline HeadParams init_head(int input_dim, const TrainConfig& cfg) {
    return HeadParams::kaiming(head_dims(input_dim, cfg), derive_seed(cfg.seed, {0x11ead}));
}

/// Augmented view `view` (0 or 1) of an image for a given epoch; a pure function of its arguments.
inline RasterImage training_view(const RasterImage& img, std::uint64_t seed, int epoch, int view, const AugmentOptions& opt) {
    auto rng = make_rng(seed, {0xa06, static_cast<std::uint64_t>(epoch), img.source_id, static_cast<std::uint64_t>(view)});
    return augment(img, rng, opt);
}

inline TrainResult train(std::span<const RasterImage> imgs, const Encoder& encoder, const TrainConfig& cfg,
                         const EpochCallback& on_epoch = {}) {
    cfg.validate();
    if (imgs.empty()) throw ParameterError("train: no images");
    TrainResult out{init_head(encoder.dim(), cfg), {}};
    if (cfg.epochs == 0) return out;

    const std::size_t n = imgs.size(), bs = static_cast<std::size_t>(cfg.batch_size);
    const std::size_t batches = (n + bs - 1) / bs;
    const std::size_t total_steps = batches * static_cast<std::size_t>(cfg.epochs);
    Adam<float> adam(out.params);
    const LossConfig lcfg = cfg.loss();

    std::vector<std::size_t> order(n);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        auto shuffle_rng = make_rng(cfg.seed, {0x5f1e, static_cast<std::uint64_t>(epoch)});
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        EpochRecord rec;
        rec.epoch = epoch;
        std::vector<double> share_counts(static_cast<std::size_t>(cfg.k), 0.0);
        for (std::size_t b = 0; b < batches; ++b) {
            const std::size_t lo = b * bs, m = std::min(bs, n - lo);
            std::vector<RasterImage> views(2 * m);
            parallel_for(m, cfg.threads, [&](std::size_t j) {
                const auto& img = imgs[order[lo + j]];
                views[j] = training_view(img, cfg.seed, epoch, 0, cfg.augment);
                views[m + j] = training_view(img, cfg.seed, epoch, 1, cfg.augment);
            });
            const auto step = head_step_stacked(out.params, encoder.encode_batch(views, cfg.threads), lcfg);
            if (!std::isfinite(step.terms.total))
                throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b));
            const std::size_t t = static_cast<std::size_t>(epoch) * batches + b;
            rec.lr = cosine_lr(cfg.lr0, t, total_steps);
            adam.step(out.params, step.grad, rec.lr);

            const double w = static_cast<double>(m) / static_cast<double>(n);
            rec.loss.consistency += w * step.terms.consistency;
            rec.loss.confidence += w * step.terms.confidence;
            rec.loss.entropy += w * step.terms.entropy;
            rec.loss.total += w * step.terms.total;
            for (Eigen::Index i = 0; i < step.ya.cols(); ++i) {
                Eigen::Index k;
                step.ya.col(i).maxCoeff(&k);
                share_counts[static_cast<std::size_t>(k)] += 1.0;
            }
        }
        rec.max_share = *std::max_element(share_counts.begin(), share_counts.end()) / static_cast<double>(n);
        if (on_epoch) on_epoch(out.params, rec);
        out.history.push_back(std::move(rec));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Inference

struct InferResult {
    Eigen::MatrixXd assign;  // K x N
    std::vector<int> labels;
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask;  // K x N, assign >= gamma
};

/// Thresholds soft assignments: hard label = argmax, mask = (assign >= gamma).
inline InferResult assignments_to_sets(Eigen::MatrixXd assign, double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw ParameterError("gamma must lie in (0, 1)");
    InferResult r;
    r.labels.resize(static_cast<std::size_t>(assign.cols()));
    for (Eigen::Index i = 0; i < assign.cols(); ++i) {
        Eigen::Index k;
        assign.col(i).maxCoeff(&k);
        r.labels[static_cast<std::size_t>(i)] = static_cast<int>(k);
    }
    r.mask = (assign.array() >= gamma).matrix();
    r.assign = std::move(assign);
    return r;
}

inline InferResult infer(const HeadParams& params, const FeatureMatrix& features, double gamma = 0.5) {
    return assignments_to_sets(softmax_columns(mlp_logits(params, features).cast<double>()), gamma);
}

inline InferResult infer(const HeadParams& params, std::span<const RasterImage> imgs, const Encoder& encoder,
                         double gamma = 0.5, int threads = 1) {
    return infer(params, encoder.encode_batch(imgs, threads), gamma);
}

}  // namespace fnclust
