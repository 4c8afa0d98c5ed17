#pragma once

// End-to-end experiment runners shared by the command-line tool and the acceptance run:
// dataset preparation, SNO training/evaluation, feature/functional baselines, and the
// ablation, resolution and loss-weight sweeps.

#include <algorithm>
#include <array>
#include <chrono>
#include <limits>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fnclust/baselines/dtw.hpp"
#include "fnclust/baselines/functional.hpp"
#include "fnclust/baselines/kmeans.hpp"
#include "fnclust/baselines/metrics.hpp"
#include "fnclust/clusterhead/checkpoint.hpp"
#include "fnclust/clusterhead/train.hpp"
#include "fnclust/dynsys/generators.hpp"
#include "fnclust/featmap.hpp"
#include "fnclust/registration.hpp"

namespace fnclust::experiments {

inline constexpr double kCollapseShare = 0.95;

struct DatasetSpec {
    std::string name = "ode6";  // ode6 | ode4
    int n = 100;                // per subclass (ode6) or per level (ode4)
    int levels = 20;            // ode4 only
    int width = 16;             // ode4 neural field width
};

/// Everything that defines one experiment run, apart from the seed.
struct ExperimentSpec {
    DatasetSpec dataset;
    RegistrationSpec registration{};
    EncoderSpec encoder{};
    TrainConfig train = desk_train_config();
    double gamma = 0.5;
    int threads = 1;

    /// Short runs that fit the desk-scale time budget (see README).
    static TrainConfig desk_train_config() {
        TrainConfig c;
        c.epochs = 30;
        c.batch_size = 64;
        c.lr0 = 3e-4;
        c.k = 6;
        return c;
    }
};

inline nlohmann::json to_json(const ExperimentSpec& s) {
    nlohmann::json enc{{"kind", encoder_name(s.encoder.kind)}, {"dim", s.encoder.dim}, {"params", s.encoder.params}};
    if (!s.encoder.path.empty()) enc["path"] = s.encoder.path;
    return {{"dataset", {{"name", s.dataset.name}, {"n", s.dataset.n}, {"levels", s.dataset.levels}, {"width", s.dataset.width}}},
            {"registration",
             {{"res", s.registration.res},
              {"spectrogram", s.registration.spectrogram},
              {"stft_window", s.registration.stft.window},
              {"stft_hop", s.registration.stft.hop}}},
            {"encoder", enc},
            {"train", train_config_json(s.train)},
            {"gamma", s.gamma}};
}

/// FNV-1a 64 of a canonical JSON dump (object keys sorted), as 16 hex digits.
inline std::string config_hash(const nlohmann::json& j) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : j.dump()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    return out;
}

inline std::string config_hash(const ExperimentSpec& s) { return config_hash(to_json(s)); }

inline Dataset generate(const DatasetSpec& d, std::uint64_t seed, int threads = 1) {
    if (d.name == "ode6") {
        dynsys::Ode6Options opt;
        opt.threads = threads;
        return dynsys::gen_ode6(d.n, seed, opt);
    }
    if (d.name == "ode4") {
        dynsys::Ode4Options opt;
        opt.threads = threads;
        return dynsys::gen_ode4(d.n, d.levels, d.width, seed, opt);
    }
    throw ParameterError("unknown dataset '" + d.name + "' (expected ode6 or ode4)");
}

/// A dataset split into train/test with registered images.
struct Prepared {
    Dataset train;
    Dataset test;
    std::vector<RasterImage> train_imgs;
    std::vector<RasterImage> test_imgs;
};

inline Prepared prepare(const Dataset& ds, const RegistrationSpec& reg, int threads = 1) {
    Prepared p;
    p.train = ds.subset(Split::train);
    p.test = ds.subset(Split::test);
    if (p.train.size() == 0 || p.test.size() == 0) throw ParameterError("dataset needs both train and test trajectories");
    p.train_imgs = register_dataset(p.train, reg, threads);
    p.test_imgs = register_dataset(p.test, reg, threads);
    return p;
}

inline Prepared prepare(const ExperimentSpec& s, std::uint64_t seed) {
    return prepare(generate(s.dataset, seed, s.threads), s.registration, s.threads);
}

struct MethodResult {
    std::string method;
    std::uint64_t seed = 0;
    Scores scores;
    double max_share = 0.0;  // share of the most popular predicted cluster on the test split
    bool collapsed = false;
    double seconds = 0.0;
    std::vector<int> labels;
};

namespace detail {

class Stopwatch {
public:
    double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

private:
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

inline double label_share(const std::vector<int>& labels, int k) {
    if (labels.empty()) return 0.0;
    std::vector<std::size_t> counts(static_cast<std::size_t>(std::max(k, 1)), 0);
    for (int l : labels) {
        if (static_cast<std::size_t>(l) >= counts.size()) counts.resize(static_cast<std::size_t>(l) + 1, 0);
        ++counts[static_cast<std::size_t>(l)];
    }
    return static_cast<double>(*std::max_element(counts.begin(), counts.end())) / static_cast<double>(labels.size());
}

inline MethodResult finish(std::string method, std::uint64_t seed, std::vector<int> labels, const Dataset& test, int k,
                           const Stopwatch& sw) {
    MethodResult r;
    r.method = std::move(method);
    r.seed = seed;
    r.scores = score(labels, test.labels());
    r.max_share = label_share(labels, k);
    r.collapsed = r.max_share >= kCollapseShare;
    r.labels = std::move(labels);
    r.seconds = sw.seconds();
    return r;
}

/// k-means fitted on training rows; test rows go to the nearest center.
inline std::vector<int> kmeans_transfer(const Eigen::MatrixXd& train_rows, const Eigen::MatrixXd& test_rows, int k,
                                        std::uint64_t seed) {
    const auto km = kmeans(train_rows, k, seed);
    return assign_to_centers(test_rows, km.centers).first;
}

}  // namespace detail

inline Encoder encoder_for(const ExperimentSpec& s, const Prepared& p, std::uint64_t seed) {
    EncoderSpec spec = s.encoder;
    spec.seed = seed;
    return make_encoder(spec, p.train_imgs);
}

struct SnoRun {
    MethodResult result;
    HeadParams params;
    std::vector<EpochRecord> history;
    EncoderSpec encoder;  // calibrated spec, enough to rebuild the encoder
};

/// Trains the head on the train split and scores argmax assignments on the test split.
inline SnoRun run_sno(const ExperimentSpec& s, const Prepared& p, std::uint64_t seed, const EpochCallback& on_epoch = {}) {
    detail::Stopwatch sw;
    const Encoder enc = encoder_for(s, p, seed);
    TrainConfig cfg = s.train;
    cfg.seed = seed;
    cfg.threads = s.threads;
    auto trained = train(p.train_imgs, enc, cfg, on_epoch);
    const auto inf = infer(trained.params, p.test_imgs, enc, s.gamma, s.threads);
    SnoRun out;
    out.result = detail::finish("sno", seed, inf.labels, p.test, cfg.k, sw);
    out.params = std::move(trained.params);
    out.history = std::move(trained.history);
    out.encoder = enc.spec();
    return out;
}

/// k-means on the frozen features of the clean images.
inline MethodResult run_feature_kmeans(const ExperimentSpec& s, const Prepared& p, std::uint64_t seed) {
    detail::Stopwatch sw;
    const Encoder enc = encoder_for(s, p, seed);
    const Eigen::MatrixXd tr = enc.encode_batch(p.train_imgs, s.threads).transpose().cast<double>();
    const Eigen::MatrixXd te = enc.encode_batch(p.test_imgs, s.threads).transpose().cast<double>();
    return detail::finish("kmeans", seed, detail::kmeans_transfer(tr, te, s.train.k, seed), p.test, s.train.k, sw);
}

/// FPCA scores (fitted on the train split) clustered with k-means.
inline MethodResult run_fpca(const ExperimentSpec& s, const Prepared& p, std::uint64_t seed, int n_components = 30) {
    detail::Stopwatch sw;
    const Eigen::MatrixXd xtr = value_matrix(p.train), xte = value_matrix(p.test);
    const auto model = fit_fpca(xtr, n_components);
    return detail::finish("fpca", seed, detail::kmeans_transfer(model.transform(xtr), model.transform(xte), s.train.k, seed),
                          p.test, s.train.k, sw);
}

/// Cubic B-spline coefficients of the scaled curves clustered with k-means.
inline MethodResult run_bspline(const ExperimentSpec& s, const Prepared& p, std::uint64_t seed, int n_basis = 40) {
    detail::Stopwatch sw;
    return detail::finish("bspline", seed,
                          detail::kmeans_transfer(bspline_features(p.train, n_basis), bspline_features(p.test, n_basis), s.train.k, seed),
                          p.test, s.train.k, sw);
}

/// DTW k-medoids on the scaled test curves.
inline MethodResult run_dtw(const ExperimentSpec& s, const Prepared& p, std::uint64_t seed) {
    detail::Stopwatch sw;
    std::vector<std::vector<double>> series;
    series.reserve(p.test.size());
    for (const auto& tr : p.test.trajectories) series.push_back(normalize(tr.values));
    const auto r = dtw_kmedoids(series, s.train.k, seed, 5, s.threads);
    return detail::finish("dtw", seed, r.labels, p.test, s.train.k, sw);
}

inline MethodResult run_baseline(const std::string& name, const ExperimentSpec& s, const Prepared& p, std::uint64_t seed) {
    if (name == "kmeans") return run_feature_kmeans(s, p, seed);
    if (name == "fpca") return run_fpca(s, p, seed);
    if (name == "bspline") return run_bspline(s, p, seed);
    if (name == "dtw") return run_dtw(s, p, seed);
    throw ParameterError("unknown baseline '" + name + "' (expected kmeans, fpca, bspline or dtw)");
}

// ---------------------------------------------------------------------------
// Sweeps

struct AblationRow {
    bool consistency = false;
    bool confidence = false;
    bool entropy = false;
    MethodResult result;
};

/// The seven non-empty on/off combinations of (L_e, L_con, H(Y)); H(Y) off means alpha = 0.
inline std::vector<std::array<bool, 3>> ablation_grid() {
    std::vector<std::array<bool, 3>> g;
    for (int mask = 7; mask >= 1; --mask) g.push_back({(mask & 4) != 0, (mask & 2) != 0, (mask & 1) != 0});
    return g;
}

inline ExperimentSpec ablated(ExperimentSpec s, const std::array<bool, 3>& on) {
    s.train.use_consistency = on[0];
    s.train.use_confidence = on[1];
    if (!on[2]) s.train.alpha = 0.0;
    return s;
}

inline std::vector<AblationRow> run_ablation(const ExperimentSpec& s, const Prepared& p, std::uint64_t seed) {
    std::vector<AblationRow> rows;
    for (const auto& on : ablation_grid()) {
        AblationRow row{on[0], on[1], on[2], run_sno(ablated(s, on), p, seed).result};
        rows.push_back(std::move(row));
    }
    return rows;
}

template <class T>
double median(std::vector<T> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? static_cast<double>(v[n / 2]) : 0.5 * (static_cast<double>(v[n / 2 - 1]) + static_cast<double>(v[n / 2]));
}

}  // namespace fnclust::experiments
