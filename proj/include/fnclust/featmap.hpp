#pragma once

// Frozen feature maps from registered grids to D-dimensional embeddings.
//
// Batch encoders return a D x N float matrix with one sample per column; the
// clustering head consumes that layout directly.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "fnclust/binary_io.hpp"
#include "fnclust/error.hpp"
#include "fnclust/parallel.hpp"
#include "fnclust/random.hpp"
#include "fnclust/registration.hpp"

namespace fnclust {

using FeatureMatrix = Eigen::MatrixXf;

struct FeatureVector {
    std::vector<double> data;
    std::uint64_t source_id = 0;
    int dim() const noexcept { return static_cast<int>(data.size()); }
};

enum class EncoderKind { pixels, rff, frozen_mlp, external };

inline const char* encoder_name(EncoderKind k) {
    switch (k) {
        case EncoderKind::pixels: return "pixels";
        case EncoderKind::rff: return "rff";
        case EncoderKind::frozen_mlp: return "frozen_mlp";
        case EncoderKind::external: return "external";
    }
    return "?";
}

inline EncoderKind parse_encoder_kind(const std::string& s) {
    if (s == "pixels") return EncoderKind::pixels;
    if (s == "rff") return EncoderKind::rff;
    if (s == "frozen_mlp") return EncoderKind::frozen_mlp;
    if (s == "external") return EncoderKind::external;
    throw ParameterError("unknown encoder kind '" + s + "' (valid kinds: pixels, rff, frozen_mlp, external)");
}

/// params["bandwidth"] sets the RFF length scale; absent or <= 0 means "calibrate".
struct EncoderSpec {
    EncoderKind kind = EncoderKind::rff;
    int dim = 2048;
    std::uint64_t seed = 0;
    std::map<std::string, double> params;
    std::string path;  // FNCEMB1 file for kind == external

    double param(const std::string& key, double fallback) const {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    }
};

// ---------------------------------------------------------------------------
// FNCEMB1 embedding tables

inline constexpr const char* kEmbeddingMagic = "FNCEMB1";

struct EmbeddingTable {
    int dim = 0;
    std::vector<std::uint64_t> ids;
    FeatureMatrix rows;  // dim x N
    std::unordered_map<std::uint64_t, std::size_t> index;

    std::size_t size() const noexcept { return ids.size(); }
    bool contains(std::uint64_t id) const { return index.contains(id); }

    Eigen::Ref<const Eigen::VectorXf> row(std::uint64_t id) const {
        auto it = index.find(id);
        if (it == index.end()) throw LookupError("no embedding for id " + std::to_string(id));
        return rows.col(static_cast<Eigen::Index>(it->second));
    }
};

/// "FNCEMB1" | u32 N | u32 D | N x (u64 id, D x f32).
inline io::Writer encode_embeddings(std::span<const std::uint64_t> ids, const FeatureMatrix& rows) {
    if (rows.cols() != static_cast<Eigen::Index>(ids.size()))
        throw ParameterError("encode_embeddings: ids and columns differ in count");
    io::Writer w;
    w.magic(kEmbeddingMagic, false);
    w.u32(static_cast<std::uint32_t>(ids.size()));
    w.u32(static_cast<std::uint32_t>(rows.rows()));
    for (std::size_t i = 0; i < ids.size(); ++i) {
        w.u64(ids[i]);
        for (Eigen::Index d = 0; d < rows.rows(); ++d) w.f32(rows(d, static_cast<Eigen::Index>(i)));
    }
    return w;
}

inline void save_embeddings(std::span<const std::uint64_t> ids, const FeatureMatrix& rows, const std::string& path) {
    encode_embeddings(ids, rows).save(path);
}

inline EmbeddingTable decode_embeddings(io::Reader r) {
    constexpr const char* fmt = "FNCEMB1";
    r.expect_magic(kEmbeddingMagic, false, fmt);
    const auto n = r.u32(fmt);
    const auto d = r.u32(fmt);
    r.expect_remaining(static_cast<std::size_t>(n) * (sizeof(std::uint64_t) + sizeof(float) * d), fmt);
    EmbeddingTable t;
    t.dim = static_cast<int>(d);
    t.ids.reserve(n);
    t.rows.resize(d, n);
    for (std::uint32_t i = 0; i < n; ++i) {
        const auto at = r.offset();
        const auto id = r.u64(fmt);
        if (!t.index.emplace(id, i).second) throw FormatError("FNCEMB1: duplicate id " + std::to_string(id), at);
        t.ids.push_back(id);
        for (std::uint32_t k = 0; k < d; ++k) {
            const auto fo = r.offset();
            const float v = r.f32(fmt);
            if (!std::isfinite(v)) throw FormatError("FNCEMB1: non-finite value for id " + std::to_string(id), fo);
            t.rows(k, i) = v;
        }
    }
    return t;
}

inline EmbeddingTable load_embeddings(const std::string& path) { return decode_embeddings(io::Reader::from_file(path)); }

// ---------------------------------------------------------------------------
// Bandwidth calibration

/// Median pairwise Euclidean distance over at most `batch` images sampled without
/// replacement (seeded). Falls back to 1 when every sampled pair coincides.
inline double median_heuristic(std::span<const RasterImage> imgs, std::uint64_t seed, std::size_t batch = 256) {
    if (imgs.size() < 2) throw ParameterError("median_heuristic: need at least two images");
    std::vector<std::size_t> order(imgs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto rng = make_rng(seed, {0xca11b});
    const std::size_t m = std::min(batch, order.size());
    for (std::size_t i = 0; i < m; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
        std::swap(order[i], order[pick(rng)]);
    }
    std::vector<double> dist;
    dist.reserve(m * (m - 1) / 2);
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a + 1; b < m; ++b) {
            const auto& x = imgs[order[a]].pixels;
            const auto& y = imgs[order[b]].pixels;
            if (x.size() != y.size()) throw ParameterError("median_heuristic: images differ in size");
            double s = 0.0;
            for (std::size_t p = 0; p < x.size(); ++p) s += (x[p] - y[p]) * (x[p] - y[p]);
            dist.push_back(std::sqrt(s));
        }
    auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
    std::nth_element(dist.begin(), mid, dist.end());
    double med = *mid;
    if (dist.size() % 2 == 0) med = 0.5 * (med + *std::max_element(dist.begin(), mid));
    return med > 0.0 ? med : 1.0;
}

// ---------------------------------------------------------------------------
// Encoder

/// A frozen encoder instance. Random weights are drawn once at construction from
/// spec.seed, so encode() is a pure function of the input.
class Encoder {
public:
    Encoder(EncoderSpec spec, int input_dim) : spec_(std::move(spec)), input_dim_(input_dim) {
        if (input_dim_ <= 0) throw ParameterError("encoder: input dimension must be positive");
        switch (spec_.kind) {
            case EncoderKind::pixels:
                spec_.dim = input_dim_;
                break;
            case EncoderKind::rff: init_rff(); break;
            case EncoderKind::frozen_mlp: init_mlp(); break;
            case EncoderKind::external:
                if (spec_.path.empty()) throw ParameterError("external encoder requires an embedding file path");
                table_ = load_embeddings(spec_.path);
                spec_.dim = table_->dim;
                break;
        }
    }

    /// External encoder over an in-memory table.
    explicit Encoder(EmbeddingTable table) : input_dim_(1) {
        spec_.kind = EncoderKind::external;
        spec_.dim = table.dim;
        table_ = std::move(table);
    }

    const EncoderSpec& spec() const noexcept { return spec_; }
    int dim() const noexcept { return spec_.dim; }
    int input_dim() const noexcept { return input_dim_; }
    /// False for table lookups, whose output ignores pixel content (augmentation has no effect).
    bool reads_pixels() const noexcept { return spec_.kind != EncoderKind::external; }

    FeatureMatrix encode_batch(std::span<const RasterImage> imgs, int threads = 1) const {
        const auto n = static_cast<Eigen::Index>(imgs.size());
        FeatureMatrix out(spec_.dim, n);
        if (spec_.kind == EncoderKind::external) {
            for (Eigen::Index i = 0; i < n; ++i) out.col(i) = table_->row(imgs[static_cast<std::size_t>(i)].source_id);
            standardize(out);
            return out;
        }
        constexpr Eigen::Index block = 256;
        const auto blocks = static_cast<std::size_t>((n + block - 1) / block);
        parallel_for(blocks, threads, [&](std::size_t bi) {
            const Eigen::Index lo = static_cast<Eigen::Index>(bi) * block, m = std::min(block, n - lo);
            FeatureMatrix x(input_dim_, m);
            for (Eigen::Index j = 0; j < m; ++j) {
                const auto& img = imgs[static_cast<std::size_t>(lo + j)];
                if (static_cast<int>(img.size()) != input_dim_)
                    throw ParameterError("encoder: image has " + std::to_string(img.size()) + " pixels, expected " +
                                         std::to_string(input_dim_));
                for (int p = 0; p < input_dim_; ++p) x(p, j) = static_cast<float>(img.pixels[static_cast<std::size_t>(p)]);
            }
            out.middleCols(lo, m) = apply(x);
        });
        standardize(out);
        return out;
    }

    FeatureVector encode(const RasterImage& img) const {
        const FeatureMatrix z = encode_batch(std::span<const RasterImage>(&img, 1));
        FeatureVector f;
        f.source_id = img.source_id;
        f.data.assign(z.data(), z.data() + z.size());
        return f;
    }

    /// RFF length scale in use (0 for other kinds).
    double bandwidth() const noexcept { return bandwidth_; }
    /// RFF phase offsets b (empty for other kinds).
    const Eigen::VectorXf& rff_offsets() const noexcept { return b1_; }

    /// Fixes a per-dimension standardization (z - mean) / std from reference features;
    /// dimensions with zero spread keep unit scale.
    void fit_standardizer(const FeatureMatrix& reference) {
        if (reference.rows() != spec_.dim || reference.cols() < 2) throw ParameterError("standardizer: bad reference batch");
        const Eigen::MatrixXd r = reference.cast<double>();
        const Eigen::VectorXd mean = r.rowwise().mean();
        const Eigen::VectorXd sd = ((r.colwise() - mean).rowwise().squaredNorm() / static_cast<double>(r.cols())).cwiseSqrt();
        shift_ = mean.cast<float>();
        inv_scale_ = sd.unaryExpr([](double v) { return v > 0.0 ? 1.0 / v : 1.0; }).cast<float>();
    }
    bool standardized() const noexcept { return shift_.size() > 0; }
    const Eigen::VectorXf& feature_shift() const noexcept { return shift_; }
    const Eigen::VectorXf& feature_inv_scale() const noexcept { return inv_scale_; }
    void set_standardizer(Eigen::VectorXf shift, Eigen::VectorXf inv_scale) {
        if (shift.size() != spec_.dim || inv_scale.size() != spec_.dim) throw ParameterError("standardizer: dimension mismatch");
        shift_ = std::move(shift);
        inv_scale_ = std::move(inv_scale);
    }

private:
    void standardize(FeatureMatrix& z) const {
        if (!standardized()) return;
        z.colwise() -= shift_;
        z.array().colwise() *= inv_scale_.array();
    }

    FeatureMatrix apply(const FeatureMatrix& x) const {
        switch (spec_.kind) {
            case EncoderKind::pixels: return x;
            case EncoderKind::rff: {
                FeatureMatrix z = w1_ * x;
                z.colwise() += b1_;
                return (z.array().cos() * scale_).matrix();
            }
            case EncoderKind::frozen_mlp: {
                FeatureMatrix h = w1_ * x;
                h.colwise() += b1_;
                h = h.array().tanh().matrix();
                FeatureMatrix z = w2_ * h;
                z.colwise() += b2_;
                return z.array().tanh().matrix();
            }
            case EncoderKind::external: break;
        }
        throw Error("encoder: unreachable");
    }

    void init_rff() {
        if (spec_.dim <= 0) throw ParameterError("rff: dim must be positive");
        bandwidth_ = spec_.param("bandwidth", 0.0);
        if (!(bandwidth_ > 0.0)) throw ParameterError("rff: bandwidth must be positive (calibrate it first)");
        auto rng = make_rng(spec_.seed, {0x7ff});
        w1_.resize(spec_.dim, input_dim_);
        b1_.resize(spec_.dim);
        for (Eigen::Index r = 0; r < spec_.dim; ++r)
            for (int c = 0; c < input_dim_; ++c) w1_(r, c) = static_cast<float>(normal(rng) / bandwidth_);
        for (Eigen::Index r = 0; r < spec_.dim; ++r) b1_(r) = static_cast<float>(uniform(rng, 0.0, 2.0 * std::numbers::pi));
        scale_ = static_cast<float>(std::sqrt(2.0 / spec_.dim));
    }

    void init_mlp() {
        if (spec_.dim <= 0) throw ParameterError("frozen_mlp: dim must be positive");
        auto rng = make_rng(spec_.seed, {0x31a});
        const double s1 = 1.0 / std::sqrt(static_cast<double>(input_dim_)), s2 = 1.0 / std::sqrt(static_cast<double>(spec_.dim));
        w1_.resize(spec_.dim, input_dim_);
        w2_.resize(spec_.dim, spec_.dim);
        b1_.resize(spec_.dim);
        b2_.resize(spec_.dim);
        for (Eigen::Index r = 0; r < w1_.rows(); ++r)
            for (Eigen::Index c = 0; c < w1_.cols(); ++c) w1_(r, c) = static_cast<float>(normal(rng, 0.0, s1));
        for (Eigen::Index r = 0; r < spec_.dim; ++r) b1_(r) = static_cast<float>(normal(rng, 0.0, 0.1));
        for (Eigen::Index r = 0; r < w2_.rows(); ++r)
            for (Eigen::Index c = 0; c < w2_.cols(); ++c) w2_(r, c) = static_cast<float>(normal(rng, 0.0, s2));
        for (Eigen::Index r = 0; r < spec_.dim; ++r) b2_(r) = static_cast<float>(normal(rng, 0.0, 0.1));
    }

    EncoderSpec spec_;
    int input_dim_ = 0;
    double bandwidth_ = 0.0;
    float scale_ = 1.0f;
    FeatureMatrix w1_, w2_;
    Eigen::VectorXf b1_, b2_;
    Eigen::VectorXf shift_, inv_scale_;
    std::optional<EmbeddingTable> table_;
};

/// Builds an encoder for `imgs`, running the median heuristic when an RFF spec
/// carries no bandwidth.
inline Encoder make_encoder(EncoderSpec spec, std::span<const RasterImage> imgs) {
    if (imgs.empty() && spec.kind != EncoderKind::external) throw ParameterError("make_encoder: no images");
    if (spec.kind == EncoderKind::rff && !(spec.param("bandwidth", 0.0) > 0.0))
        spec.params["bandwidth"] = median_heuristic(imgs, spec.seed);
    const int input_dim = imgs.empty() ? 1 : static_cast<int>(imgs.front().size());
    return Encoder(std::move(spec), input_dim);
}

inline std::vector<std::uint64_t> source_ids(std::span<const RasterImage> imgs) {
    std::vector<std::uint64_t> ids(imgs.size());
    for (std::size_t i = 0; i < imgs.size(); ++i) ids[i] = imgs[i].source_id;
    return ids;
}

}  // namespace fnclust
