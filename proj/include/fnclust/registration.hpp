#pragma once

// Registration: trajectories -> fixed-size S x S grids in [0, 1].
//
// Images are row-major with row 0 at the top. A trajectory value of +1 lands on
// row 0 and -1 on row S-1; time runs left to right over columns 0..S-1.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fnclust/binary_io.hpp"
#include "fnclust/dynsys/dataset.hpp"
#include "fnclust/error.hpp"
#include "fnclust/parallel.hpp"
#include "fnclust/random.hpp"

namespace fnclust {

enum class ImageKind : std::uint8_t { trajectory = 0, spectrogram = 1 };

struct RasterImage {
    int res = 0;
    std::vector<double> pixels;  // res * res, row-major
    ImageKind kind = ImageKind::trajectory;
    std::uint64_t source_id = 0;

    RasterImage() = default;
    RasterImage(int s, ImageKind k, std::uint64_t id = 0)
        : res(s), pixels(static_cast<std::size_t>(s) * static_cast<std::size_t>(s), 0.0), kind(k), source_id(id) {}

    double& at(int row, int col) { return pixels[static_cast<std::size_t>(row) * res + col]; }
    double at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * res + col]; }
    std::size_t size() const noexcept { return pixels.size(); }
};

struct AugmentedPair {
    RasterImage view_a;
    RasterImage view_b;
    std::uint64_t source_id = 0;
};

/// Affine map sending min -> -1 and max -> +1; constant input maps to zeros.
inline std::vector<double> normalize(std::span<const double> values) {
    std::vector<double> out(values.size(), 0.0);
    if (values.empty()) return out;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double a = *lo, b = *hi;
    if (!(b > a)) return out;
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = std::clamp(2.0 * (values[i] - a) / (b - a) - 1.0, -1.0, 1.0);
    out[static_cast<std::size_t>(lo - values.begin())] = -1.0;
    out[static_cast<std::size_t>(hi - values.begin())] = 1.0;
    return out;
}

namespace detail {

inline void plot_max(RasterImage& img, int row, int col, double v) {
    if (row < 0 || col < 0 || row >= img.res || col >= img.res || v <= 0.0) return;
    double& p = img.at(row, col);
    p = std::max(p, std::min(v, 1.0));
}

// Bilinear splat of a single point (x = column, y = row).
inline void splat(RasterImage& img, double x, double y) {
    const int cx = static_cast<int>(std::floor(x)), cy = static_cast<int>(std::floor(y));
    const double fx = x - cx, fy = y - cy;
    plot_max(img, cy, cx, (1 - fx) * (1 - fy));
    plot_max(img, cy, cx + 1, fx * (1 - fy));
    plot_max(img, cy + 1, cx, (1 - fx) * fy);
    plot_max(img, cy + 1, cx + 1, fx * fy);
}

// Coverage-weighted segment in the style of Wu: at each integer step along the
// major axis the intensity is split between the two nearest minor-axis pixels.
inline void draw_segment(RasterImage& img, double x0, double y0, double x1, double y1) {
    const bool steep = std::abs(y1 - y0) > std::abs(x1 - x0);
    if (steep) {
        std::swap(x0, y0);
        std::swap(x1, y1);
    }
    if (x0 > x1) {
        std::swap(x0, x1);
        std::swap(y0, y1);
    }
    const double dx = x1 - x0;
    const double grad = dx > 0.0 ? (y1 - y0) / dx : 0.0;
    for (int ix = static_cast<int>(std::ceil(x0)); ix <= static_cast<int>(std::floor(x1)); ++ix) {
        const double y = y0 + (ix - x0) * grad;
        const int fy = static_cast<int>(std::floor(y));
        const double frac = y - fy;
        if (steep) {
            plot_max(img, ix, fy, 1.0 - frac);
            plot_max(img, ix, fy + 1, frac);
        } else {
            plot_max(img, fy, ix, 1.0 - frac);
            plot_max(img, fy + 1, ix, frac);
        }
    }
}

}  // namespace detail

/// Anti-aliased polyline of (times, values) with values already in [-1, 1].
inline RasterImage rasterize(std::span<const double> times, std::span<const double> values, int res,
                             std::uint64_t source_id = 0) {
    if (res < 2) throw ParameterError("rasterize: res must be >= 2");
    if (times.size() != values.size() || times.size() < 2)
        throw ParameterError("rasterize: need matching times/values of length >= 2");
    RasterImage img(res, ImageKind::trajectory, source_id);
    const double t0 = times.front(), span = times.back() - times.front();
    if (!(span > 0.0)) throw ParameterError("rasterize: times must increase");
    const double top = res - 1;
    auto px = [&](std::size_t j) { return (times[j] - t0) / span * top; };
    auto py = [&](std::size_t j) { return (1.0 - std::clamp(values[j], -1.0, 1.0)) * 0.5 * top; };
    for (std::size_t j = 0; j + 1 < times.size(); ++j) detail::draw_segment(img, px(j), py(j), px(j + 1), py(j + 1));
    for (std::size_t j = 0; j < times.size(); ++j) detail::splat(img, px(j), py(j));
    return img;
}

/// Normalizes the trajectory's values and rasterizes them.
inline RasterImage rasterize(const Trajectory& tr, int res) {
    const auto v = normalize(tr.values);
    return rasterize(tr.times, v, res, tr.id);
}

// ---------------------------------------------------------------------------
// Spectrograms

struct StftOptions {
    int window = 32;
    int hop = 8;
};

/// |STFT| with a periodic Hann window: rows are frequency bins 0..window/2, columns are frames.
inline Eigen::MatrixXd stft_magnitude(std::span<const double> values, const StftOptions& opt = {}) {
    if (opt.hop <= 0) throw ParameterError("stft: hop must be positive");
    if (opt.window <= 0) throw ParameterError("stft: window must be positive");
    if (static_cast<std::size_t>(opt.window) > values.size())
        throw ParameterError("stft: window longer than the signal");
    const int w = opt.window;
    const int frames = 1 + static_cast<int>((values.size() - static_cast<std::size_t>(w)) / static_cast<std::size_t>(opt.hop));
    const int bins = w / 2 + 1;
    std::vector<double> hann(static_cast<std::size_t>(w));
    for (int n = 0; n < w; ++n) hann[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / w);

    Eigen::MatrixXd mag(bins, frames);
    for (int f = 0; f < frames; ++f) {
        const std::size_t off = static_cast<std::size_t>(f) * static_cast<std::size_t>(opt.hop);
        for (int k = 0; k < bins; ++k) {
            std::complex<double> acc{0.0, 0.0};
            for (int n = 0; n < w; ++n) {
                const double ang = -2.0 * std::numbers::pi * k * n / w;
                acc += hann[n] * values[off + static_cast<std::size_t>(n)] * std::complex<double>(std::cos(ang), std::sin(ang));
            }
            mag(k, f) = std::abs(acc);
        }
    }
    return mag;
}

namespace detail {

inline double bilinear(const Eigen::MatrixXd& m, double r, double c) {
    const auto rows = m.rows(), cols = m.cols();
    r = std::clamp(r, 0.0, static_cast<double>(rows - 1));
    c = std::clamp(c, 0.0, static_cast<double>(cols - 1));
    const auto r0 = static_cast<Eigen::Index>(std::floor(r)), c0 = static_cast<Eigen::Index>(std::floor(c));
    const auto r1 = std::min(r0 + 1, rows - 1), c1 = std::min(c0 + 1, cols - 1);
    const double fr = r - r0, fc = c - c0;
    return (1 - fr) * ((1 - fc) * m(r0, c0) + fc * m(r0, c1)) + fr * ((1 - fc) * m(r1, c0) + fc * m(r1, c1));
}

inline void minmax_normalize(std::vector<double>& px) {
    const auto [lo, hi] = std::minmax_element(px.begin(), px.end());
    const double a = *lo, b = *hi;
    if (!(b > a)) {
        std::fill(px.begin(), px.end(), 0.0);
        return;
    }
    for (auto& p : px) p = std::clamp((p - a) / (b - a), 0.0, 1.0);
}

}  // namespace detail

/// log(1 + |STFT|) resampled to res x res (low frequencies at the bottom), min-max scaled to [0, 1].
inline RasterImage spectrogram(std::span<const double> values, int res, const StftOptions& opt = {},
                               std::uint64_t source_id = 0) {
    if (res < 2) throw ParameterError("spectrogram: res must be >= 2");
    Eigen::MatrixXd mag = stft_magnitude(values, opt);
    mag = mag.array().log1p().matrix();
    RasterImage img(res, ImageKind::spectrogram, source_id);
    const double rs = mag.rows() > 1 ? static_cast<double>(mag.rows() - 1) / (res - 1) : 0.0;
    const double cs = mag.cols() > 1 ? static_cast<double>(mag.cols() - 1) / (res - 1) : 0.0;
    for (int i = 0; i < res; ++i)
        for (int j = 0; j < res; ++j) img.at(i, j) = detail::bilinear(mag, (res - 1 - i) * rs, j * cs);
    detail::minmax_normalize(img.pixels);
    return img;
}

inline RasterImage spectrogram(const Trajectory& tr, int res, const StftOptions& opt = {}) {
    const auto v = normalize(tr.values);
    return spectrogram(v, res, opt, tr.id);
}

// ---------------------------------------------------------------------------
// Augmentation

struct AugmentOptions {
    double crop_min = 0.8;
    double crop_max = 1.0;
    double sigma_min = 0.1;
    double sigma_max = 1.5;
};

/// Crops a square of side frac * (S - 1) at (row0, col0) and resamples it bilinearly to S x S.
inline RasterImage crop_resize(const RasterImage& img, double frac, double row0, double col0) {
    RasterImage out(img.res, img.kind, img.source_id);
    const int S = img.res;
    const double step = frac;  // output spacing in source pixels: frac * (S-1) / (S-1)
    struct Tap {
        int i0, i1;
        double f;
    };
    auto taps = [S, step](double origin) {
        std::vector<Tap> t(static_cast<std::size_t>(S));
        for (int i = 0; i < S; ++i) {
            const double r = std::clamp(origin + i * step, 0.0, static_cast<double>(S - 1));
            const int r0 = static_cast<int>(std::floor(r));
            t[static_cast<std::size_t>(i)] = {r0, std::min(r0 + 1, S - 1), r - r0};
        }
        return t;
    };
    const auto rt = taps(row0), ct = taps(col0);
    for (int i = 0; i < S; ++i) {
        const auto [r0, r1, fr] = rt[static_cast<std::size_t>(i)];
        for (int j = 0; j < S; ++j) {
            const auto [c0, c1, fc] = ct[static_cast<std::size_t>(j)];
            out.at(i, j) = (1 - fr) * ((1 - fc) * img.at(r0, c0) + fc * img.at(r0, c1)) +
                           fr * ((1 - fc) * img.at(r1, c0) + fc * img.at(r1, c1));
        }
    }
    return out;
}

/// Separable Gaussian blur with replicated borders; constants are preserved exactly up to rounding.
inline RasterImage gaussian_blur(const RasterImage& img, double sigma) {
    if (!(sigma > 0.0)) return img;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (int d = -radius; d <= radius; ++d) total += k[static_cast<std::size_t>(d + radius)] = std::exp(-0.5 * d * d / (sigma * sigma));
    for (auto& v : k) v /= total;

    const int S = img.res;
    std::vector<int> idx(static_cast<std::size_t>(S + 2 * radius));
    for (int x = -radius; x < S + radius; ++x) idx[static_cast<std::size_t>(x + radius)] = std::clamp(x, 0, S - 1);
    RasterImage tmp(S, img.kind, img.source_id), out(S, img.kind, img.source_id);
    std::vector<double> line(static_cast<std::size_t>(S + 2 * radius));
    for (int i = 0; i < S; ++i) {
        for (std::size_t x = 0; x < line.size(); ++x) line[x] = img.at(i, idx[x]);
        for (int j = 0; j < S; ++j) {
            double acc = 0.0;
            for (int d = 0; d <= 2 * radius; ++d) acc += k[static_cast<std::size_t>(d)] * line[static_cast<std::size_t>(j + d)];
            tmp.at(i, j) = acc;
        }
    }
    std::vector<double> acc(static_cast<std::size_t>(S));
    for (int i = 0; i < S; ++i) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int d = 0; d <= 2 * radius; ++d) {
            const double w = k[static_cast<std::size_t>(d)];
            const int r = idx[static_cast<std::size_t>(i + d)];
            for (int j = 0; j < S; ++j) acc[static_cast<std::size_t>(j)] += w * tmp.at(r, j);
        }
        for (int j = 0; j < S; ++j) out.at(i, j) = std::clamp(acc[static_cast<std::size_t>(j)], 0.0, 1.0);
    }
    return out;
}

/// RandomCrop (side fraction in [crop_min, crop_max], uniform position) then GaussianBlur (sigma in [sigma_min, sigma_max]).
inline RasterImage augment(const RasterImage& img, Rng& rng, const AugmentOptions& opt = {}) {
    const double frac = uniform(rng, opt.crop_min, std::nextafter(opt.crop_max, 2.0));
    const double slack = (1.0 - std::min(frac, 1.0)) * (img.res - 1);
    const double row0 = uniform(rng, 0.0, std::nextafter(slack, 1e300));
    const double col0 = uniform(rng, 0.0, std::nextafter(slack, 1e300));
    const double sigma = uniform(rng, opt.sigma_min, std::nextafter(opt.sigma_max, 1e300));
    auto out = gaussian_blur(crop_resize(img, std::min(frac, 1.0), row0, col0), sigma);
    for (auto& p : out.pixels) p = std::clamp(p, 0.0, 1.0);
    return out;
}

inline AugmentedPair make_pair(const RasterImage& img, std::uint64_t seed, const AugmentOptions& opt = {}) {
    auto ra = make_rng(seed, {img.source_id, 0});
    auto rb = make_rng(seed, {img.source_id, 1});
    return {augment(img, ra, opt), augment(img, rb, opt), img.source_id};
}

// ---------------------------------------------------------------------------
// Batch registration and file formats

struct RegistrationSpec {
    int res = 64;
    bool spectrogram = false;
    StftOptions stft{};
};

inline std::vector<RasterImage> register_dataset(const Dataset& ds, const RegistrationSpec& spec, int threads = 1) {
    std::vector<RasterImage> out(ds.size());
    parallel_for(ds.size(), threads, [&](std::size_t i) {
        const auto& tr = ds.trajectories[i];
        out[i] = spec.spectrogram ? spectrogram(tr, spec.res, spec.stft) : rasterize(tr, spec.res);
    });
    return out;
}

/// Binary greyscale PGM (P5), 8-bit.
inline void save_pgm(const RasterImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path);
    out << "P5\n" << img.res << ' ' << img.res << "\n255\n";
    for (double p : img.pixels) out.put(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(p, 0.0, 1.0) * 255.0))));
}

inline constexpr const char* kImageMagic = "FNCIMG1";

/// "FNCIMG1" | u32 N | u32 S | u8 kind | N*S*S f32 (row-major per image). Ids are implicit (0..N-1 order of the batch).
inline io::Writer encode_images(std::span<const RasterImage> imgs) {
    io::Writer w;
    w.magic(kImageMagic, false);
    const int S = imgs.empty() ? 0 : imgs.front().res;
    const auto kind = imgs.empty() ? ImageKind::trajectory : imgs.front().kind;
    w.u32(static_cast<std::uint32_t>(imgs.size()));
    w.u32(static_cast<std::uint32_t>(S));
    w.u8(static_cast<std::uint8_t>(kind));
    for (const auto& img : imgs) {
        if (img.res != S || img.kind != kind) throw ParameterError("encode_images: mixed resolutions or kinds");
        for (double p : img.pixels) w.f32(static_cast<float>(p));
    }
    return w;
}

inline void save_images(std::span<const RasterImage> imgs, const std::string& path) { encode_images(imgs).save(path); }

inline std::vector<RasterImage> load_images(const std::string& path) {
    constexpr const char* fmt = "FNCIMG1";
    auto r = io::Reader::from_file(path);
    r.expect_magic(kImageMagic, false, fmt);
    const auto n = r.u32(fmt);
    const auto S = r.u32(fmt);
    const auto kind_offset = r.offset();
    const auto kind = r.u8(fmt);
    if (kind > 1) throw FormatError("FNCIMG1: unknown image kind", kind_offset);
    r.expect_remaining(static_cast<std::size_t>(n) * S * S * sizeof(float), fmt);
    std::vector<RasterImage> out;
    out.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        RasterImage img(static_cast<int>(S), static_cast<ImageKind>(kind), i);
        for (auto& p : img.pixels) p = r.f32(fmt);
        out.push_back(std::move(img));
    }
    return out;
}

}  // namespace fnclust
