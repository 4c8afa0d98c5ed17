#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <gtest/gtest.h>

#include "fnclust/dynsys/generators.hpp"
#include "fnclust/registration.hpp"

using namespace fnclust;

namespace {

std::vector<double> linspace(double a, double b, int n) { return dynsys::uniform_grid(a, b, n); }

RasterImage random_image(int res, std::uint64_t seed) {
    RasterImage img(res, ImageKind::trajectory);
    auto rng = make_rng(seed);
    for (auto& p : img.pixels) p = uniform(rng, 0.0, 1.0);
    return img;
}

}  // namespace

TEST(Normalize, AffineEndpoints) {
    EXPECT_EQ(normalize(std::vector<double>{2, 4, 6}), (std::vector<double>{-1, 0, 1}));
    EXPECT_EQ(normalize(std::vector<double>{5, 5, 5}), (std::vector<double>{0, 0, 0}));
    EXPECT_EQ(normalize(std::vector<double>{-1, 1}), (std::vector<double>{-1, 1}));
}

TEST(Normalize, Idempotent) {
    auto rng = make_rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v(37);
        for (auto& x : v) x = normal(rng, 3.0, 10.0);
        const auto once = normalize(v);
        const auto twice = normalize(once);
        for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(twice[i], once[i], 1e-15);
    }
}

TEST(Rasterize, HorizontalLineAtCenterLightsMiddleRows) {
    // Oracle: the polyline y = 1.5 crosses every column halfway between rows 1 and 2,
    // so coverage splits 0.5 / 0.5 there and rows 0 and 3 stay dark.
    const auto t = linspace(0.0, 1.0, 11);
    const std::vector<double> v(11, 0.0);
    const auto img = rasterize(t, v, 4);
    for (int c = 0; c < 4; ++c) {
        EXPECT_EQ(img.at(0, c), 0.0);
        EXPECT_EQ(img.at(3, c), 0.0);
        EXPECT_NEAR(img.at(1, c), 0.5, 1e-12);
        EXPECT_NEAR(img.at(2, c), 0.5, 1e-12);
    }
}

TEST(Rasterize, DiagonalLightsAntiDiagonal) {
    const auto img = rasterize(std::vector<double>{0.0, 1.0}, std::vector<double>{-1.0, 1.0}, 2);
    EXPECT_NEAR(img.at(1, 0), 1.0, 1e-12);
    EXPECT_NEAR(img.at(0, 1), 1.0, 1e-12);
    EXPECT_NEAR(img.at(0, 0), 0.0, 1e-12);
    EXPECT_NEAR(img.at(1, 1), 0.0, 1e-12);
}

TEST(Rasterize, FullResolutionSizeAndRange) {
    const auto ds = dynsys::gen_ode6(1, 4);
    for (const auto& tr : ds.trajectories) {
        const auto img = rasterize(tr, 224);
        ASSERT_EQ(img.size(), 50176u);
        double mx = 0.0;
        for (double p : img.pixels) {
            ASSERT_GE(p, 0.0);
            ASSERT_LE(p, 1.0);
            mx = std::max(mx, p);
        }
        EXPECT_GT(mx, 0.0);
    }
}

TEST(Rasterize, InvariantToTimeOffset) {
    const auto ds = dynsys::gen_ode6(1, 5);
    for (const auto& tr : ds.trajectories) {
        auto shifted = tr;
        for (auto& t : shifted.times) t += 17.0;
        const auto a = rasterize(tr, 32), b = rasterize(shifted, 32);
        for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a.pixels[i], b.pixels[i], 1e-9);
    }
}

TEST(Rasterize, RejectsTinyResolution) {
    EXPECT_THROW(rasterize(std::vector<double>{0, 1}, std::vector<double>{0, 0}, 1), ParameterError);
}

TEST(Spectrogram, SinusoidPeaksAtExpectedBin) {
    // DFT oracle: a tone of f cycles per T samples sits at bin f * window / T.
    // window / T = 0.6 keeps every tone within 0.2 bins of an integer bin.
    const int T = 160;
    const StftOptions opt{96, 8};
    for (double cycles : {2.0, 5.0, 10.0}) {
        for (double phase : {0.0, 0.7, 1.9}) {
            std::vector<double> v(T);
            for (int n = 0; n < T; ++n) v[n] = std::sin(2.0 * std::numbers::pi * cycles * n / T + phase);
            const auto mag = stft_magnitude(v, opt);
            const auto expected = static_cast<Eigen::Index>(std::lround(cycles * opt.window / T));
            for (Eigen::Index f = 1; f + 1 < mag.cols(); ++f) {
                Eigen::Index arg;
                mag.col(f).maxCoeff(&arg);
                EXPECT_EQ(arg, expected) << "cycles=" << cycles << " frame=" << f;
            }
        }
    }
}

TEST(Spectrogram, HigherToneOnLongerGrid) {
    const int T = 1024;
    const StftOptions opt{64, 16};
    std::vector<double> v(T);
    const double cycles = 80.0;
    for (int n = 0; n < T; ++n) v[n] = std::cos(2.0 * std::numbers::pi * cycles * n / T);
    const auto mag = stft_magnitude(v, opt);
    for (Eigen::Index f = 1; f + 1 < mag.cols(); ++f) {
        Eigen::Index arg;
        mag.col(f).maxCoeff(&arg);
        EXPECT_EQ(arg, 5);
    }
}

TEST(Spectrogram, ZeroAndConstantInputs) {
    const std::vector<double> zeros(101, 0.0), ones(101, 1.0);
    const auto img = spectrogram(zeros, 16);
    for (double p : img.pixels) EXPECT_EQ(p, 0.0);
    const auto mag = stft_magnitude(ones);
    for (Eigen::Index f = 0; f < mag.cols(); ++f) {
        Eigen::Index arg;
        mag.col(f).maxCoeff(&arg);
        EXPECT_EQ(arg, 0);
    }
}

TEST(Spectrogram, ParameterErrors) {
    const std::vector<double> v(64, 1.0);
    EXPECT_THROW(stft_magnitude(v, {32, 0}), ParameterError);
    EXPECT_THROW(stft_magnitude(v, {128, 8}), ParameterError);
    const auto img = spectrogram(v, 8);
    EXPECT_EQ(img.kind, ImageKind::spectrogram);
    EXPECT_EQ(img.size(), 64u);
}

TEST(Augment, IdentityLimits) {
    const auto img = random_image(20, 1);
    const auto same = gaussian_blur(crop_resize(img, 1.0, 0.0, 0.0), 1e-3);
    for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(same.pixels[i], img.pixels[i], 1e-6);

    AugmentOptions degenerate{1.0, 1.0, 1e-3, 1e-3};
    auto rng = make_rng(9);
    const auto aug = augment(img, rng, degenerate);
    for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(aug.pixels[i], img.pixels[i], 1e-6);
}

TEST(Augment, ConstantImageStaysConstant) {
    RasterImage img(24, ImageKind::trajectory);
    std::fill(img.pixels.begin(), img.pixels.end(), 0.37);
    for (std::uint64_t s = 0; s < 10; ++s) {
        auto rng = make_rng(s);
        const auto out = augment(img, rng);
        for (double p : out.pixels) EXPECT_NEAR(p, 0.37, 1e-12);
    }
}

TEST(Augment, DeterministicAndRangePreserving) {
    const auto img = random_image(32, 2);
    auto r1 = make_rng(77), r2 = make_rng(77);
    const auto a = augment(img, r1), b = augment(img, r2);
    EXPECT_EQ(a.pixels, b.pixels);
    EXPECT_EQ(a.res, img.res);
    for (double p : a.pixels) {
        EXPECT_GE(p, 0.0);
        EXPECT_LE(p, 1.0);
    }
    const auto pair = make_pair(img, 5);
    EXPECT_EQ(pair.view_a.res, pair.view_b.res);
    EXPECT_EQ(pair.view_a.kind, pair.view_b.kind);
    EXPECT_NE(pair.view_a.pixels, pair.view_b.pixels);
}

TEST(ImageIo, BatchRoundTripAndPgm) {
    const auto ds = dynsys::gen_ode6(1, 6);
    const auto imgs = register_dataset(ds, {16, false, {}});
    const auto dir = std::filesystem::temp_directory_path() / "fnclust_img_test";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "b.fncimg").string();
    save_images(imgs, path);
    const auto back = load_images(path);
    ASSERT_EQ(back.size(), imgs.size());
    for (std::size_t i = 0; i < imgs.size(); ++i)
        for (std::size_t p = 0; p < imgs[i].size(); ++p)
            EXPECT_EQ(back[i].pixels[p], static_cast<double>(static_cast<float>(imgs[i].pixels[p])));
    EXPECT_EQ(std::filesystem::file_size(path), 7u + 9u + imgs.size() * 16u * 16u * 4u);

    save_pgm(imgs[0], (dir / "a.pgm").string());
    std::ifstream pgm(dir / "a.pgm", std::ios::binary);
    std::string magic;
    pgm >> magic;
    EXPECT_EQ(magic, "P5");
    std::filesystem::remove_all(dir);
}
