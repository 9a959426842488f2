#include <gtest/gtest.h>

#include <cmath>

#include "dermfair/colorspace.hpp"
#include "dermfair/error.hpp"
#include "dermfair/random.hpp"

using namespace dermfair;
using namespace dermfair::colorspace;

namespace {

// Full-range BT.601 (JFIF) matrix, evaluated directly.
void bt601(double r, double g, double b, double& y, double& cb, double& cr) {
    y = 0.299 * r + 0.587 * g + 0.114 * b;
    cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b;
    cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b;
}

int round_clamp(double v) { return static_cast<int>(std::clamp(std::floor(v + 0.5), 0.0, 255.0)); }

// Textbook sRGB -> XYZ (D65) -> CIELAB with the tabulated white point.
LabPixel lab_oracle(int r8, int g8, int b8) {
    auto lin = [](int v) {
        const double c = v / 255.0;
        return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
    };
    const double r = lin(r8), g = lin(g8), b = lin(b8);
    const double x = 0.4124 * r + 0.3576 * g + 0.1805 * b;
    const double y = 0.2126 * r + 0.7152 * g + 0.0722 * b;
    const double z = 0.0193 * r + 0.1192 * g + 0.9505 * b;
    auto f = [](double t) {
        const double d = 6.0 / 29.0;
        return t > d * d * d ? std::cbrt(t) : t / (3 * d * d) + 4.0 / 29.0;
    };
    const double fx = f(x / 0.95047), fy = f(y / 1.0), fz = f(z / 1.08883);
    return {116 * fy - 16, 500 * (fx - fy), 200 * (fy - fz)};
}

}  // namespace

TEST(YCbCr, AchromaticMapsToChromaMidpoint) {
    EXPECT_EQ(rgb_to_ycbcr({128, 128, 128}), (YCbCr{128, 128, 128}));
    EXPECT_EQ(rgb_to_ycbcr({0, 0, 0}), (YCbCr{0, 128, 128}));
    EXPECT_EQ(rgb_to_ycbcr({255, 255, 255}), (YCbCr{255, 128, 128}));
}

TEST(YCbCr, PureRedMatchesHandEvaluatedMatrix) {
    // Y = 0.299 * 255 = 76.245, Cb = 128 - 0.168736 * 255 = 84.97,
    // Cr = 128 + 127.5 = 255.5 -> clamped.
    EXPECT_EQ(rgb_to_ycbcr({255, 0, 0}), (YCbCr{76, 85, 255}));
}

TEST(YCbCr, RandomPixelsMatchMatrixOracle) {
    Rng rng(11);
    for (int i = 0; i < 20000; ++i) {
        const Rgb p{static_cast<std::uint8_t>(rng.below(256)), static_cast<std::uint8_t>(rng.below(256)),
                    static_cast<std::uint8_t>(rng.below(256))};
        double y, cb, cr;
        bt601(p.r, p.g, p.b, y, cb, cr);
        const YCbCr got = rgb_to_ycbcr(p);
        EXPECT_EQ(got.y, round_clamp(y));
        EXPECT_EQ(got.cb, round_clamp(cb));
        EXPECT_EQ(got.cr, round_clamp(cr));
    }
}

TEST(SkinPredicate, BoundsAreInclusive) {
    EXPECT_TRUE(is_skin_chroma(77, 133));
    EXPECT_TRUE(is_skin_chroma(173, 255));
    EXPECT_TRUE(is_skin_chroma(100, 150));
    EXPECT_FALSE(is_skin_chroma(76, 150));
    EXPECT_FALSE(is_skin_chroma(76, 133));
    EXPECT_FALSE(is_skin_chroma(174, 200));
    EXPECT_FALSE(is_skin_chroma(100, 132));
    // 8-bit Cr cannot exceed 255, so the upper Cr bound is reached by clamping.
    EXPECT_EQ(rgb_to_ycbcr({255, 0, 0}).cr, 255);
}

TEST(SkinMask, GrayImageIsEmpty) {
    const RgbImage gray(16, 16, Rgb{128, 128, 128});
    EXPECT_EQ(skin_mask(gray).count(), 0U);
}

TEST(SkinMask, AgreesWithScalarPredicate) {
    Rng rng(5);
    RgbImage img(100, 100);
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        img.set(i, {static_cast<std::uint8_t>(rng.below(256)), static_cast<std::uint8_t>(rng.below(256)),
                    static_cast<std::uint8_t>(rng.below(256))});
    }
    const SkinMask mask = skin_mask(img);
    std::size_t skin = 0;
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        const YCbCr c = rgb_to_ycbcr(img.at(i));
        EXPECT_EQ(mask[i], is_skin_chroma(c.cb, c.cr));
        skin += mask[i];
    }
    EXPECT_GT(skin, 0U);
}

TEST(Lab, WhiteAndBlack) {
    const LabPixel w = srgb_to_lab({255, 255, 255});
    EXPECT_NEAR(w.l_star, 100.0, 1e-9);
    EXPECT_LT(std::abs(w.b_star), 0.01);
    EXPECT_LT(std::abs(w.a_star), 0.01);
    EXPECT_NEAR(srgb_to_lab({0, 0, 0}).l_star, 0.0, 1e-12);
}

TEST(Lab, MidGrayMatchesColorimetricOracle) {
    const LabPixel got = srgb_to_lab({119, 119, 119});
    const LabPixel want = lab_oracle(119, 119, 119);
    EXPECT_NEAR(got.l_star, want.l_star, 1e-3);
    EXPECT_NEAR(got.l_star, 50.0, 0.05);
    EXPECT_LT(std::abs(got.a_star), 1e-9);
    EXPECT_LT(std::abs(got.b_star), 1e-9);
}

TEST(Lab, ChromaticColoursMatchOracle) {
    Rng rng(3);
    for (int i = 0; i < 2000; ++i) {
        const int r = static_cast<int>(rng.below(256));
        const int g = static_cast<int>(rng.below(256));
        const int b = static_cast<int>(rng.below(256));
        const LabPixel got = srgb_to_lab({static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                                          static_cast<std::uint8_t>(b)});
        const LabPixel want = lab_oracle(r, g, b);
        EXPECT_NEAR(got.l_star, want.l_star, 0.02);
        EXPECT_NEAR(got.a_star, want.a_star, 0.1);
        EXPECT_NEAR(got.b_star, want.b_star, 0.1);
    }
}

TEST(Lab, InverseRoundTrips) {
    for (int v = 0; v < 256; v += 5) {
        const LabPixel lab = srgb_to_lab({static_cast<std::uint8_t>(v), 90, 200});
        double r, g, b;
        lab_to_linear(lab, r, g, b);
        EXPECT_NEAR(linear_to_srgb(r) * 255.0, v, 1e-6);
        EXPECT_NEAR(linear_to_srgb(g) * 255.0, 90, 1e-6);
        EXPECT_NEAR(linear_to_srgb(b) * 255.0, 200, 1e-6);
    }
}

TEST(Lab, MeanOverMask) {
    RgbImage img(4, 1, Rgb{255, 255, 255});
    img.set(0, 0, {0, 0, 0});
    Mask m(4, 1);
    m.set(0, 0, true);
    m.set(1, 0, true);
    EXPECT_NEAR(mean_lab(img, m).l_star, 50.0, 1e-9);
    EXPECT_THROW(mean_lab(img, Mask(4, 1)), Error);
    EXPECT_THROW(mean_lab(img, Mask(3, 1, true)), Error);
}
