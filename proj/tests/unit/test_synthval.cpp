#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "dermfair/error.hpp"
#include "dermfair/random.hpp"
#include "dermfair/synthval.hpp"
#include "fixture_gen.hpp"

using namespace dermfair;
using namespace dermfair::synthval;

namespace {

GrayImage random_gray(Rng& rng, int w, int h) {
    GrayImage g(w, h);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<std::uint8_t>(rng.below(256));
    return g;
}

// Direct evaluation of every window.
double ssim_oracle(const GrayImage& a, const GrayImage& b, int win) {
    const int ww = std::min(win, a.width());
    const int wh = std::min(win, a.height());
    double total = 0.0;
    int count = 0;
    for (int y0 = 0; y0 + wh <= a.height(); ++y0) {
        for (int x0 = 0; x0 + ww <= a.width(); ++x0) {
            double ma = 0, mb = 0;
            for (int y = y0; y < y0 + wh; ++y)
                for (int x = x0; x < x0 + ww; ++x) ma += a(x, y), mb += b(x, y);
            const double n = double(ww) * wh;
            ma /= n;
            mb /= n;
            double va = 0, vb = 0, cov = 0;
            for (int y = y0; y < y0 + wh; ++y) {
                for (int x = x0; x < x0 + ww; ++x) {
                    va += (a(x, y) - ma) * (a(x, y) - ma);
                    vb += (b(x, y) - mb) * (b(x, y) - mb);
                    cov += (a(x, y) - ma) * (b(x, y) - mb);
                }
            }
            va /= n;
            vb /= n;
            cov /= n;
            total += ((2 * ma * mb + kSsimC1) * (2 * cov + kSsimC2)) /
                     ((ma * ma + mb * mb + kSsimC1) * (va + vb + kSsimC2));
            ++count;
        }
    }
    return total / count;
}

// Pair enumeration over the four offsets, both directions counted.
GlcmFeatures glcm_oracle(const GrayImage& img, int levels, unsigned angles) {
    const int offsets[4][2] = {{1, 0}, {1, -1}, {0, -1}, {-1, -1}};
    std::map<std::pair<int, int>, double> counts;
    double total = 0;
    for (int k = 0; k < 4; ++k) {
        if (!(angles & (1U << k))) continue;
        for (int y = 0; y < img.height(); ++y) {
            for (int x = 0; x < img.width(); ++x) {
                const int xx = x + offsets[k][0], yy = y + offsets[k][1];
                if (xx < 0 || yy < 0 || xx >= img.width() || yy >= img.height()) continue;
                const int i = img(x, y) * levels / 256, j = img(xx, yy) * levels / 256;
                counts[{i, j}] += 1;
                counts[{j, i}] += 1;
                total += 2;
            }
        }
    }
    double mu = 0;
    for (const auto& [ij, c] : counts) mu += ij.first * c / total;
    double var = 0;
    for (const auto& [ij, c] : counts) var += (ij.first - mu) * (ij.first - mu) * c / total;
    GlcmFeatures f;
    double cor = 0;
    for (const auto& [ij, c] : counts) {
        const double p = c / total;
        const double d = ij.first - ij.second;
        f.contrast += d * d * p;
        f.energy += p * p;
        f.homogeneity += p / (1 + d * d);
        cor += (ij.first - mu) * (ij.second - mu) * p;
    }
    f.correlation = var > 0 ? cor / var : 1.0;
    return f;
}

GrayImage stripes(int n) {
    GrayImage g(n, n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) g(x, y) = x % 2 ? 255 : 0;
    return g;
}

}  // namespace

TEST(Histogram, AllBlack) {
    const RgbHistograms h = rgb_histograms(RgbImage(8, 8), 256);
    EXPECT_EQ(h.channels[0][0], 1.0);
    for (int b = 1; b < 256; ++b) EXPECT_EQ(h.channels[0][static_cast<std::size_t>(b)], 0.0);
}

TEST(Histogram, HalfBlackHalfWhite) {
    RgbImage img(8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 4; x < 8; ++x) img.set(x, y, {255, 255, 255});
    const RgbHistograms h = rgb_histograms(img, 32);
    for (const auto& c : h.channels) {
        EXPECT_EQ(c.front(), 0.5);
        EXPECT_EQ(c.back(), 0.5);
    }
}

TEST(Histogram, UniformNoiseIsFlat) {
    Rng rng(12);
    RgbImage img(224, 224);
    for (auto& b : img.bytes()) b = static_cast<std::uint8_t>(rng.below(256));
    const RgbHistograms h = rgb_histograms(img, 16);
    for (const auto& c : h.channels) {
        for (double v : c) EXPECT_NEAR(v, 0.0625, 0.01);
    }
}

TEST(HistDistance, Cases) {
    const std::vector<double> a = {0.2, 0.3, 0.5};
    EXPECT_EQ(hist_distance(a, a), 0.0);
    const std::vector<double> e0 = {1, 0}, e1 = {0, 1};
    EXPECT_DOUBLE_EQ(hist_distance(e0, e1), 1.0);
    EXPECT_THROW(hist_distance(a, e0), Error);
    const std::vector<double> b = {0.3, 0.2, 0.5};
    const std::vector<double> sym = {0.25, 0.25, 0.5};
    EXPECT_DOUBLE_EQ(hist_distance(a, sym), hist_distance(b, sym));
    EXPECT_DOUBLE_EQ(hist_distance(a, b), hist_distance(b, a));
}

TEST(Ssim, IdentityAndConstants) {
    Rng rng(1);
    const GrayImage a = random_gray(rng, 32, 24);
    EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
    const double want = (2 * 100.0 * 120.0 + kSsimC1) / (100.0 * 100.0 + 120.0 * 120.0 + kSsimC1);
    EXPECT_NEAR(ssim(GrayImage(16, 16, 100), GrayImage(16, 16, 120)), want, 1e-12);
    EXPECT_NEAR(want, 0.9836, 1e-3);
}

TEST(Ssim, MatchesWindowOracleAndIsSymmetric) {
    Rng rng(2);
    for (int t = 0; t < 20; ++t) {
        const int w = 4 + static_cast<int>(rng.below(20));
        const int h = 4 + static_cast<int>(rng.below(20));
        const GrayImage a = random_gray(rng, w, h);
        GrayImage b = a;
        for (std::size_t i = 0; i < b.size(); ++i) {
            b[i] = static_cast<std::uint8_t>(std::clamp<int>(b[i] + int(rng.below(61)) - 30, 0, 255));
        }
        EXPECT_NEAR(ssim(a, b), ssim_oracle(a, b, 8), 1e-9);
        EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
    }
}

TEST(Ssim, DimensionMismatch) {
    EXPECT_THROW(ssim(GrayImage(8, 8), GrayImage(8, 9)), Error);
}

TEST(Glcm, ConstantImage) {
    const GlcmFeatures f = glcm_features(GrayImage(16, 16, 90));
    EXPECT_EQ(f.contrast, 0.0);
    EXPECT_EQ(f.energy, 1.0);
    EXPECT_EQ(f.homogeneity, 1.0);
    EXPECT_EQ(f.correlation, 1.0);
}

TEST(Glcm, StripeFixtureByHand) {
    // 4x4, columns alternate 0/255; two levels; horizontal pairs only. Each of
    // the 12 pairs alternates, so P(0,1) = P(1,0) = 1/2.
    const GlcmFeatures f = glcm_features(stripes(4), 2, kAngle0);
    EXPECT_DOUBLE_EQ(f.contrast, 1.0);
    EXPECT_DOUBLE_EQ(f.energy, 0.5);
    EXPECT_DOUBLE_EQ(f.homogeneity, 0.5);
    EXPECT_DOUBLE_EQ(f.correlation, -1.0);
    // Vertical pairs never change level.
    const GlcmFeatures v = glcm_features(stripes(4), 2, kAngle90);
    EXPECT_DOUBLE_EQ(v.contrast, 0.0);
    EXPECT_DOUBLE_EQ(v.energy, 0.5);
}

TEST(Glcm, MatchesPairEnumeration) {
    Rng rng(6);
    for (int t = 0; t < 30; ++t) {
        const GrayImage img = random_gray(rng, 3 + int(rng.below(12)), 3 + int(rng.below(12)));
        const int levels = 2 + static_cast<int>(rng.below(63));
        const unsigned angles = 1 + static_cast<unsigned>(rng.below(15));
        const GlcmFeatures got = glcm_features(img, levels, angles);
        const GlcmFeatures want = glcm_oracle(img, levels, angles);
        EXPECT_NEAR(got.contrast, want.contrast, 1e-9);
        EXPECT_NEAR(got.energy, want.energy, 1e-12);
        EXPECT_NEAR(got.homogeneity, want.homogeneity, 1e-12);
        EXPECT_NEAR(got.correlation, want.correlation, 1e-9);
    }
}

TEST(Glcm, TransposeInvariantWithAllAngles) {
    Rng rng(7);
    const GrayImage img = random_gray(rng, 17, 17);
    GrayImage tr(17, 17);
    for (int y = 0; y < 17; ++y)
        for (int x = 0; x < 17; ++x) tr(y, x) = img(x, y);
    const GlcmFeatures a = glcm_features(img), b = glcm_features(tr);
    EXPECT_NEAR(a.contrast, b.contrast, 1e-9);
    EXPECT_NEAR(a.energy, b.energy, 1e-12);
    EXPECT_NEAR(a.homogeneity, b.homogeneity, 1e-12);
    EXPECT_NEAR(a.correlation, b.correlation, 1e-9);
}

namespace {

std::vector<RgbImage> dark_reference(int count, int size) {
    Rng rng(40);
    std::vector<RgbImage> out;
    for (int i = 0; i < count; ++i) {
        const Mask lesion = fixtures::ellipse_mask(size, size, size / 2.0 + rng.uniform(-6, 6),
                                                   size / 2.0 + rng.uniform(-6, 6),
                                                   rng.uniform(8, 16), rng.uniform(8, 16));
        out.push_back(fixtures::lesion_image(fixtures::kToneColours[4 + i % 2], lesion, 0.55, 3.0, rng));
    }
    return out;
}

}  // namespace

TEST(Validate, ReferenceMemberIsAccepted) {
    ValidationConfig cfg;
    cfg.compare_size = 64;
    const auto ref = dark_reference(12, 64);
    const SynthValidationReport r = validate_synthetic("m", ref[3], ref, cfg);
    EXPECT_TRUE(r.accepted);
    EXPECT_NEAR(r.ssim_max, 1.0, 1e-12);
}

TEST(Validate, WhiteImageRejectedOnHistogram) {
    ValidationConfig cfg;
    cfg.compare_size = 64;
    const auto ref = dark_reference(12, 64);
    const SynthValidationReport r = validate_synthetic("w", RgbImage(64, 64, Rgb{255, 255, 255}), ref, cfg);
    EXPECT_FALSE(r.accepted);
    ASSERT_FALSE(r.reject_reasons.empty());
    EXPECT_NE(r.reject_reasons.front().find("hist"), std::string::npos);
}

TEST(Validate, EmptyReferenceThrows) {
    try {
        validate_synthetic("x", RgbImage(8, 8), std::span<const RgbImage>{}, ValidationConfig{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptyReference);
    }
}

TEST(Validate, BatchCardinality) {
    ValidationConfig cfg;
    cfg.compare_size = 16;
    cfg.ssim_subsample = 4;
    const auto ref = dark_reference(8, 16);
    const ReferenceStats stats = build_reference(ref, cfg);
    Rng rng(9);
    std::size_t accepted = 0, rejected = 0;
    for (int i = 0; i < 808; ++i) {
        RgbImage c = ref[static_cast<std::size_t>(i) % ref.size()];
        if (i % 3 == 0) {
            for (auto& b : c.bytes()) b = static_cast<std::uint8_t>(rng.below(256));
        }
        (validate_synthetic("s" + std::to_string(i), c, stats, cfg).accepted ? accepted : rejected)++;
    }
    EXPECT_EQ(accepted + rejected, 808U);
    EXPECT_GT(accepted, 0U);
    EXPECT_GT(rejected, 0U);
}
