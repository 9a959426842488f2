#include <gtest/gtest.h>

#include <cmath>

#include "dermfair/error.hpp"
#include "dermfair/skintone.hpp"

using namespace dermfair;
using namespace dermfair::skintone;

namespace {

// Standard ITA ranges as closed intervals; the open ends at I and VI extend
// to the +/-90 limits.
struct Band {
    Fitzpatrick type;
    double lo;
    double hi;
};
constexpr Band kBands[] = {
    {Fitzpatrick::I, 55, 90},   {Fitzpatrick::II, 40, 55}, {Fitzpatrick::III, 27, 40},
    {Fitzpatrick::IV, 10, 27},  {Fitzpatrick::V, -30, 10}, {Fitzpatrick::VI, -90, -30},
};

Manifest manifest_of(int n, Superclass sc) {
    Manifest m;
    for (int i = 0; i < n; ++i) {
        ImageRecord r;
        r.image_id = "img" + std::to_string(i);
        r.patient_id = r.image_id;
        r.superclass = sc;
        m.records.push_back(r);
    }
    return m;
}

}  // namespace

TEST(Ita, EquationCases) {
    EXPECT_NEAR(compute_ita(50.0, 20.0), 0.0, 1e-12);
    EXPECT_NEAR(compute_ita(60.0, 10.0), 45.0, 1e-12);
    EXPECT_NEAR(compute_ita(40.0, 17.3205), -30.0, 1e-3);
    EXPECT_NEAR(compute_ita(40.0, 10.0 * std::sqrt(3.0)), -30.0, 1e-9);
}

TEST(Ita, ZeroChroma) {
    EXPECT_DOUBLE_EQ(compute_ita(70.0, 0.0), 90.0);
    EXPECT_DOUBLE_EQ(compute_ita(30.0, 0.0), -90.0);
    try {
        compute_ita(50.0, 0.0);
        FAIL() << "expected DegenerateChroma";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DegenerateChroma);
    }
}

TEST(Fitzpatrick, BandExamples) {
    EXPECT_EQ(ita_to_fitzpatrick(60.0, 1000), Fitzpatrick::I);
    EXPECT_EQ(ita_to_fitzpatrick(0.0, 1000), Fitzpatrick::V);
    EXPECT_EQ(ita_to_fitzpatrick(45.0, 400), Fitzpatrick::Uncertain);
    EXPECT_EQ(ita_to_fitzpatrick(45.0, 500), Fitzpatrick::II);
}

TEST(Fitzpatrick, BandEdges) {
    EXPECT_EQ(ita_to_fitzpatrick(55.0, 1000), Fitzpatrick::II);
    EXPECT_EQ(ita_to_fitzpatrick(std::nextafter(55.0, 90.0), 1000), Fitzpatrick::I);
    EXPECT_EQ(ita_to_fitzpatrick(40.0, 1000), Fitzpatrick::III);
    EXPECT_EQ(ita_to_fitzpatrick(27.0, 1000), Fitzpatrick::IV);
    EXPECT_EQ(ita_to_fitzpatrick(10.0, 1000), Fitzpatrick::IV);
    EXPECT_EQ(ita_to_fitzpatrick(std::nextafter(10.0, 0.0), 1000), Fitzpatrick::V);
    EXPECT_EQ(ita_to_fitzpatrick(-30.0, 1000), Fitzpatrick::V);
    EXPECT_EQ(ita_to_fitzpatrick(std::nextafter(-30.0, -90.0), 1000), Fitzpatrick::VI);
    EXPECT_EQ(ita_to_fitzpatrick(90.0, 1000), Fitzpatrick::I);
    EXPECT_EQ(ita_to_fitzpatrick(-90.0, 1000), Fitzpatrick::VI);
}

TEST(Fitzpatrick, SweepIsExhaustiveGapFreeAndMonotone) {
    int previous = -1;
    for (int k = -9000; k <= 9000; ++k) {
        const double ita = k / 100.0;
        const Fitzpatrick f = ita_to_fitzpatrick(ita, 1000);
        ASSERT_NE(f, Fitzpatrick::Uncertain) << ita;
        const auto* band = std::find_if(std::begin(kBands), std::end(kBands),
                                        [&](const Band& b) { return b.type == f; });
        ASSERT_NE(band, std::end(kBands));
        EXPECT_GE(ita, band->lo) << ita;
        EXPECT_LE(ita, band->hi) << ita;
        const int idx = static_cast<int>(f);
        if (previous >= 0) {
            EXPECT_LE(idx, previous) << ita;
            EXPECT_GE(idx, previous - 1) << ita;
        }
        previous = idx;
    }
    EXPECT_EQ(previous, static_cast<int>(Fitzpatrick::I));
}

TEST(Analyze, SkinToneImage) {
    const RgbImage img(40, 40, Rgb{142, 98, 68});
    const SkinToneResult r = analyze(img);
    EXPECT_EQ(r.skin_pixel_count, 1600U);
    ASSERT_TRUE(r.ita_degrees.has_value());
    EXPECT_EQ(r.fitzpatrick, ita_to_fitzpatrick(*r.ita_degrees, 1600));
    EXPECT_FALSE(r.negative_b_star);
}

TEST(Analyze, TooFewSkinPixelsIsUncertain) {
    RgbImage img(40, 40, Rgb{128, 128, 128});
    for (int x = 0; x < 20; ++x) {
        for (int y = 0; y < 20; ++y) img.set(x, y, {142, 98, 68});
    }
    const SkinToneResult r = analyze(img);
    EXPECT_EQ(r.skin_pixel_count, 400U);
    EXPECT_EQ(r.fitzpatrick, Fitzpatrick::Uncertain);
}

TEST(Audit, ThreeIdenticalMelanocyticImages) {
    const Manifest m = manifest_of(3, Superclass::Melanocytic);
    const RgbImage brown(40, 40, Rgb{142, 98, 68});
    ASSERT_EQ(analyze(brown).fitzpatrick, Fitzpatrick::V);
    const AuditReport rep = audit_dataset(m, [&](const ImageRecord&) { return brown; });
    EXPECT_EQ(rep.audit.count(AuditRow::V, Superclass::Melanocytic), 3U);
    EXPECT_EQ(rep.audit.total(), 3U);
    EXPECT_DOUBLE_EQ(rep.audit.dark_share(), 1.0);
}

TEST(Audit, EmptyManifest) {
    const AuditReport rep = audit_dataset(Manifest{}, [](const ImageRecord&) { return RgbImage(); });
    EXPECT_EQ(rep.audit, ToneAudit{});
    EXPECT_EQ(rep.audit.dark_share(), 0.0);
}

TEST(Audit, UnreadableImagesAreRecorded) {
    const Manifest m = manifest_of(4, Superclass::NonMelanocytic);
    const AuditReport rep = audit_dataset(m, [](const ImageRecord& r) -> RgbImage {
        if (r.image_id == "img2") throw Error(ErrorKind::Io, "corrupt");
        return RgbImage(40, 40, Rgb{246, 222, 200});
    });
    EXPECT_EQ(rep.audit.count(AuditRow::Unreadable, Superclass::NonMelanocytic), 1U);
    EXPECT_EQ(rep.audit.total(), 4U);
    ASSERT_EQ(rep.entries.size(), 4U);
    EXPECT_FALSE(rep.entries[2].result.has_value());
    EXPECT_FALSE(rep.entries[2].error.empty());
}

TEST(Audit, IndependentOfThreadCount) {
    Manifest m = manifest_of(24, Superclass::Melanocytic);
    const auto loader = [](const ImageRecord& r) {
        const int k = std::stoi(r.image_id.substr(3));
        return RgbImage(32, 32, Rgb{static_cast<std::uint8_t>(90 + 6 * k),
                                    static_cast<std::uint8_t>(60 + 5 * k),
                                    static_cast<std::uint8_t>(42 + 5 * k)});
    };
    const AuditReport one = audit_dataset(m, loader, {1});
    const AuditReport four = audit_dataset(m, loader, {4});
    EXPECT_EQ(one.audit, four.audit);
    annotate(m, one);
    for (std::size_t i = 0; i < m.size(); ++i) {
        EXPECT_EQ(m.records[i].fitzpatrick, one.entries[i].result->fitzpatrick);
    }
}
