#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "dermfair/error.hpp"
#include "dermfair/metrics.hpp"
#include "dermfair/random.hpp"

using namespace dermfair;
using namespace dermfair::metrics;

namespace {

Mask random_mask(Rng& rng, int w, int h, double p) {
    Mask m(w, h);
    for (std::size_t i = 0; i < m.size(); ++i) m.set(i, rng.coin(p));
    return m;
}

Mask block(int w, int h, int x0, int y0, int bw, int bh) {
    Mask m(w, h);
    for (int y = y0; y < y0 + bh; ++y) {
        for (int x = x0; x < x0 + bw; ++x) m.set(x, y, true);
    }
    return m;
}

// Boundary pixels by direct neighbourhood inspection.
std::vector<std::pair<int, int>> boundary_oracle(const Mask& m) {
    std::vector<std::pair<int, int>> out;
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            if (!m(x, y)) continue;
            bool edge = false;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int xx = x + dx, yy = y + dy;
                    if (xx < 0 || yy < 0 || xx >= m.width() || yy >= m.height() || !m(xx, yy)) edge = true;
                }
            }
            if (edge) out.emplace_back(x, y);
        }
    }
    return out;
}

double directed(const std::vector<std::pair<int, int>>& a, const std::vector<std::pair<int, int>>& b) {
    double worst = 0.0;
    for (const auto& p : a) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : b) {
            best = std::min(best, std::hypot(double(p.first - q.first), double(p.second - q.second)));
        }
        worst = std::max(worst, best);
    }
    return worst;
}

double auc_oracle(const std::vector<Prediction>& p) {
    double num = 0.0, den = 0.0;
    for (const auto& a : p) {
        if (a.label != 1) continue;
        for (const auto& b : p) {
            if (b.label != 0) continue;
            den += 1.0;
            num += a.score > b.score ? 1.0 : a.score == b.score ? 0.5 : 0.0;
        }
    }
    return num / den;
}

}  // namespace

TEST(SegScores, ShiftedBlockFixture) {
    const Mask truth = block(4, 4, 0, 0, 2, 2);
    const Mask pred = block(4, 4, 1, 0, 2, 2);
    const SegmentationScores s = seg_scores(pred, truth);
    EXPECT_DOUBLE_EQ(s.iou, 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(s.dice, 0.5);
    EXPECT_DOUBLE_EQ(*s.precision, 0.5);
    EXPECT_DOUBLE_EQ(s.recall, 0.5);
    EXPECT_DOUBLE_EQ(*s.specificity, 10.0 / 12.0);
    EXPECT_DOUBLE_EQ(s.hausdorff_px, 1.0);
}

TEST(SegScores, IdenticalAndDisjoint) {
    const Mask a = block(8, 8, 1, 1, 3, 3);
    const SegmentationScores same = seg_scores(a, a);
    EXPECT_EQ(same.iou, 1.0);
    EXPECT_EQ(same.dice, 1.0);
    EXPECT_EQ(same.hausdorff_px, 0.0);
    const SegmentationScores apart = seg_scores(block(8, 8, 5, 5, 2, 2), a);
    EXPECT_EQ(apart.iou, 0.0);
    EXPECT_EQ(apart.dice, 0.0);
}

TEST(SegScores, EmptyPredictionAndTruth) {
    const Mask truth = block(8, 8, 2, 2, 2, 2);
    const SegmentationScores s = seg_scores(Mask(8, 8), truth);
    EXPECT_FALSE(s.precision.has_value());
    EXPECT_EQ(s.hausdorff_px, kHausdorffSentinel);
    EXPECT_EQ(s.iou, 0.0);
    try {
        seg_scores(truth, Mask(8, 8));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptyTruth);
    }
    EXPECT_THROW(seg_scores(Mask(8, 7), truth), Error);
}

TEST(SegScores, FullTruthHasUndefinedSpecificity) {
    const Mask full(4, 4, true);
    EXPECT_FALSE(seg_scores(full, full).specificity.has_value());
}

TEST(SegScores, RandomPairsMatchPixelOracle) {
    Rng rng(2024);
    for (int t = 0; t < 1000; ++t) {
        const Mask truth = random_mask(rng, 16, 16, rng.uniform(0.05, 0.6));
        if (truth.count() == 0) continue;
        const Mask pred = random_mask(rng, 16, 16, rng.uniform(0.0, 0.6));
        std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            if (pred[i] && truth[i]) ++tp;
            else if (pred[i]) ++fp;
            else if (truth[i]) ++fn;
            else ++tn;
        }
        const SegmentationScores s = seg_scores(pred, truth);
        EXPECT_EQ(s.confusion, (Confusion{tp, fp, tn, fn}));
        EXPECT_EQ(s.iou, double(tp) / double(tp + fp + fn));
        EXPECT_EQ(s.dice, 2.0 * tp / double(2 * tp + fp + fn));
        EXPECT_EQ(s.recall, double(tp) / double(tp + fn));
        if (tp + fp > 0) EXPECT_EQ(*s.precision, double(tp) / double(tp + fp));
        else EXPECT_FALSE(s.precision.has_value());
        if (tn + fp > 0) EXPECT_EQ(*s.specificity, double(tn) / double(tn + fp));
        EXPECT_NEAR(s.dice, 2.0 * s.iou / (1.0 + s.iou), 1e-12);
    }
}

TEST(Boundary, MatchesNeighbourhoodOracle) {
    Rng rng(9);
    for (int t = 0; t < 200; ++t) {
        const Mask m = random_mask(rng, 12, 10, 0.6);
        const Mask b = boundary(m);
        Mask want(12, 10);
        for (const auto& [x, y] : boundary_oracle(m)) want.set(x, y, true);
        EXPECT_EQ(b, want);
    }
}

TEST(Hausdorff, MatchesBruteForce) {
    Rng rng(77);
    for (int t = 0; t < 300; ++t) {
        const int w = 5 + static_cast<int>(rng.below(20));
        const int h = 5 + static_cast<int>(rng.below(20));
        const Mask a = random_mask(rng, w, h, rng.uniform(0.02, 0.7));
        const Mask b = random_mask(rng, w, h, rng.uniform(0.02, 0.7));
        const auto ba = boundary_oracle(a);
        const auto bb = boundary_oracle(b);
        if (ba.empty() || bb.empty()) continue;
        const double want = std::max(directed(ba, bb), directed(bb, ba));
        EXPECT_NEAR(hausdorff(a, b), want, 1e-9);
        EXPECT_EQ(hausdorff(a, b), hausdorff(b, a));
    }
}

TEST(Hausdorff, EmptyConventions) {
    EXPECT_EQ(hausdorff(Mask(4, 4), Mask(4, 4)), 0.0);
    EXPECT_EQ(hausdorff(Mask(4, 4), block(4, 4, 0, 0, 1, 1)), kHausdorffSentinel);
}

TEST(Auc, Fixtures) {
    const std::vector<Prediction> perfect = {{0.9, 1}, {0.8, 1}, {0.3, 0}, {0.1, 0}};
    EXPECT_EQ(roc_auc(perfect), 1.0);
    EXPECT_EQ(cls_scores(perfect).accuracy, 1.0);
    const std::vector<Prediction> mixed = {{0.9, 1}, {0.8, 0}, {0.3, 1}, {0.1, 0}};
    EXPECT_EQ(roc_auc(mixed), 0.75);
}

TEST(Auc, SingleClassThrows) {
    const std::vector<Prediction> p = {{0.9, 1}, {0.2, 1}};
    try {
        roc_auc(p);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::SingleClass);
    }
    const ClassificationScores s = cls_scores(p);
    EXPECT_FALSE(s.auc.has_value());
    EXPECT_EQ(s.accuracy, 0.5);
}

TEST(Auc, TiesAndRandomListsMatchPairwiseOracle) {
    Rng rng(31);
    for (int t = 0; t < 2000; ++t) {
        const std::size_t n = 2 + rng.below(11);
        std::vector<Prediction> p(n);
        for (auto& x : p) {
            x.score = static_cast<double>(rng.below(6)) / 5.0;
            x.label = static_cast<int>(rng.below(2));
        }
        p[0].label = 0;
        p[1].label = 1;
        EXPECT_DOUBLE_EQ(roc_auc(p), auc_oracle(p));
    }
}

TEST(ClsScores, ConfusionAndLoss) {
    const std::vector<Prediction> p = {{0.9, 1}, {0.6, 0}, {0.4, 1}, {0.1, 0}, {0.5, 1}};
    const ClassificationScores s = cls_scores(p);
    EXPECT_EQ(s.confusion, (Confusion{2, 1, 1, 1}));
    EXPECT_DOUBLE_EQ(s.accuracy, 3.0 / 5.0);
    EXPECT_DOUBLE_EQ(*s.precision, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(*s.recall, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(*s.f1, 2.0 / 3.0);
    const double loss = -(std::log(0.9) + std::log(0.4) + std::log(0.4) + std::log(0.9) + std::log(0.5)) / 5;
    EXPECT_NEAR(s.loss, loss, 1e-12);
}

TEST(ClsScores, RejectsBadInput) {
    EXPECT_THROW(cls_scores(std::vector<Prediction>{{0.5, 2}}), Error);
    EXPECT_THROW(cls_scores(std::vector<Prediction>{{1.5, 1}}), Error);
    EXPECT_THROW(cls_scores(std::vector<Prediction>{}), Error);
}

TEST(Aggregate, MeansAndExclusions) {
    std::vector<SegImageResult> images(4);
    images[0].image_id = "b";
    images[0].scores = SegmentationScores{};
    images[0].scores->iou = 0.8;
    images[0].scores->hausdorff_px = 2.0;
    images[1].image_id = "a";
    images[1].scores = SegmentationScores{};
    images[1].scores->iou = 0.9;
    images[1].scores->hausdorff_px = 4.0;
    images[2].image_id = "c";
    images[2].scores = SegmentationScores{};
    images[2].scores->hausdorff_px = kHausdorffSentinel;
    images[2].scores->iou = 0.0;
    images[3].image_id = "d";
    images[3].error = "EmptyTruth";
    const SegRunReport r = aggregate_segmentation(images);
    EXPECT_EQ(r.images.front().image_id, "a");
    EXPECT_NEAR(r.iou.mean, (0.8 + 0.9 + 0.0) / 3.0, 1e-12);
    EXPECT_EQ(r.iou.count, 3U);
    EXPECT_DOUBLE_EQ(r.hausdorff_px.mean, 3.0);
    EXPECT_EQ(r.hausdorff_px.excluded, 1U);
    EXPECT_EQ(r.failed, 1U);
}

TEST(Aggregate, TwoImageMean) {
    std::vector<SegImageResult> images(2);
    images[0].scores = SegmentationScores{};
    images[0].scores->iou = 0.8;
    images[1].scores = SegmentationScores{};
    images[1].scores->iou = 0.9;
    EXPECT_NEAR(aggregate_segmentation(images).iou.mean, 0.85, 1e-12);
}

TEST(EvaluateClassification, EqualsDirectCall) {
    Rng rng(4);
    std::vector<LabeledPrediction> lp;
    std::vector<Prediction> p;
    for (int i = 0; i < 50; ++i) {
        const Prediction x{rng.uniform(), static_cast<int>(rng.below(2))};
        lp.push_back({"id" + std::to_string(i), x});
        p.push_back(x);
    }
    const ClsRunReport r = evaluate_classification(lp);
    const ClassificationScores s = cls_scores(p);
    EXPECT_EQ(r.samples, 50U);
    EXPECT_EQ(r.scores.accuracy, s.accuracy);
    EXPECT_EQ(r.scores.auc, s.auc);
    EXPECT_EQ(r.scores.loss, s.loss);
    EXPECT_EQ(r.scores.confusion, s.confusion);
}
