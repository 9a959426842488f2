#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dermfair/image.hpp"

namespace dermfair::metrics {

inline constexpr double kHausdorffSentinel = std::numeric_limits<double>::infinity();

struct Confusion {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const noexcept { return tp + fp + tn + fn; }
    friend bool operator==(const Confusion&, const Confusion&) = default;
};

// Ratios with a zero denominator are left empty rather than reported as 0.
struct SegmentationScores {
    double iou = 0.0;
    double dice = 0.0;
    std::optional<double> precision;
    double recall = 0.0;
    std::optional<double> specificity;
    double hausdorff_px = 0.0;  // kHausdorffSentinel when the prediction is empty
    Confusion confusion;
};

Confusion confusion(const BinaryMask& pred, const BinaryMask& truth);

// Pixels of the mask with at least one 8-neighbour outside the mask (image
// border counts as outside).
BinaryMask boundary(const BinaryMask& mask);

// Symmetric Hausdorff distance between mask boundaries, exact Euclidean.
// Either boundary empty -> kHausdorffSentinel (0 when both are empty).
double hausdorff(const BinaryMask& a, const BinaryMask& b);

// Throws DimensionMismatch, or EmptyTruth when truth has no foreground.
SegmentationScores seg_scores(const BinaryMask& pred, const BinaryMask& truth);

struct Prediction {
    double score = 0.0;  // probability of the positive class
    int label = 0;       // 0 or 1
};

struct ClassificationScores {
    double accuracy = 0.0;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
    std::optional<double> auc;  // empty when only one class is present
    Confusion confusion;
    double loss = 0.0;  // mean binary cross-entropy
};

inline constexpr double kDecisionThreshold = 0.5;

// Area under the ROC curve with 0.5 credit for tied scores. Throws SingleClass
// when either class is absent.
double roc_auc(std::span<const Prediction> predictions);

ClassificationScores cls_scores(std::span<const Prediction> predictions);

// --- run-level aggregation -----------------------------------------------------

struct SegImageResult {
    std::string image_id;
    std::optional<SegmentationScores> scores;
    std::string error;  // EmptyTruth, unreadable masks, ...
};

struct MeanWithCount {
    double mean = 0.0;
    std::size_t count = 0;      // values that entered the mean
    std::size_t excluded = 0;   // undefined or sentinel values
};

struct SegRunReport {
    std::vector<SegImageResult> images;  // sorted by image id
    MeanWithCount iou;
    MeanWithCount dice;
    MeanWithCount precision;
    MeanWithCount recall;
    MeanWithCount specificity;
    MeanWithCount hausdorff_px;
    std::size_t failed = 0;
};

SegRunReport aggregate_segmentation(std::vector<SegImageResult> images);

void write_seg_report_csv(const SegRunReport& report, const std::string& path);
void write_seg_report_json(const SegRunReport& report, const std::string& path);

struct LabeledPrediction {
    std::string image_id;
    Prediction prediction;
};

// Reads `image_id,score,label` rows.
std::vector<LabeledPrediction> read_predictions(const std::string& path);

struct ClsRunReport {
    ClassificationScores scores;
    std::size_t samples = 0;
    std::string auc_error;
};

ClsRunReport evaluate_classification(std::span<const LabeledPrediction> predictions);

void write_cls_report_csv(const ClsRunReport& report, const std::string& path);
void write_cls_report_json(const ClsRunReport& report, const std::string& path);

}  // namespace dermfair::metrics
