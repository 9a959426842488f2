#include "dermfair/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "dermfair/csv.hpp"
#include "dermfair/error.hpp"

namespace dermfair::metrics {

Confusion confusion(const BinaryMask& pred, const BinaryMask& truth) {
    if (!pred.same_shape(truth)) {
        throw Error(ErrorKind::DimensionMismatch, "prediction and truth masks differ in size");
    }
    Confusion c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i];
        const bool t = truth[i];
        if (p && t) ++c.tp;
        else if (p) ++c.fp;
        else if (t) ++c.fn;
        else ++c.tn;
    }
    return c;
}

BinaryMask boundary(const BinaryMask& mask) {
    const int w = mask.width();
    const int h = mask.height();
    BinaryMask out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask(x, y)) continue;
            bool edge = false;
            for (int dy = -1; dy <= 1 && !edge; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = x + dx;
                    const int ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h || !mask(nx, ny)) {
                        edge = true;
                        break;
                    }
                }
            }
            out.set(x, y, edge);
        }
    }
    return out;
}

namespace {

// Exact squared Euclidean distance transform (Felzenszwalb-Huttenlocher) to the
// nearest set pixel. Pixels with no site anywhere get a huge finite value.
std::vector<double> squared_edt(const BinaryMask& sites) {
    const int w = sites.width();
    const int h = sites.height();
    constexpr double far = 1e20;
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> d(static_cast<std::size_t>(w) * h);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = sites[i] ? 0.0 : far;

    const std::size_t n = static_cast<std::size_t>(std::max(w, h));
    std::vector<double> f(n);
    std::vector<double> out(n);
    std::vector<int> v(n);
    std::vector<double> z(n + 1);

    auto pass = [&](int len) {
        auto parabola = [&](int q, int p) {
            return ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
        };
        int k = 0;
        v[0] = 0;
        z[0] = -inf;
        z[1] = inf;
        for (int q = 1; q < len; ++q) {
            double s = parabola(q, v[k]);
            while (s <= z[k]) {
                --k;
                s = parabola(q, v[k]);
            }
            ++k;
            v[k] = q;
            z[k] = s;
            z[k + 1] = inf;
        }
        k = 0;
        for (int q = 0; q < len; ++q) {
            while (z[k + 1] < q) ++k;
            const int p = v[k];
            out[q] = double(q - p) * (q - p) + f[p];
        }
    };

    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) f[y] = d[static_cast<std::size_t>(y) * w + x];
        pass(h);
        for (int y = 0; y < h; ++y) d[static_cast<std::size_t>(y) * w + x] = out[y];
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) f[x] = d[static_cast<std::size_t>(y) * w + x];
        pass(w);
        for (int x = 0; x < w; ++x) d[static_cast<std::size_t>(y) * w + x] = out[x];
    }
    return d;
}

double directed(const BinaryMask& from, const std::vector<double>& dist_to) {
    double worst = 0.0;
    for (std::size_t i = 0; i < from.size(); ++i) {
        if (from[i]) worst = std::max(worst, dist_to[i]);
    }
    return std::sqrt(worst);
}

}  // namespace

double hausdorff(const BinaryMask& a, const BinaryMask& b) {
    if (!a.same_shape(b)) throw Error(ErrorKind::DimensionMismatch, "masks differ in size");
    const BinaryMask ba = boundary(a);
    const BinaryMask bb = boundary(b);
    const std::size_t na = ba.count();
    const std::size_t nb = bb.count();
    if (na == 0 && nb == 0) return 0.0;
    if (na == 0 || nb == 0) return kHausdorffSentinel;
    return std::max(directed(ba, squared_edt(bb)), directed(bb, squared_edt(ba)));
}

SegmentationScores seg_scores(const BinaryMask& pred, const BinaryMask& truth) {
    const Confusion c = confusion(pred, truth);
    if (c.tp + c.fn == 0) throw Error(ErrorKind::EmptyTruth, "ground-truth mask is empty");
    SegmentationScores s;
    s.confusion = c;
    const double tp = static_cast<double>(c.tp);
    s.iou = tp / static_cast<double>(c.tp + c.fp + c.fn);
    s.dice = 2.0 * tp / static_cast<double>(2 * c.tp + c.fp + c.fn);
    if (c.tp + c.fp > 0) s.precision = tp / static_cast<double>(c.tp + c.fp);
    s.recall = tp / static_cast<double>(c.tp + c.fn);
    if (c.tn + c.fp > 0) {
        s.specificity = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
    }
    s.hausdorff_px = c.tp + c.fp == 0 ? kHausdorffSentinel : hausdorff(pred, truth);
    return s;
}

double roc_auc(std::span<const Prediction> predictions) {
    std::vector<Prediction> sorted(predictions.begin(), predictions.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const Prediction& a, const Prediction& b) { return a.score < b.score; });
    std::size_t positives = 0;
    for (const auto& p : sorted) positives += p.label == 1 ? 1 : 0;
    const std::size_t negatives = sorted.size() - positives;
    if (positives == 0 || negatives == 0) {
        throw Error(ErrorKind::SingleClass, "AUC needs both classes");
    }
    // Walk tie groups in ascending score; each positive beats every negative
    // below its group and gets half credit for negatives inside it.
    double concordant = 0.0;
    std::size_t negatives_below = 0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        std::size_t pos = 0;
        std::size_t neg = 0;
        while (j < sorted.size() && sorted[j].score == sorted[i].score) {
            (sorted[j].label == 1 ? pos : neg) += 1;
            ++j;
        }
        concordant += static_cast<double>(pos) *
                      (static_cast<double>(negatives_below) + 0.5 * static_cast<double>(neg));
        negatives_below += neg;
        i = j;
    }
    return concordant / (static_cast<double>(positives) * static_cast<double>(negatives));
}

ClassificationScores cls_scores(std::span<const Prediction> predictions) {
    if (predictions.empty()) throw Error(ErrorKind::InvalidArgument, "no predictions");
    ClassificationScores s;
    double loss = 0.0;
    for (const auto& p : predictions) {
        if (p.label != 0 && p.label != 1) {
            throw Error(ErrorKind::InvalidArgument, "labels must be 0 or 1");
        }
        if (!(p.score >= 0.0 && p.score <= 1.0)) {
            throw Error(ErrorKind::InvalidArgument, "scores must lie in [0, 1]");
        }
        const bool predicted = p.score >= kDecisionThreshold;
        if (predicted && p.label == 1) ++s.confusion.tp;
        else if (predicted) ++s.confusion.fp;
        else if (p.label == 1) ++s.confusion.fn;
        else ++s.confusion.tn;
        const double q = std::clamp(p.score, 1e-7, 1.0 - 1e-7);
        loss -= p.label == 1 ? std::log(q) : std::log(1.0 - q);
    }
    const auto& c = s.confusion;
    const double n = static_cast<double>(predictions.size());
    s.loss = loss / n;
    s.accuracy = static_cast<double>(c.tp + c.tn) / n;
    if (c.tp + c.fp > 0) s.precision = double(c.tp) / double(c.tp + c.fp);
    if (c.tp + c.fn > 0) s.recall = double(c.tp) / double(c.tp + c.fn);
    if (s.precision && s.recall) {
        const double pr = *s.precision + *s.recall;
        s.f1 = pr > 0.0 ? 2.0 * *s.precision * *s.recall / pr : 0.0;
    }
    try {
        s.auc = roc_auc(predictions);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::SingleClass) throw;
    }
    return s;
}

// --- aggregation ---------------------------------------------------------------

namespace {

struct Accumulator {
    double sum = 0.0;
    MeanWithCount result;

    void add(std::optional<double> v) {
        if (!v || !std::isfinite(*v)) {
            ++result.excluded;
            return;
        }
        sum += *v;
        ++result.count;
    }
    MeanWithCount finish() {
        result.mean = result.count ? sum / static_cast<double>(result.count) : 0.0;
        return result;
    }
};

std::string opt(const std::optional<double>& v) {
    return v ? csv::format_double(*v, 10) : "undefined";
}

nlohmann::ordered_json opt_json(const std::optional<double>& v) {
    if (!v) return nullptr;
    if (std::isinf(*v)) return "inf";
    return *v;
}

nlohmann::ordered_json mean_json(const MeanWithCount& m) {
    return {{"mean", m.mean}, {"count", m.count}, {"excluded", m.excluded}};
}

}  // namespace

SegRunReport aggregate_segmentation(std::vector<SegImageResult> images) {
    std::sort(images.begin(), images.end(),
              [](const SegImageResult& a, const SegImageResult& b) { return a.image_id < b.image_id; });
    Accumulator iou, dice, precision, recall, specificity, hd;
    SegRunReport report;
    for (const auto& im : images) {
        if (!im.scores) {
            ++report.failed;
            continue;
        }
        const auto& s = *im.scores;
        iou.add(s.iou);
        dice.add(s.dice);
        precision.add(s.precision);
        recall.add(s.recall);
        specificity.add(s.specificity);
        hd.add(s.hausdorff_px);
    }
    report.images = std::move(images);
    report.iou = iou.finish();
    report.dice = dice.finish();
    report.precision = precision.finish();
    report.recall = recall.finish();
    report.specificity = specificity.finish();
    report.hausdorff_px = hd.finish();
    return report;
}

void write_seg_report_csv(const SegRunReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
    out << "# means exclude undefined ratios and Hausdorff sentinels; see *_excluded rows\n";
    csv::write_row(out, {"image_id", "iou", "dice", "precision", "recall", "specificity",
                         "hausdorff_px", "error"});
    for (const auto& im : report.images) {
        if (!im.scores) {
            csv::write_row(out, {im.image_id, "", "", "", "", "", "", im.error});
            continue;
        }
        const auto& s = *im.scores;
        csv::write_row(out, {im.image_id, csv::format_double(s.iou), csv::format_double(s.dice),
                             opt(s.precision), csv::format_double(s.recall), opt(s.specificity),
                             csv::format_double(s.hausdorff_px), ""});
    }
    const MeanWithCount* means[] = {&report.iou,    &report.dice,        &report.precision,
                                    &report.recall, &report.specificity, &report.hausdorff_px};
    csv::Row mean_row{"mean"};
    csv::Row count_row{"mean_count"};
    csv::Row excl_row{"mean_excluded"};
    for (const auto* m : means) {
        mean_row.push_back(csv::format_double(m->mean));
        count_row.push_back(std::to_string(m->count));
        excl_row.push_back(std::to_string(m->excluded));
    }
    mean_row.push_back("");
    count_row.push_back("");
    excl_row.push_back(std::to_string(report.failed) + " failed");
    csv::write_row(out, mean_row);
    csv::write_row(out, count_row);
    csv::write_row(out, excl_row);
}

void write_seg_report_json(const SegRunReport& report, const std::string& path) {
    nlohmann::ordered_json j;
    j["summary"] = {{"Mean IoU", mean_json(report.iou)},
                    {"Dice Coefficient", mean_json(report.dice)},
                    {"Precision", mean_json(report.precision)},
                    {"Recall (Sensitivity)", mean_json(report.recall)},
                    {"Hausdorff Dist. (px)", mean_json(report.hausdorff_px)},
                    {"Specificity", mean_json(report.specificity)}};
    j["failed"] = report.failed;
    auto& images = j["images"] = nlohmann::ordered_json::array();
    for (const auto& im : report.images) {
        nlohmann::ordered_json e{{"image_id", im.image_id}};
        if (im.scores) {
            const auto& s = *im.scores;
            e["iou"] = s.iou;
            e["dice"] = s.dice;
            e["precision"] = opt_json(s.precision);
            e["recall"] = s.recall;
            e["specificity"] = opt_json(s.specificity);
            e["hausdorff_px"] = opt_json(s.hausdorff_px);
        } else {
            e["error"] = im.error;
        }
        images.push_back(std::move(e));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
    out << j.dump(2) << '\n';
}

std::vector<LabeledPrediction> read_predictions(const std::string& path) {
    const csv::Table t = csv::read_file(path);
    const std::size_t id_col = t.require_column({"image_id"});
    const std::size_t score_col = t.require_column({"score"});
    const std::size_t label_col = t.require_column({"label"});
    std::vector<LabeledPrediction> out;
    out.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        LabeledPrediction p;
        p.image_id = row[id_col];
        const std::string where = path + " row " + std::to_string(i + 1);
        try {
            std::size_t used = 0;
            p.prediction.score = std::stod(row[score_col], &used);
            if (used != row[score_col].size()) throw std::invalid_argument("score");
            p.prediction.label = std::stoi(row[label_col], &used);
            if (used != row[label_col].size()) throw std::invalid_argument("label");
        } catch (const std::exception&) {
            throw Error(ErrorKind::Parse, where + ": bad number");
        }
        if (!(p.prediction.score >= 0.0 && p.prediction.score <= 1.0)) {
            throw Error(ErrorKind::Parse, where + ": score outside [0, 1]");
        }
        if (p.prediction.label != 0 && p.prediction.label != 1) {
            throw Error(ErrorKind::Parse, where + ": label must be 0 or 1");
        }
        out.push_back(std::move(p));
    }
    return out;
}

ClsRunReport evaluate_classification(std::span<const LabeledPrediction> predictions) {
    std::vector<Prediction> raw;
    raw.reserve(predictions.size());
    for (const auto& p : predictions) raw.push_back(p.prediction);
    ClsRunReport report;
    report.samples = raw.size();
    report.scores = cls_scores(raw);
    if (!report.scores.auc) report.auc_error = std::string(to_string(ErrorKind::SingleClass));
    return report;
}

void write_cls_report_csv(const ClsRunReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
    const auto& s = report.scores;
    csv::write_row(out, {"metric", "value"});
    csv::write_row(out, {"Loss", csv::format_double(s.loss)});
    csv::write_row(out, {"Accuracy", csv::format_double(100.0 * s.accuracy)});
    csv::write_row(out, {"AUC", s.auc ? csv::format_double(*s.auc) : report.auc_error});
    csv::write_row(out, {"Precision", opt(s.precision)});
    csv::write_row(out, {"Recall", opt(s.recall)});
    csv::write_row(out, {"F-Score", opt(s.f1)});
    csv::write_row(out, {"TP", std::to_string(s.confusion.tp)});
    csv::write_row(out, {"FP", std::to_string(s.confusion.fp)});
    csv::write_row(out, {"TN", std::to_string(s.confusion.tn)});
    csv::write_row(out, {"FN", std::to_string(s.confusion.fn)});
    csv::write_row(out, {"samples", std::to_string(report.samples)});
}

void write_cls_report_json(const ClsRunReport& report, const std::string& path) {
    const auto& s = report.scores;
    nlohmann::ordered_json j;
    j["samples"] = report.samples;
    j["threshold"] = kDecisionThreshold;
    j["Loss"] = s.loss;
    j["Accuracy"] = 100.0 * s.accuracy;
    j["AUC"] = opt_json(s.auc);
    if (!s.auc) j["AUC_error"] = report.auc_error;
    j["Precision"] = opt_json(s.precision);
    j["Recall"] = opt_json(s.recall);
    j["F-Score"] = opt_json(s.f1);
    j["confusion"] = {{"tp", s.confusion.tp},
                      {"fp", s.confusion.fp},
                      {"tn", s.confusion.tn},
                      {"fn", s.confusion.fn}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
    out << j.dump(2) << '\n';
}

}  // namespace dermfair::metrics
