#include "dermfair/synthval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "dermfair/config.hpp"
#include "dermfair/csv.hpp"
#include "dermfair/error.hpp"
#include "dermfair/random.hpp"

namespace dermfair::synthval {

RgbHistograms rgb_histograms(const RgbImage& image, int bins) {
    if (bins < 2 || bins > 256) throw Error(ErrorKind::InvalidArgument, "bins must be in [2, 256]");
    RgbHistograms h;
    for (auto& c : h.channels) c.assign(static_cast<std::size_t>(bins), 0.0);
    std::array<std::vector<std::size_t>, 3> counts;
    for (auto& c : counts) c.assign(static_cast<std::size_t>(bins), 0);
    const auto bytes = image.bytes();
    for (std::size_t i = 0; i < bytes.size(); i += 3) {
        for (std::size_t c = 0; c < 3; ++c) {
            ++counts[c][static_cast<std::size_t>(bytes[i + c]) * bins / 256];
        }
    }
    const double n = static_cast<double>(image.pixel_count());
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t b = 0; b < counts[c].size(); ++b) {
            h.channels[c][b] = static_cast<double>(counts[c][b]) / n;
        }
    }
    return h;
}

double hist_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw Error(ErrorKind::BinMismatch, "histograms have different bin counts");
    }
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double s = a[i] + b[i];
        if (s <= 0.0) continue;
        const double diff = a[i] - b[i];
        d += diff * diff / s;
    }
    return 0.5 * d;
}

double ssim(const GrayImage& a, const GrayImage& b, int window) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw Error(ErrorKind::DimensionMismatch, "SSIM inputs differ in size");
    }
    if (window < 1) throw Error(ErrorKind::InvalidArgument, "SSIM window must be positive");
    const int w = a.width();
    const int h = a.height();
    const int wx = std::min(window, w);
    const int wy = std::min(window, h);

    // Integral images of x, y, x^2, y^2, xy; exact in 64-bit integers.
    const std::size_t stride = static_cast<std::size_t>(w) + 1;
    std::array<std::vector<std::int64_t>, 5> integ;
    for (auto& v : integ) v.assign(stride * (static_cast<std::size_t>(h) + 1), 0);
    for (int y = 0; y < h; ++y) {
        std::array<std::int64_t, 5> row{};
        for (int x = 0; x < w; ++x) {
            const std::int64_t p = a(x, y);
            const std::int64_t q = b(x, y);
            row[0] += p;
            row[1] += q;
            row[2] += p * p;
            row[3] += q * q;
            row[4] += p * q;
            const std::size_t at = (static_cast<std::size_t>(y) + 1) * stride + x + 1;
            for (std::size_t k = 0; k < 5; ++k) integ[k][at] = integ[k][at - stride] + row[k];
        }
    }
    auto box = [&](std::size_t k, int x0, int y0) {
        const auto& s = integ[k];
        const std::size_t top = static_cast<std::size_t>(y0) * stride;
        const std::size_t bot = static_cast<std::size_t>(y0 + wy) * stride;
        return s[bot + x0 + wx] - s[top + x0 + wx] - s[bot + x0] + s[top + x0];
    };

    const double n = static_cast<double>(wx) * wy;
    double total = 0.0;
    std::size_t windows = 0;
    for (int y = 0; y + wy <= h; ++y) {
        for (int x = 0; x + wx <= w; ++x) {
            const double mx = box(0, x, y) / n;
            const double my = box(1, x, y) / n;
            const double vx = box(2, x, y) / n - mx * mx;
            const double vy = box(3, x, y) / n - my * my;
            const double cov = box(4, x, y) / n - mx * my;
            const double num = (2.0 * mx * my + kSsimC1) * (2.0 * cov + kSsimC2);
            const double den = (mx * mx + my * my + kSsimC1) * (vx + vy + kSsimC2);
            total += num / den;
            ++windows;
        }
    }
    return total / static_cast<double>(windows);
}

GlcmFeatures glcm_features(const GrayImage& image, int levels, unsigned angles) {
    if (levels < 2 || levels > 256) throw Error(ErrorKind::InvalidArgument, "levels must be in [2, 256]");
    if ((angles & kAllAngles) == 0) throw Error(ErrorKind::InvalidArgument, "no GLCM angle selected");
    const std::size_t L = static_cast<std::size_t>(levels);
    const int w = image.width();
    const int h = image.height();
    std::vector<std::uint8_t> q(image.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
        q[i] = static_cast<std::uint8_t>(static_cast<int>(image[i]) * levels / 256);
    }

    struct Offset {
        unsigned flag;
        int dx;
        int dy;
    };
    constexpr Offset offsets[] = {
        {kAngle0, 1, 0}, {kAngle45, 1, -1}, {kAngle90, 0, -1}, {kAngle135, -1, -1}};

    std::vector<double> p(L * L, 0.0);
    double pairs = 0.0;
    for (const Offset& o : offsets) {
        if ((angles & o.flag) == 0) continue;
        for (int y = 0; y < h; ++y) {
            const int ny = y + o.dy;
            if (ny < 0 || ny >= h) continue;
            for (int x = 0; x < w; ++x) {
                const int nx = x + o.dx;
                if (nx < 0 || nx >= w) continue;
                const std::size_t i = q[static_cast<std::size_t>(y) * w + x];
                const std::size_t j = q[static_cast<std::size_t>(ny) * w + nx];
                p[i * L + j] += 1.0;
                p[j * L + i] += 1.0;
                pairs += 2.0;
            }
        }
    }
    if (pairs == 0.0) {
        throw Error(ErrorKind::InvalidArgument, "image too small for the selected GLCM offsets");
    }
    for (double& v : p) v /= pairs;

    GlcmFeatures f;
    double mean = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
        for (std::size_t j = 0; j < L; ++j) mean += static_cast<double>(i) * p[i * L + j];
    }
    double var = 0.0;
    double cov = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
        for (std::size_t j = 0; j < L; ++j) {
            const double pij = p[i * L + j];
            if (pij == 0.0) continue;
            const double d = static_cast<double>(i) - static_cast<double>(j);
            f.contrast += pij * d * d;
            f.energy += pij * pij;
            f.homogeneity += pij / (1.0 + d * d);
            var += pij * (i - mean) * (i - mean);
            cov += pij * (i - mean) * (j - mean);
        }
    }
    f.correlation = var > 1e-12 ? cov / var : 1.0;
    return f;
}

namespace {

std::array<double, 4> as_array(const GlcmFeatures& f) {
    return {f.contrast, f.energy, f.homogeneity, f.correlation};
}

GrayImage comparison_gray(const RgbImage& image, const ValidationConfig& cfg) {
    return resize_bilinear(to_gray(image), cfg.compare_size, cfg.compare_size);
}

constexpr const char* kChannelNames[] = {"r", "g", "b"};
constexpr const char* kFeatureNames[] = {"contrast", "energy", "homogeneity", "correlation"};

}  // namespace

ReferenceStats build_reference(std::span<const RgbImage> reference, const ValidationConfig& cfg) {
    if (reference.empty()) throw Error(ErrorKind::EmptyReference, "reference sample is empty");
    ReferenceStats stats;
    stats.reference_count = reference.size();
    for (auto& c : stats.pooled.channels) c.assign(static_cast<std::size_t>(cfg.bins), 0.0);

    std::vector<std::array<double, 4>> features;
    features.reserve(reference.size());
    for (const RgbImage& img : reference) {
        const RgbHistograms h = rgb_histograms(img, cfg.bins);
        for (std::size_t c = 0; c < 3; ++c) {
            for (std::size_t b = 0; b < h.channels[c].size(); ++b) {
                stats.pooled.channels[c][b] += h.channels[c][b];
            }
        }
        features.push_back(as_array(glcm_features(comparison_gray(img, cfg), cfg.glcm_levels)));
    }
    const double n = static_cast<double>(reference.size());
    for (auto& c : stats.pooled.channels) {
        for (double& v : c) v /= n;
    }
    for (std::size_t k = 0; k < 4; ++k) {
        double mean = 0.0;
        for (const auto& f : features) mean += f[k];
        mean /= n;
        double var = 0.0;
        for (const auto& f : features) var += (f[k] - mean) * (f[k] - mean);
        stats.glcm_mean[k] = mean;
        stats.glcm_std[k] = std::sqrt(var / n);
    }

    std::vector<std::size_t> order(reference.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (order.size() > cfg.ssim_subsample) {
        Rng rng(cfg.seed);
        rng.shuffle(std::span<std::size_t>(order));
        order.resize(cfg.ssim_subsample);
        std::sort(order.begin(), order.end());
    }
    for (std::size_t i : order) stats.ssim_sample.push_back(comparison_gray(reference[i], cfg));
    return stats;
}

SynthValidationReport validate_synthetic(const std::string& image_id, const RgbImage& candidate,
                                         const ReferenceStats& reference,
                                         const ValidationConfig& cfg) {
    if (reference.reference_count == 0 || reference.ssim_sample.empty()) {
        throw Error(ErrorKind::EmptyReference, "reference sample is empty");
    }
    SynthValidationReport r;
    r.image_id = image_id;
    const RgbHistograms h = rgb_histograms(candidate, cfg.bins);
    for (std::size_t c = 0; c < 3; ++c) {
        r.hist_distance[c] = hist_distance(h.channels[c], reference.pooled.channels[c]);
        if (r.hist_distance[c] > cfg.max_hist_distance) {
            r.reject_reasons.push_back(std::string("hist_distance_") + kChannelNames[c]);
        }
    }

    const GrayImage gray = comparison_gray(candidate, cfg);
    r.ssim_max = -1.0;
    for (const GrayImage& ref : reference.ssim_sample) {
        r.ssim_max = std::max(r.ssim_max, ssim(gray, ref, cfg.ssim_window));
    }
    if (r.ssim_max < cfg.min_ssim) r.reject_reasons.emplace_back("ssim_max");

    r.glcm = glcm_features(gray, cfg.glcm_levels);
    const auto f = as_array(r.glcm);
    for (std::size_t k = 0; k < 4; ++k) {
        const double diff = f[k] - reference.glcm_mean[k];
        const double sd = reference.glcm_std[k];
        if (sd > 1e-12) {
            r.glcm_z[k] = diff / sd;
        } else if (std::abs(diff) <= 1e-9) {
            r.glcm_z[k] = 0.0;
        } else {
            r.glcm_z[k] = diff > 0 ? std::numeric_limits<double>::infinity()
                                   : -std::numeric_limits<double>::infinity();
        }
        if (std::abs(r.glcm_z[k]) > cfg.max_glcm_z) {
            r.reject_reasons.push_back(std::string("glcm_z_") + kFeatureNames[k]);
        }
    }
    r.accepted = r.reject_reasons.empty();
    return r;
}

SynthValidationReport validate_synthetic(const std::string& image_id, const RgbImage& candidate,
                                         std::span<const RgbImage> reference,
                                         const ValidationConfig& cfg) {
    return validate_synthetic(image_id, candidate, build_reference(reference, cfg), cfg);
}

void write_report_csv(std::span<const SynthValidationReport> reports, const ValidationConfig& cfg,
                      const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
    std::size_t accepted = 0;
    for (const auto& r : reports) accepted += r.accepted ? 1 : 0;
    out << "# histogram distance: symmetric chi-square, bins=" << cfg.bins << '\n'
        << "# ssim: uniform " << cfg.ssim_window << "x" << cfg.ssim_window
        << " windows, max over reference subsample k=" << cfg.ssim_subsample
        << " seed=" << cfg.seed << ", compare_size=" << cfg.compare_size << '\n'
        << "# glcm: distance 1, angles 0/45/90/135, levels=" << cfg.glcm_levels << '\n'
        << "# thresholds: tau_h=" << cfg.max_hist_distance << " tau_s=" << cfg.min_ssim
        << " tau_g=" << cfg.max_glcm_z << '\n'
        << "# counts: total=" << reports.size() << " accepted=" << accepted
        << " rejected=" << reports.size() - accepted << '\n';
    csv::write_row(out, {"image_id", "hist_d_r", "hist_d_g", "hist_d_b", "ssim_max",
                         "glcm_contrast", "glcm_energy", "glcm_homogeneity", "glcm_correlation",
                         "z_contrast", "z_energy", "z_homogeneity", "z_correlation", "verdict",
                         "reasons"});
    for (const auto& r : reports) {
        std::string reasons;
        for (const auto& s : r.reject_reasons) {
            if (!reasons.empty()) reasons += ';';
            reasons += s;
        }
        csv::Row row{r.image_id};
        for (double d : r.hist_distance) row.push_back(csv::format_double(d));
        row.push_back(csv::format_double(r.ssim_max));
        for (double v : as_array(r.glcm)) row.push_back(csv::format_double(v));
        for (double z : r.glcm_z) row.push_back(csv::format_double(z));
        row.push_back(r.accepted ? "accept" : "reject");
        row.push_back(reasons);
        csv::write_row(out, row);
    }
}

ValidationConfig read_thresholds(const std::string& path, ValidationConfig cfg) {
    for (const auto& kv : config::read_file(path)) {
        const std::string& k = kv.first;
        if (k == "bins") cfg.bins = static_cast<int>(config::to_int(kv));
        else if (k == "glcm_levels") cfg.glcm_levels = static_cast<int>(config::to_int(kv));
        else if (k == "compare_size") cfg.compare_size = static_cast<int>(config::to_int(kv));
        else if (k == "ssim_window") cfg.ssim_window = static_cast<int>(config::to_int(kv));
        else if (k == "ssim_subsample") cfg.ssim_subsample = static_cast<std::size_t>(config::to_int(kv));
        else if (k == "seed") cfg.seed = static_cast<std::uint64_t>(config::to_int(kv));
        else if (k == "tau_h" || k == "max_hist_distance") cfg.max_hist_distance = config::to_double(kv);
        else if (k == "tau_s" || k == "min_ssim") cfg.min_ssim = config::to_double(kv);
        else if (k == "tau_g" || k == "max_glcm_z") cfg.max_glcm_z = config::to_double(kv);
        else throw Error(ErrorKind::Parse, "unknown threshold key '" + k + "'");
    }
    return cfg;
}

}  // namespace dermfair::synthval
