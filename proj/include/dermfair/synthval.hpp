#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dermfair/image.hpp"

namespace dermfair::synthval {

using Histogram = std::vector<double>;

// Per-channel (R, G, B) histograms, each summing to 1.
struct RgbHistograms {
    std::array<Histogram, 3> channels;
};

RgbHistograms rgb_histograms(const RgbImage& image, int bins);

// Symmetric chi-square distance 0.5 * sum (a - b)^2 / (a + b), skipping empty
// bins. Throws BinMismatch on differing lengths.
double hist_distance(std::span<const double> a, std::span<const double> b);

inline constexpr double kSsimC1 = (0.01 * 255) * (0.01 * 255);
inline constexpr double kSsimC2 = (0.03 * 255) * (0.03 * 255);

// Mean SSIM over all window x window positions (uniform weights, stride 1).
// Images smaller than the window use a single window covering the image.
double ssim(const GrayImage& a, const GrayImage& b, int window = 8);

struct GlcmFeatures {
    double contrast = 0.0;
    double energy = 0.0;
    double homogeneity = 0.0;
    double correlation = 0.0;
};

enum GlcmAngle : unsigned {
    kAngle0 = 1U << 0,
    kAngle45 = 1U << 1,
    kAngle90 = 1U << 2,
    kAngle135 = 1U << 3,
    kAllAngles = kAngle0 | kAngle45 | kAngle90 | kAngle135,
};

// Symmetric, normalized co-occurrence at distance 1 pooled over the chosen
// angles, after quantizing to `levels` grey levels (q = v * levels / 256).
// Correlation of a zero-variance image is defined as 1.
GlcmFeatures glcm_features(const GrayImage& image, int levels = 64,
                           unsigned angles = kAllAngles);

struct ValidationConfig {
    int bins = 32;
    int glcm_levels = 64;
    int compare_size = 224;  // SSIM/GLCM resolution
    int ssim_window = 8;
    std::size_t ssim_subsample = 32;
    std::uint64_t seed = 42;
    double max_hist_distance = 0.5;  // tau_h, per channel
    double min_ssim = 0.2;           // tau_s
    double max_glcm_z = 3.0;         // tau_g
};

// Read-only statistics of the real reference sample, computed once.
struct ReferenceStats {
    RgbHistograms pooled;
    std::vector<GrayImage> ssim_sample;  // resized greyscale
    std::array<double, 4> glcm_mean{};
    std::array<double, 4> glcm_std{};
    std::size_t reference_count = 0;
};

ReferenceStats build_reference(std::span<const RgbImage> reference, const ValidationConfig& cfg);

struct SynthValidationReport {
    std::string image_id;
    std::array<double, 3> hist_distance{};
    double ssim_max = 0.0;
    GlcmFeatures glcm;
    std::array<double, 4> glcm_z{};
    bool accepted = true;
    std::vector<std::string> reject_reasons;
};

SynthValidationReport validate_synthetic(const std::string& image_id, const RgbImage& candidate,
                                         const ReferenceStats& reference,
                                         const ValidationConfig& cfg);

// Throws EmptyReference when `reference` is empty.
SynthValidationReport validate_synthetic(const std::string& image_id, const RgbImage& candidate,
                                         std::span<const RgbImage> reference,
                                         const ValidationConfig& cfg);

void write_report_csv(std::span<const SynthValidationReport> reports, const ValidationConfig& cfg,
                      const std::string& path);

// key=value lines; unknown keys raise Parse.
ValidationConfig read_thresholds(const std::string& path, ValidationConfig base = {});

}  // namespace dermfair::synthval
