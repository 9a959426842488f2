#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dermfair/image.hpp"
#include "dermfair/random.hpp"

namespace dermfair::preprocess {

inline constexpr std::array<double, 3> kImageNetMean = {0.485, 0.456, 0.406};
inline constexpr std::array<double, 3> kImageNetStd = {0.229, 0.224, 0.225};

enum class GammaMode { Fixed, Adaptive };
enum class AugmentOrder { AfterPreprocess, BeforePreprocess };

struct PreprocessConfig {
    int target_size = 224;
    int eval_resize = 256;
    GammaMode gamma_mode = GammaMode::Adaptive;
    double gamma = 1.0;  // used when gamma_mode == Fixed
    double gamma_min = 0.5;
    double gamma_max = 2.0;
    double clahe_clip = 2.0;
    int clahe_tiles_x = 8;
    int clahe_tiles_y = 8;
    double nlm_strength = 10.0;
    int nlm_patch = 7;
    int nlm_search = 21;
    int hair_kernel = 17;
    int hair_threshold = 10;
    double max_artifact_fraction = 0.40;
    std::uint64_t seed = 42;
    AugmentOrder augment_order = AugmentOrder::AfterPreprocess;

    // Throws InvalidArgument when a field is out of range.
    void validate() const;
};

// key=value file; unknown keys raise Parse.
PreprocessConfig read_config(const std::string& path, PreprocessConfig base = {});

// Three float planes, channel-major.
struct NormalizedImage {
    int width = 0;
    int height = 0;
    std::array<std::vector<float>, 3> channels;

    float at(int c, int x, int y) const noexcept {
        return channels[static_cast<std::size_t>(c)][static_cast<std::size_t>(y) * width + x];
    }
    friend bool operator==(const NormalizedImage&, const NormalizedImage&) = default;
};

NormalizedImage normalize(const RgbImage& image);
RgbImage denormalize(const NormalizedImage& image);

// Non-local means with patch-distance box sums; weight exp(-d2 / h^2) where d2
// is the mean squared difference per patch sample.
RgbImage nlm_denoise(const RgbImage& image, double h, int patch = 7, int search = 21);

// Returns the exponent applied: fixed, or log(0.5) / log(mean_luma / 255)
// clamped to [gamma_min, gamma_max] (1 for all-black or all-white input).
double choose_gamma(const RgbImage& image, const PreprocessConfig& cfg);
RgbImage apply_gamma(const RgbImage& image, double gamma);

// Contrast-limited adaptive histogram equalization on an 8-bit plane. A tile
// whose pixels all share one value maps identically.
GrayImage clahe(const GrayImage& image, double clip_limit, int tiles_x, int tiles_y);
// CLAHE applied to the CIELAB lightness of an RGB image.
RgbImage clahe_luminance(const RgbImage& image, double clip_limit, int tiles_x, int tiles_y);

// Black-hat (closing minus image) with a cross-shaped structuring element.
GrayImage black_hat(const GrayImage& image, int kernel);

struct HairResult {
    RgbImage image;
    BinaryMask flagged;
    double flagged_fraction = 0.0;
};

// Flags black-hat responses above `threshold` and fills them with the
// inverse-distance-weighted mean of nearby unflagged pixels. Throws
// ArtifactRejection when more than `max_fraction` of the pixels are flagged.
HairResult suppress_hair(const RgbImage& image, int kernel, int threshold, double max_fraction);

struct PreprocessResult {
    RgbImage processed;  // 8-bit output of the filter chain
    NormalizedImage normalized;
    double gamma = 1.0;
    double hair_fraction = 0.0;
};

// resize -> NLM -> gamma -> CLAHE (lightness) -> hair suppression -> normalize.
PreprocessResult preprocess_full(const RgbImage& image, const PreprocessConfig& cfg);
NormalizedImage preprocess(const RgbImage& image, const PreprocessConfig& cfg);

// --- augmentation ------------------------------------------------------------

struct AugmentParams {
    int crop_x = 0;
    int crop_y = 0;
    int crop_w = 0;
    int crop_h = 0;
    bool hflip = false;
    bool vflip = false;
    double brightness = 1.0;  // factors in [0.8, 1.2]
    double contrast = 1.0;
    double saturation = 1.0;
    double hue = 0.0;  // turn fraction in [-0.1, 0.1]
};

// Random resized crop (scale [0.08, 1], aspect [3/4, 4/3], 10 attempts then
// centre crop), independent 50% flips, colour jitter.
AugmentParams draw_augment(int width, int height, Rng& rng);
RgbImage apply_augment(const RgbImage& image, const AugmentParams& params, int out_size = 224);
RgbImage train_augment(const RgbImage& image, Rng& rng, int out_size = 224);

// Generator for one image, derived from the global seed and the image id.
Rng image_rng(std::uint64_t seed, std::string_view image_id);

// One training sample honouring cfg.augment_order.
NormalizedImage train_sample(const RgbImage& image, const PreprocessConfig& cfg, Rng& rng);

// Resize to eval_resize, centre-crop target_size, normalize.
NormalizedImage eval_transform(const RgbImage& image, const PreprocessConfig& cfg = {});

}  // namespace dermfair::preprocess
