#pragma once

#include <cstdint>

#include "dermfair/image.hpp"

namespace dermfair::colorspace {

// 8-bit full-range BT.601 YCbCr sample.
struct YCbCr {
    std::uint8_t y = 0;
    std::uint8_t cb = 128;
    std::uint8_t cr = 128;

    friend bool operator==(const YCbCr&, const YCbCr&) = default;
};

struct YCbCrPlanes {
    GrayImage y;
    GrayImage cb;
    GrayImage cr;
};

struct LabPixel {
    double l_star = 0.0;
    double a_star = 0.0;
    double b_star = 0.0;
};

// Inclusive chrominance window for skin.
inline constexpr int kSkinCbMin = 77;
inline constexpr int kSkinCbMax = 173;
inline constexpr int kSkinCrMin = 133;
inline constexpr int kSkinCrMax = 255;

YCbCr rgb_to_ycbcr(Rgb pixel) noexcept;
YCbCrPlanes rgb_to_ycbcr(const RgbImage& image);

constexpr bool is_skin_chroma(int cb, int cr) noexcept {
    return cb >= kSkinCbMin && cb <= kSkinCbMax && cr >= kSkinCrMin && cr <= kSkinCrMax;
}

SkinMask skin_mask(const RgbImage& image);

// sRGB (IEC 61966-2-1) -> XYZ -> CIELAB, D65 white.
LabPixel srgb_to_lab(Rgb pixel) noexcept;
LabPixel lab_from_linear(double r, double g, double b) noexcept;
void lab_to_linear(const LabPixel& lab, double& r, double& g, double& b) noexcept;

double srgb_to_linear(std::uint8_t v) noexcept;
double linear_to_srgb(double v) noexcept;

// Mean L*, a*, b* over the masked pixels. Throws EmptyMask when nothing is
// selected.
LabPixel mean_lab(const RgbImage& image, const SkinMask& mask);

}  // namespace dermfair::colorspace
