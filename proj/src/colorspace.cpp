#include "dermfair/colorspace.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace dermfair::colorspace {

namespace {

constexpr double kRgbToXyz[3][3] = {
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
};

using Matrix3 = std::array<std::array<double, 3>, 3>;

// Exact inverse of kRgbToXyz so the Lab round trip is lossless.
const Matrix3& xyz_to_rgb() {
    static const Matrix3 inv = [] {
        const auto& m = kRgbToXyz;
        Matrix3 c{};
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                const int i1 = (i + 1) % 3, i2 = (i + 2) % 3;
                const int j1 = (j + 1) % 3, j2 = (j + 2) % 3;
                c[j][i] = m[i1][j1] * m[i2][j2] - m[i1][j2] * m[i2][j1];
            }
        }
        const double det = m[0][0] * c[0][0] + m[0][1] * c[1][0] + m[0][2] * c[2][0];
        for (auto& row : c) {
            for (double& v : row) v /= det;
        }
        return c;
    }();
    return inv;
}

// D65 reference white, derived from the matrix rows so achromatic input maps
// to a* = b* = 0.
constexpr double kWhiteX = 0.4124564 + 0.3575761 + 0.1804375;
constexpr double kWhiteY = 0.2126729 + 0.7151522 + 0.0721750;
constexpr double kWhiteZ = 0.0193339 + 0.1191920 + 0.9503041;

constexpr double kDelta = 6.0 / 29.0;

double lab_f(double t) {
    return t > kDelta * kDelta * kDelta ? std::cbrt(t) : t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

double lab_f_inv(double t) {
    return t > kDelta ? t * t * t : 3.0 * kDelta * kDelta * (t - 4.0 / 29.0);
}

const std::array<double, 256>& linear_table() {
    static const std::array<double, 256> table = [] {
        std::array<double, 256> t{};
        for (int i = 0; i < 256; ++i) {
            const double v = i / 255.0;
            t[static_cast<std::size_t>(i)] =
                v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
        }
        return t;
    }();
    return table;
}

std::uint8_t to_u8(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

YCbCr rgb_to_ycbcr(Rgb p) noexcept {
    const double r = p.r;
    const double g = p.g;
    const double b = p.b;
    const double y = 0.299 * r + 0.587 * g + 0.114 * b;
    const double cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b;
    const double cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b;
    return {to_u8(y), to_u8(cb), to_u8(cr)};
}

YCbCrPlanes rgb_to_ycbcr(const RgbImage& image) {
    YCbCrPlanes planes{GrayImage(image.width(), image.height()),
                       GrayImage(image.width(), image.height()),
                       GrayImage(image.width(), image.height())};
    for (std::size_t i = 0; i < image.pixel_count(); ++i) {
        const YCbCr v = rgb_to_ycbcr(image.at(i));
        planes.y[i] = v.y;
        planes.cb[i] = v.cb;
        planes.cr[i] = v.cr;
    }
    return planes;
}

SkinMask skin_mask(const RgbImage& image) {
    SkinMask mask(image.width(), image.height());
    for (std::size_t i = 0; i < image.pixel_count(); ++i) {
        const YCbCr v = rgb_to_ycbcr(image.at(i));
        mask.set(i, is_skin_chroma(v.cb, v.cr));
    }
    return mask;
}

double srgb_to_linear(std::uint8_t v) noexcept { return linear_table()[v]; }

double linear_to_srgb(double v) noexcept {
    v = std::clamp(v, 0.0, 1.0);
    return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

LabPixel lab_from_linear(double r, double g, double b) noexcept {
    const double x = kRgbToXyz[0][0] * r + kRgbToXyz[0][1] * g + kRgbToXyz[0][2] * b;
    const double y = kRgbToXyz[1][0] * r + kRgbToXyz[1][1] * g + kRgbToXyz[1][2] * b;
    const double z = kRgbToXyz[2][0] * r + kRgbToXyz[2][1] * g + kRgbToXyz[2][2] * b;
    const double fx = lab_f(x / kWhiteX);
    const double fy = lab_f(y / kWhiteY);
    const double fz = lab_f(z / kWhiteZ);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

void lab_to_linear(const LabPixel& lab, double& r, double& g, double& b) noexcept {
    const double fy = (lab.l_star + 16.0) / 116.0;
    const double fx = fy + lab.a_star / 500.0;
    const double fz = fy - lab.b_star / 200.0;
    const double x = kWhiteX * lab_f_inv(fx);
    const double y = kWhiteY * lab_f_inv(fy);
    const double z = kWhiteZ * lab_f_inv(fz);
    const Matrix3& m = xyz_to_rgb();
    r = m[0][0] * x + m[0][1] * y + m[0][2] * z;
    g = m[1][0] * x + m[1][1] * y + m[1][2] * z;
    b = m[2][0] * x + m[2][1] * y + m[2][2] * z;
}

LabPixel srgb_to_lab(Rgb p) noexcept {
    return lab_from_linear(srgb_to_linear(p.r), srgb_to_linear(p.g), srgb_to_linear(p.b));
}

LabPixel mean_lab(const RgbImage& image, const SkinMask& mask) {
    if (mask.width() != image.width() || mask.height() != image.height()) {
        throw Error(ErrorKind::DimensionMismatch, "mask does not match image");
    }
    double sl = 0.0;
    double sa = 0.0;
    double sb = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < image.pixel_count(); ++i) {
        if (!mask[i]) continue;
        const LabPixel lab = srgb_to_lab(image.at(i));
        sl += lab.l_star;
        sa += lab.a_star;
        sb += lab.b_star;
        ++n;
    }
    if (n == 0) throw Error(ErrorKind::EmptyMask, "no pixels selected by mask");
    const double inv = 1.0 / static_cast<double>(n);
    return {sl * inv, sa * inv, sb * inv};
}

}  // namespace dermfair::colorspace
