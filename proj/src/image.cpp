#include "dermfair/image.hpp"

#include <algorithm>
#include <cmath>

#include "dermfair/error.hpp"

namespace dermfair {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::Io: return "Io";
        case ErrorKind::Parse: return "Parse";
        case ErrorKind::EmptyMask: return "EmptyMask";
        case ErrorKind::DegenerateChroma: return "DegenerateChroma";
        case ErrorKind::ArtifactRejection: return "ArtifactRejection";
        case ErrorKind::BinMismatch: return "BinMismatch";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::EmptyReference: return "EmptyReference";
        case ErrorKind::DegenerateImage: return "DegenerateImage";
        case ErrorKind::EmptyTruth: return "EmptyTruth";
        case ErrorKind::SingleClass: return "SingleClass";
        case ErrorKind::MissingPrediction: return "MissingPrediction";
        case ErrorKind::UnknownDiagnosis: return "UnknownDiagnosis";
        case ErrorKind::MissingFile: return "MissingFile";
        case ErrorKind::UnvalidatedImage: return "UnvalidatedImage";
        case ErrorKind::DuplicateId: return "DuplicateId";
        case ErrorKind::MalformedLog: return "MalformedLog";
    }
    return "Unknown";
}

RgbImage::RgbImage(int width, int height, Rgb fill) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) {
        throw Error(ErrorKind::InvalidArgument, "image dimensions must be positive");
    }
    data_.resize(3 * static_cast<std::size_t>(width) * height);
    for (std::size_t i = 0; i < data_.size(); i += 3) {
        data_[i] = fill.r;
        data_[i + 1] = fill.g;
        data_[i + 2] = fill.b;
    }
}

RgbImage::RgbImage(int width, int height, std::vector<std::uint8_t> interleaved)
    : width_(width), height_(height), data_(std::move(interleaved)) {
    if (width <= 0 || height <= 0 ||
        data_.size() != 3 * static_cast<std::size_t>(width) * height) {
        throw Error(ErrorKind::InvalidArgument, "pixel buffer does not match dimensions");
    }
}

Mask::Mask(int width, int height, bool fill) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) {
        throw Error(ErrorKind::InvalidArgument, "mask dimensions must be positive");
    }
    bits_.assign(static_cast<std::size_t>(width) * height, fill ? 1 : 0);
}

std::size_t Mask::count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

GrayImage to_gray(const RgbImage& image) {
    GrayImage out(image.width(), image.height());
    for (std::size_t i = 0; i < image.pixel_count(); ++i) {
        const Rgb p = image.at(i);
        const double y = 0.299 * p.r + 0.587 * p.g + 0.114 * p.b;
        out[i] = static_cast<std::uint8_t>(std::clamp(std::lround(y), 0L, 255L));
    }
    return out;
}

namespace {

struct Tap {
    int i0;
    int i1;
    double w1;
};

std::vector<Tap> make_taps(int src, int dst) {
    std::vector<Tap> taps(static_cast<std::size_t>(dst));
    const double scale = static_cast<double>(src) / dst;
    for (int i = 0; i < dst; ++i) {
        double s = (i + 0.5) * scale - 0.5;
        s = std::clamp(s, 0.0, static_cast<double>(src - 1));
        const int i0 = static_cast<int>(std::floor(s));
        const int i1 = std::min(i0 + 1, src - 1);
        taps[static_cast<std::size_t>(i)] = {i0, i1, s - i0};
    }
    return taps;
}

template <int Channels, typename Get, typename Put>
void bilinear(int sw, int sh, int dw, int dh, Get get, Put put) {
    const auto xs = make_taps(sw, dw);
    const auto ys = make_taps(sh, dh);
    for (int y = 0; y < dh; ++y) {
        const Tap ty = ys[static_cast<std::size_t>(y)];
        for (int x = 0; x < dw; ++x) {
            const Tap tx = xs[static_cast<std::size_t>(x)];
            for (int c = 0; c < Channels; ++c) {
                const double top = get(tx.i0, ty.i0, c) * (1.0 - tx.w1) + get(tx.i1, ty.i0, c) * tx.w1;
                const double bot = get(tx.i0, ty.i1, c) * (1.0 - tx.w1) + get(tx.i1, ty.i1, c) * tx.w1;
                const double v = top * (1.0 - ty.w1) + bot * ty.w1;
                put(x, y, c, static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)));
            }
        }
    }
}

}  // namespace

RgbImage resize_bilinear(const RgbImage& image, int width, int height) {
    if (width == image.width() && height == image.height()) return image;
    RgbImage out(width, height);
    auto src = image.bytes();
    auto dst = out.bytes();
    const int sw = image.width();
    bilinear<3>(
        image.width(), image.height(), width, height,
        [&](int x, int y, int c) {
            return static_cast<double>(src[3 * (static_cast<std::size_t>(y) * sw + x) + c]);
        },
        [&](int x, int y, int c, std::uint8_t v) {
            dst[3 * (static_cast<std::size_t>(y) * width + x) + c] = v;
        });
    return out;
}

GrayImage resize_bilinear(const GrayImage& image, int width, int height) {
    if (width == image.width() && height == image.height()) return image;
    GrayImage out(width, height);
    bilinear<1>(
        image.width(), image.height(), width, height,
        [&](int x, int y, int) { return static_cast<double>(image(x, y)); },
        [&](int x, int y, int, std::uint8_t v) { out(x, y) = v; });
    return out;
}

RgbImage crop(const RgbImage& image, int x0, int y0, int width, int height) {
    if (x0 < 0 || y0 < 0 || width <= 0 || height <= 0 || x0 + width > image.width() ||
        y0 + height > image.height()) {
        throw Error(ErrorKind::InvalidArgument, "crop window outside image");
    }
    RgbImage out(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) out.set(x, y, image.at(x0 + x, y0 + y));
    }
    return out;
}

Mask resize_nearest(const Mask& mask, int width, int height) {
    if (width == mask.width() && height == mask.height()) return mask;
    Mask out(width, height);
    for (int y = 0; y < height; ++y) {
        const int sy = std::min(mask.height() - 1,
                                static_cast<int>((y + 0.5) * mask.height() / height));
        for (int x = 0; x < width; ++x) {
            const int sx = std::min(mask.width() - 1,
                                    static_cast<int>((x + 0.5) * mask.width() / width));
            out.set(x, y, mask(sx, sy));
        }
    }
    return out;
}

}  // namespace dermfair
