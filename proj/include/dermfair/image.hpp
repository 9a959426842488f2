#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dermfair/error.hpp"

namespace dermfair {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Single-channel row-major raster.
template <typename T>
class Plane {
public:
    Plane() = default;
    Plane(int width, int height, T fill = T{}) : width_(width), height_(height) {
        if (width <= 0 || height <= 0) {
            throw Error(ErrorKind::InvalidArgument, "plane dimensions must be positive");
        }
        data_.assign(static_cast<std::size_t>(width) * height, fill);
    }
    Plane(int width, int height, std::vector<T> data)
        : width_(width), height_(height), data_(std::move(data)) {
        if (width <= 0 || height <= 0 ||
            data_.size() != static_cast<std::size_t>(width) * height) {
            throw Error(ErrorKind::InvalidArgument, "plane data does not match dimensions");
        }
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(int x, int y) noexcept { return data_[index(x, y)]; }
    const T& operator()(int x, int y) const noexcept { return data_[index(x, y)]; }
    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }

    friend bool operator==(const Plane&, const Plane&) = default;

private:
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * width_ + x;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using GrayImage = Plane<std::uint8_t>;

// 8-bit interleaved RGB image.
class RgbImage {
public:
    RgbImage() = default;
    RgbImage(int width, int height, Rgb fill = {});
    RgbImage(int width, int height, std::vector<std::uint8_t> interleaved);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t pixel_count() const noexcept { return data_.size() / 3; }
    bool empty() const noexcept { return data_.empty(); }

    Rgb at(int x, int y) const noexcept {
        const std::size_t i = offset(x, y);
        return {data_[i], data_[i + 1], data_[i + 2]};
    }
    Rgb at(std::size_t pixel) const noexcept {
        return {data_[3 * pixel], data_[3 * pixel + 1], data_[3 * pixel + 2]};
    }
    void set(int x, int y, Rgb c) noexcept {
        const std::size_t i = offset(x, y);
        data_[i] = c.r;
        data_[i + 1] = c.g;
        data_[i + 2] = c.b;
    }
    void set(std::size_t pixel, Rgb c) noexcept {
        data_[3 * pixel] = c.r;
        data_[3 * pixel + 1] = c.g;
        data_[3 * pixel + 2] = c.b;
    }

    std::span<std::uint8_t> bytes() noexcept { return data_; }
    std::span<const std::uint8_t> bytes() const noexcept { return data_; }

    friend bool operator==(const RgbImage&, const RgbImage&) = default;

private:
    std::size_t offset(int x, int y) const noexcept {
        return 3 * (static_cast<std::size_t>(y) * width_ + x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

// Boolean raster. Used both for skin masks (true = skin) and lesion masks
// (true = lesion).
class Mask {
public:
    Mask() = default;
    Mask(int width, int height, bool fill = false);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return bits_.size(); }

    bool operator()(int x, int y) const noexcept {
        return bits_[static_cast<std::size_t>(y) * width_ + x] != 0;
    }
    bool operator[](std::size_t i) const noexcept { return bits_[i] != 0; }
    void set(int x, int y, bool v) noexcept {
        bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0;
    }
    void set(std::size_t i, bool v) noexcept { bits_[i] = v ? 1 : 0; }

    std::size_t count() const noexcept;
    bool same_shape(const Mask& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_;
    }

    friend bool operator==(const Mask&, const Mask&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> bits_;
};

using SkinMask = Mask;
using BinaryMask = Mask;

// BT.601 luma, rounded to 8 bits.
GrayImage to_gray(const RgbImage& image);

// Bilinear resampling with pixel-centre alignment.
RgbImage resize_bilinear(const RgbImage& image, int width, int height);
GrayImage resize_bilinear(const GrayImage& image, int width, int height);

RgbImage crop(const RgbImage& image, int x0, int y0, int width, int height);

// Nearest-neighbour resampling, used for masks.
Mask resize_nearest(const Mask& mask, int width, int height);

}  // namespace dermfair
