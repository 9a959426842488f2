#include "dermfair/imageio.hpp"

#include <cstring>
#include <filesystem>

#include <opencv2/imgcodecs.hpp>

#include "dermfair/error.hpp"

namespace dermfair {

namespace {

cv::Mat load(const std::string& path, int flags) {
    if (!std::filesystem::exists(path)) throw Error(ErrorKind::MissingFile, "no such file: " + path);
    cv::Mat m;
    try {
        m = cv::imread(path, flags);
    } catch (const cv::Exception& e) {
        throw Error(ErrorKind::Io, "cannot decode " + path + ": " + e.what());
    }
    if (m.empty()) throw Error(ErrorKind::Io, "cannot decode " + path);
    return m;
}

void store(const std::string& path, const cv::Mat& m) {
    bool ok = false;
    try {
        ok = cv::imwrite(path, m);
    } catch (const cv::Exception& e) {
        throw Error(ErrorKind::Io, "cannot write " + path + ": " + e.what());
    }
    if (!ok) throw Error(ErrorKind::Io, "cannot write " + path);
}

}  // namespace

RgbImage read_rgb(const std::string& path) {
    const cv::Mat bgr = load(path, cv::IMREAD_COLOR);
    RgbImage out(bgr.cols, bgr.rows);
    auto bytes = out.bytes();
    std::size_t k = 0;
    for (int y = 0; y < bgr.rows; ++y) {
        const std::uint8_t* row = bgr.ptr<std::uint8_t>(y);
        for (int x = 0; x < bgr.cols; ++x, k += 3) {
            bytes[k] = row[3 * x + 2];
            bytes[k + 1] = row[3 * x + 1];
            bytes[k + 2] = row[3 * x];
        }
    }
    return out;
}

GrayImage read_gray(const std::string& path) {
    const cv::Mat g = load(path, cv::IMREAD_GRAYSCALE);
    GrayImage out(g.cols, g.rows);
    for (int y = 0; y < g.rows; ++y) {
        std::memcpy(&out(0, y), g.ptr<std::uint8_t>(y), static_cast<std::size_t>(g.cols));
    }
    return out;
}

Mask read_mask(const std::string& path) {
    const GrayImage g = read_gray(path);
    Mask out(g.width(), g.height());
    for (std::size_t i = 0; i < g.size(); ++i) out.set(i, g[i] != 0);
    return out;
}

void write_png(const std::string& path, const RgbImage& image) {
    cv::Mat bgr(image.height(), image.width(), CV_8UC3);
    const auto bytes = image.bytes();
    std::size_t k = 0;
    for (int y = 0; y < bgr.rows; ++y) {
        std::uint8_t* row = bgr.ptr<std::uint8_t>(y);
        for (int x = 0; x < bgr.cols; ++x, k += 3) {
            row[3 * x] = bytes[k + 2];
            row[3 * x + 1] = bytes[k + 1];
            row[3 * x + 2] = bytes[k];
        }
    }
    store(path, bgr);
}

void write_png(const std::string& path, const GrayImage& image) {
    cv::Mat g(image.height(), image.width(), CV_8UC1);
    for (int y = 0; y < g.rows; ++y) {
        std::memcpy(g.ptr<std::uint8_t>(y), &image(0, y), static_cast<std::size_t>(g.cols));
    }
    store(path, g);
}

void write_mask_png(const std::string& path, const Mask& mask) {
    GrayImage g(mask.width(), mask.height());
    for (std::size_t i = 0; i < mask.size(); ++i) g[i] = mask[i] ? 255 : 0;
    write_png(path, g);
}

}  // namespace dermfair
