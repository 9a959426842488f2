#pragma once

#include <string>

#include "dermfair/image.hpp"

namespace dermfair {

// Decodes PNG/JPEG (any channel count) to 8-bit RGB. Throws Io.
RgbImage read_rgb(const std::string& path);
GrayImage read_gray(const std::string& path);
// Nonzero pixels are true.
Mask read_mask(const std::string& path);

void write_png(const std::string& path, const RgbImage& image);
void write_png(const std::string& path, const GrayImage& image);
// Writes {0, 255}.
void write_mask_png(const std::string& path, const Mask& mask);

}  // namespace dermfair
