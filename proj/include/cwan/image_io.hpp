#pragma once

#include <string>

#include "cwan/image.hpp"

namespace cwan {

/// Reads an 8-bit PNG or binary PPM (P6) by extension; values scaled to [0,1].
SrgbImage read_image(const std::string& path);

/// Writes 8-bit by extension (.png or .ppm); values rounded from [0,1].
void write_image(const std::string& path, const SrgbImage& img);

SrgbImage read_png(const std::string& path);
void write_png(const std::string& path, const SrgbImage& img);
SrgbImage read_ppm(const std::string& path);
void write_ppm(const std::string& path, const SrgbImage& img);

/// Single grayscale plane as PNG, values clamped from [0,1].
void write_gray_png(const std::string& path, const float* plane, int height, int width);

} // namespace cwan
