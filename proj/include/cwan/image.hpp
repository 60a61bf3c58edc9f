#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace cwan {

/// Interleaved H×W×3 sRGB image, float values in [0,1].
struct SrgbImage {
    int height = 0;
    int width = 0;
    std::vector<float> pixels; // row-major, r g b per pixel

    SrgbImage() = default;
    SrgbImage(int h, int w) : height(h), width(w), pixels(static_cast<std::size_t>(h) * w * 3, 0.f) {
        if (h <= 0 || w <= 0) throw std::invalid_argument("SrgbImage: dims must be positive");
    }

    float& at(int y, int x, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    float at(int y, int x, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
};

/// Lightness/color planes, both normalized to [0,1]:
/// lightness = L*/100, ab = (a*+128)/255, (b*+128)/255.
struct LabImage {
    int height = 0;
    int width = 0;
    std::vector<float> lightness; // H×W
    std::vector<float> ab;        // H×W×2 interleaved (a, b)

    LabImage() = default;
    LabImage(int h, int w)
        : height(h),
          width(w),
          lightness(static_cast<std::size_t>(h) * w, 0.f),
          ab(static_cast<std::size_t>(h) * w * 2, 0.f) {}

    float& l_at(int y, int x) { return lightness[static_cast<std::size_t>(y) * width + x]; }
    float l_at(int y, int x) const { return lightness[static_cast<std::size_t>(y) * width + x]; }
    float& ab_at(int y, int x, int c) {
        return ab[(static_cast<std::size_t>(y) * width + x) * 2 + c];
    }
    float ab_at(int y, int x, int c) const {
        return ab[(static_cast<std::size_t>(y) * width + x) * 2 + c];
    }
};

} // namespace cwan
