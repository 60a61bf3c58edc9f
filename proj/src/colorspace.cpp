#include "cwan/colorspace.hpp"

#include <algorithm>
#include <cmath>

namespace cwan {

namespace {

// D65 reference white
constexpr double kXn = 0.95047;
constexpr double kYn = 1.0;
constexpr double kZn = 1.08883;

constexpr double kDelta = 6.0 / 29.0;

double lab_pivot(double t) {
    return t > kDelta * kDelta * kDelta ? std::cbrt(t) : t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

double lab_pivot_inv(double t) {
    return t > kDelta ? t * t * t : 3.0 * kDelta * kDelta * (t - 4.0 / 29.0);
}

float clamp01f(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

} // namespace

double srgb_decode(double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double srgb_encode(double c) {
    if (c <= 0.0) return 0.0;
    return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

LabImage rgb_to_lab(const SrgbImage& img) {
    LabImage out(img.height, img.width);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const double r = srgb_decode(img.at(y, x, 0));
            const double g = srgb_decode(img.at(y, x, 1));
            const double b = srgb_decode(img.at(y, x, 2));

            const double xx = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
            const double yy = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
            const double zz = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;

            const double fx = lab_pivot(xx / kXn);
            const double fy = lab_pivot(yy / kYn);
            const double fz = lab_pivot(zz / kZn);

            const double lstar = 116.0 * fy - 16.0;
            const double astar = 500.0 * (fx - fy);
            const double bstar = 200.0 * (fy - fz);

            out.l_at(y, x) = static_cast<float>(lstar / 100.0);
            out.ab_at(y, x, 0) = static_cast<float>((astar + 128.0) / 255.0);
            out.ab_at(y, x, 1) = static_cast<float>((bstar + 128.0) / 255.0);
        }
    }
    return out;
}

SrgbImage lab_to_rgb(const LabImage& lab) {
    SrgbImage out(lab.height, lab.width);
    for (int y = 0; y < lab.height; ++y) {
        for (int x = 0; x < lab.width; ++x) {
            const double lstar = static_cast<double>(lab.l_at(y, x)) * 100.0;
            const double astar = static_cast<double>(lab.ab_at(y, x, 0)) * 255.0 - 128.0;
            const double bstar = static_cast<double>(lab.ab_at(y, x, 1)) * 255.0 - 128.0;

            const double fy = (lstar + 16.0) / 116.0;
            const double fx = fy + astar / 500.0;
            const double fz = fy - bstar / 200.0;

            const double xx = kXn * lab_pivot_inv(fx);
            const double yy = kYn * lab_pivot_inv(fy);
            const double zz = kZn * lab_pivot_inv(fz);

            const double r = 3.2404542 * xx - 1.5371385 * yy - 0.4985314 * zz;
            const double g = -0.9692660 * xx + 1.8760108 * yy + 0.0415560 * zz;
            const double b = 0.0556434 * xx - 0.2040259 * yy + 1.0572252 * zz;

            out.at(y, x, 0) = clamp01f(srgb_encode(r));
            out.at(y, x, 1) = clamp01f(srgb_encode(g));
            out.at(y, x, 2) = clamp01f(srgb_encode(b));
        }
    }
    return out;
}

} // namespace cwan
