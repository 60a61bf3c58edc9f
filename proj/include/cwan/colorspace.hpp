#pragma once

#include "cwan/image.hpp"

namespace cwan {

/// sRGB -> CIE LAB (D65), channels rescaled to [0,1] as declared by LabImage.
LabImage rgb_to_lab(const SrgbImage& img);

/// Inverse conversion; out-of-gamut results are clamped to [0,1].
SrgbImage lab_to_rgb(const LabImage& lab);

// Scalar transfer functions, shared with the degradation synthesizer.
double srgb_decode(double c);
double srgb_encode(double c);

} // namespace cwan
