#pragma once

#include <cstdint>
#include <vector>

#include "cwan/image.hpp"
#include "cwan/tensor.hpp"

namespace cwan {

/// Per-pixel occurrence counts of that pixel's 8-bit quantized RGB color.
struct FrequencyImage {
    int height = 0;
    int width = 0;
    std::vector<int> counts; // H×W

    int at(int y, int x) const { return counts[static_cast<std::size_t>(y) * width + x]; }
    std::size_t total_pixels() const { return static_cast<std::size_t>(height) * width; }
};

/// Ground-truth attention supervision for one training patch:
/// binary frequency mask, normalized 2-channel attention map, sampled point
/// mask and the sparse point values drawn from the map.
struct AttentionBundle {
    Tensor<float> mask;       // (1,H,W), 0/1
    Tensor<float> map;        // (2,H,W) in [0,1]
    Tensor<float> point_mask; // (1,H,W), 0/1
    Tensor<float> points;     // (2,H,W) = map ⊙ point_mask
    int beta_requested = 0;
    int beta_effective = 0; // = sum(point_mask)
    uint64_t seed = 0;
};

FrequencyImage color_frequency(const SrgbImage& img);

/// Keeps counts strictly between the thresholds: mask = 1 iff tau_low < count < tau_high.
Tensor<float> frequency_mask(const FrequencyImage& freq, double tau_low, double tau_high);

/// Per-channel Hadamard product of the ab planes with the mask, then min-max
/// normalization of the values on the mask support into [0,1]. A constant
/// support maps to 1; an empty mask yields an all-zero map.
/// `ab` is a (2,H,W) tensor of normalized a/b channels.
Tensor<float> attention_map(const Tensor<float>& ab, const Tensor<float>& mask);

/// Uniform sample without replacement of min(beta, |support|) coordinates from
/// the non-zero support of the map (union over the two channels). Returns the
/// point mask and the masked map values.
struct PointSample {
    Tensor<float> point_mask; // (1,H,W)
    Tensor<float> points;     // (2,H,W)
    int selected = 0;
};
PointSample sample_attention_points(const Tensor<float>& map, int beta, uint64_t seed);

struct AttentionParams {
    double tau_low_frac = 0.05;  // of patch pixel count
    double tau_high_frac = 0.5;
    int beta = 20;
};

/// Full supervision construction for one patch: frequency image of `colors`,
/// thresholds scaled by the patch pixel count, map built from `ab`.
AttentionBundle make_attention_bundle(const SrgbImage& colors, const Tensor<float>& ab,
                                      const AttentionParams& params, uint64_t seed);

} // namespace cwan
