#include "cwan/attention.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <unordered_map>

#include "cwan/rng.hpp"

namespace cwan {

namespace {

// 8-bit quantization packed into one key; color equality is exact at 8 bits.
inline uint32_t quantize_rgb(const SrgbImage& img, int y, int x) {
    const auto q = [](float v) {
        const int i = static_cast<int>(std::lround(static_cast<double>(v) * 255.0));
        return static_cast<uint32_t>(std::clamp(i, 0, 255));
    };
    return (q(img.at(y, x, 0)) << 16) | (q(img.at(y, x, 1)) << 8) | q(img.at(y, x, 2));
}

} // namespace

FrequencyImage color_frequency(const SrgbImage& img) {
    FrequencyImage f;
    f.height = img.height;
    f.width = img.width;
    f.counts.resize(img.pixel_count());

    std::unordered_map<uint32_t, int> histogram;
    histogram.reserve(img.pixel_count());
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) ++histogram[quantize_rgb(img, y, x)];

    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            f.counts[static_cast<std::size_t>(y) * img.width + x] =
                histogram[quantize_rgb(img, y, x)];
    return f;
}

Tensor<float> frequency_mask(const FrequencyImage& freq, double tau_low, double tau_high) {
    if (tau_low >= tau_high)
        throw std::invalid_argument("frequency_mask: tau_low must be below tau_high");
    Tensor<float> mask({1, freq.height, freq.width});
    for (std::size_t i = 0; i < freq.counts.size(); ++i) {
        const double c = static_cast<double>(freq.counts[i]);
        mask.data[i] = (tau_low < c && c < tau_high) ? 1.f : 0.f;
    }
    return mask;
}

Tensor<float> attention_map(const Tensor<float>& ab, const Tensor<float>& mask) {
    if (ab.channels() != 2 || mask.channels() != 1 || ab.height() != mask.height() ||
        ab.width() != mask.width())
        throw std::invalid_argument("attention_map: shape mismatch");

    Tensor<float> map({2, ab.height(), ab.width()});
    const std::size_t plane = static_cast<std::size_t>(ab.height()) * ab.width();

    for (int c = 0; c < 2; ++c) {
        float lo = 0.f, hi = 0.f;
        bool any = false;
        for (std::size_t i = 0; i < plane; ++i) {
            if (mask.data[i] == 0.f) continue;
            const float v = ab.data[c * plane + i];
            if (!any) {
                lo = hi = v;
                any = true;
            } else {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        if (!any) continue; // channel stays zero
        const float range = hi - lo;
        for (std::size_t i = 0; i < plane; ++i) {
            if (mask.data[i] == 0.f) continue;
            const float v = ab.data[c * plane + i];
            map.data[c * plane + i] = range > 0.f ? (v - lo) / range : 1.f;
        }
    }
    return map;
}

PointSample sample_attention_points(const Tensor<float>& map, int beta, uint64_t seed) {
    if (beta < 1) throw std::invalid_argument("sample_attention_points: beta must be >= 1");
    if (map.channels() != 2)
        throw std::invalid_argument("sample_attention_points: map must have 2 channels");

    const std::size_t plane = static_cast<std::size_t>(map.height()) * map.width();
    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < plane; ++i)
        if (map.data[i] != 0.f || map.data[plane + i] != 0.f) support.push_back(i);

    PointSample s;
    s.point_mask.resize({1, map.height(), map.width()});
    s.points.resize({2, map.height(), map.width()});

    const int take = static_cast<int>(std::min<std::size_t>(support.size(), beta));
    auto rng = make_rng(seed);
    // Partial Fisher-Yates: first `take` entries are the sample.
    for (int i = 0; i < take; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, support.size() - 1);
        std::swap(support[i], support[pick(rng)]);
        const std::size_t idx = support[i];
        s.point_mask.data[idx] = 1.f;
        s.points.data[idx] = map.data[idx];
        s.points.data[plane + idx] = map.data[plane + idx];
    }
    s.selected = take;
    return s;
}

AttentionBundle make_attention_bundle(const SrgbImage& colors, const Tensor<float>& ab,
                                      const AttentionParams& params, uint64_t seed) {
    const FrequencyImage freq = color_frequency(colors);
    const double n = static_cast<double>(freq.total_pixels());

    AttentionBundle b;
    b.mask = frequency_mask(freq, params.tau_low_frac * n, params.tau_high_frac * n);
    b.map = attention_map(ab, b.mask);
    PointSample s = sample_attention_points(b.map, params.beta, seed);
    b.point_mask = std::move(s.point_mask);
    b.points = std::move(s.points);
    b.beta_requested = params.beta;
    b.beta_effective = s.selected;
    b.seed = seed;
    return b;
}

} // namespace cwan
