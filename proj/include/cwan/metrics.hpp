#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "cwan/image.hpp"
#include "cwan/tensor.hpp"

namespace cwan {

/// PSNR in dB over all pixels and channels, MAX = 1. Identical images return
/// +infinity (reported as "inf" in text output).
double psnr(const SrgbImage& a, const SrgbImage& b);
double psnr_mse(double mse); // 10*log10(1/mse), +inf at mse == 0

/// Mean SSIM after grayscale conversion (Rec.601 luma), 11x11 Gaussian window
/// sigma 1.5, K1 = 0.01, K2 = 0.03, dynamic range 1. Windows are evaluated on
/// the valid interior only; images must be at least 11x11.
double ssim(const SrgbImage& a, const SrgbImage& b);

/// Lightness-order error. Lightness is the per-pixel max over RGB; both images
/// are nearest-neighbor downsampled by ratio `down_target`/min(H,W) when
/// larger; the value is the mean over pixels of the number of pixels whose
/// (>=) order relation flips between the two images.
double loe(const SrgbImage& low, const SrgbImage& enhanced, int down_target = 50);

/// Hasler-Susstrunk colorfulness on the 0-255 scale:
/// sqrt(s1^2 + s2^2) + 0.37 sqrt(m1^2 + m2^2) over C1 = R-G, C2 = (R+G)/2 - B.
double colorfulness(const SrgbImage& img);

enum class PointPsnrMode { Points, Neighborhood8 };

/// PSNR restricted to the coordinates of point_mask (or to their 8-connected
/// neighborhoods, excluding the points themselves). Operates on same-shape
/// (C,H,W) tensors. Throws on an empty coordinate set.
double psnr_at_points(const Tensor<float>& pred, const Tensor<float>& gt,
                      const Tensor<float>& point_mask, PointPsnrMode mode);

/// Accumulating form used by the per-epoch training diagnostic.
struct MaskedSse {
    double sse = 0.0;
    std::size_t count = 0; // coordinates * channels
    void accumulate(const Tensor<float>& pred, const Tensor<float>& gt,
                    const Tensor<float>& point_mask, PointPsnrMode mode);
    double psnr() const;
};

/// 40 seeded k-means centers over the normalized ab plane plus nearest-center
/// assignment; persisted as CSV so coverage numbers are reproducible.
struct ColorClusterMap {
    std::vector<float> centers_a;
    std::vector<float> centers_b;

    static constexpr int kClusters = 40;
    static ColorClusterMap make_default(uint64_t seed = 17);

    int assign(float a, float b) const;
    void save(const std::string& path) const;
    static ColorClusterMap load(const std::string& path);
};

struct Coverage {
    double mean_percent = 0.0;
    double std_percent = 0.0;
};

/// Per patch: |clusters hit by the sampled points| / |clusters present|,
/// aggregated as mean +- population std over patches. `gt_ab` are (2,H,W)
/// patches aligned with the (1,H,W) point masks.
Coverage color_coverage(const std::vector<Tensor<float>>& gt_ab,
                        const std::vector<Tensor<float>>& point_masks,
                        const ColorClusterMap& clusters);

struct ImageMetrics {
    std::string name;
    double psnr = 0.0;
    double ssim = 0.0;
    double loe = 0.0;
    double colorfulness = 0.0;
};

struct MetricReport {
    std::vector<ImageMetrics> rows;
    ImageMetrics mean() const;
    ImageMetrics stddev() const; // population
};

void write_report_csv(const std::string& path, const MetricReport& report);
void write_report_table(const std::string& path, const MetricReport& report);
std::string format_metric(double v); // fixed 6 decimals, "inf" sentinel

} // namespace cwan
