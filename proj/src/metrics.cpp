#include "cwan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "cwan/errors.hpp"
#include "cwan/rng.hpp"

namespace cwan {

namespace {

void require_same_dims(const SrgbImage& a, const SrgbImage& b, const char* what) {
    if (a.height != b.height || a.width != b.width)
        throw std::invalid_argument(std::string(what) + ": image dimensions differ");
}

} // namespace

double psnr_mse(double mse) {
    if (mse <= 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

double psnr(const SrgbImage& a, const SrgbImage& b) {
    require_same_dims(a, b, "psnr");
    double sse = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const double e = static_cast<double>(a.pixels[i]) - static_cast<double>(b.pixels[i]);
        sse += e * e;
    }
    return psnr_mse(sse / static_cast<double>(a.pixels.size()));
}

// ---- SSIM ---------------------------------------------------------------

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;

std::vector<double> gaussian_taps() {
    std::vector<double> t(kSsimWindow);
    const int half = kSsimWindow / 2;
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - half;
        t[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
        sum += t[i];
    }
    for (auto& v : t) v /= sum;
    return t;
}

std::vector<double> luma(const SrgbImage& img) {
    std::vector<double> g(img.pixel_count());
    for (std::size_t i = 0; i < g.size(); ++i)
        g[i] = 0.299 * img.pixels[3 * i] + 0.587 * img.pixels[3 * i + 1] +
               0.114 * img.pixels[3 * i + 2];
    return g;
}

// Separable valid-mode Gaussian filter; output is (h-10) x (w-10).
std::vector<double> filter_valid(const std::vector<double>& img, int h, int w,
                                 const std::vector<double>& taps) {
    const int k = static_cast<int>(taps.size());
    const int wh = h, ww = w - k + 1;
    std::vector<double> horiz(static_cast<std::size_t>(wh) * ww);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ww; ++x) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i) acc += taps[i] * img[static_cast<std::size_t>(y) * w + x + i];
            horiz[static_cast<std::size_t>(y) * ww + x] = acc;
        }
    const int oh = h - k + 1;
    std::vector<double> out(static_cast<std::size_t>(oh) * ww);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ww; ++x) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i) acc += taps[i] * horiz[static_cast<std::size_t>(y + i) * ww + x];
            out[static_cast<std::size_t>(y) * ww + x] = acc;
        }
    return out;
}

} // namespace

double ssim(const SrgbImage& a, const SrgbImage& b) {
    require_same_dims(a, b, "ssim");
    if (a.height < kSsimWindow || a.width < kSsimWindow)
        throw std::invalid_argument("ssim: images must be at least 11x11");

    const auto x = luma(a), y = luma(b);
    const int h = a.height, w = a.width;
    std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }

    const auto taps = gaussian_taps();
    const auto mx = filter_valid(x, h, w, taps);
    const auto my = filter_valid(y, h, w, taps);
    const auto mxx = filter_valid(xx, h, w, taps);
    const auto myy = filter_valid(yy, h, w, taps);
    const auto mxy = filter_valid(xy, h, w, taps);

    constexpr double c1 = 0.01 * 0.01;
    constexpr double c2 = 0.03 * 0.03;
    double total = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
        const double vx = mxx[i] - mx[i] * mx[i];
        const double vy = myy[i] - my[i] * my[i];
        const double cxy = mxy[i] - mx[i] * my[i];
        const double num = (2.0 * mx[i] * my[i] + c1) * (2.0 * cxy + c2);
        const double den = (mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2);
        total += num / den;
    }
    return total / static_cast<double>(mx.size());
}

// ---- LOE ----------------------------------------------------------------

namespace {

std::vector<double> max_rgb_plane(const SrgbImage& img) {
    std::vector<double> l(img.pixel_count());
    for (std::size_t i = 0; i < l.size(); ++i)
        l[i] = std::max({img.pixels[3 * i], img.pixels[3 * i + 1], img.pixels[3 * i + 2]});
    return l;
}

std::vector<double> downsample_nearest(const std::vector<double>& plane, int h, int w, int oh,
                                       int ow) {
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y) {
        const int sy = std::min(h - 1, static_cast<int>((y + 0.5) * h / oh));
        for (int x = 0; x < ow; ++x) {
            const int sx = std::min(w - 1, static_cast<int>((x + 0.5) * w / ow));
            out[static_cast<std::size_t>(y) * ow + x] = plane[static_cast<std::size_t>(sy) * w + sx];
        }
    }
    return out;
}

} // namespace

double loe(const SrgbImage& low, const SrgbImage& enhanced, int down_target) {
    require_same_dims(low, enhanced, "loe");
    auto l0 = max_rgb_plane(low);
    auto l1 = max_rgb_plane(enhanced);
    int h = low.height, w = low.width;
    if (std::min(h, w) > down_target) {
        const double r = static_cast<double>(down_target) / std::min(h, w);
        const int oh = std::max(1, static_cast<int>(std::lround(h * r)));
        const int ow = std::max(1, static_cast<int>(std::lround(w * r)));
        l0 = downsample_nearest(l0, h, w, oh, ow);
        l1 = downsample_nearest(l1, h, w, oh, ow);
        h = oh;
        w = ow;
    }
    const std::size_t n = l0.size();
    std::size_t flips = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const bool u = l0[i] >= l0[j];
            const bool v = l1[i] >= l1[j];
            flips += (u != v) ? 1 : 0;
        }
    }
    return static_cast<double>(flips) / static_cast<double>(n);
}

// ---- colorfulness ---------------------------------------------------------

double colorfulness(const SrgbImage& img) {
    const std::size_t n = img.pixel_count();
    double s1 = 0, s2 = 0, q1 = 0, q2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = img.pixels[3 * i] * 255.0;
        const double g = img.pixels[3 * i + 1] * 255.0;
        const double b = img.pixels[3 * i + 2] * 255.0;
        const double c1 = r - g;
        const double c2 = 0.5 * (r + g) - b;
        s1 += c1;
        s2 += c2;
        q1 += c1 * c1;
        q2 += c2 * c2;
    }
    const double m1 = s1 / n, m2 = s2 / n;
    const double v1 = std::max(0.0, q1 / n - m1 * m1);
    const double v2 = std::max(0.0, q2 / n - m2 * m2);
    return std::sqrt(v1 + v2) + 0.37 * std::sqrt(m1 * m1 + m2 * m2);
}

// ---- point-restricted PSNR --------------------------------------------

void MaskedSse::accumulate(const Tensor<float>& pred, const Tensor<float>& gt,
                           const Tensor<float>& point_mask, PointPsnrMode mode) {
    require_same_shape(pred, gt, "psnr_at_points");
    if (point_mask.height() != pred.height() || point_mask.width() != pred.width())
        throw std::invalid_argument("psnr_at_points: mask spatial mismatch");

    const int h = pred.height(), w = pred.width();
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    std::vector<char> sel(plane, 0);
    if (mode == PointPsnrMode::Points) {
        for (std::size_t i = 0; i < plane; ++i) sel[i] = point_mask.data[i] != 0.f;
    } else {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                if (point_mask.data[static_cast<std::size_t>(y) * w + x] == 0.f) continue;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dy == 0 && dx == 0) continue;
                        const int ny = y + dy, nx = x + dx;
                        if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                        sel[static_cast<std::size_t>(ny) * w + nx] = 1;
                    }
            }
        // the points themselves are excluded from their neighborhoods
        for (std::size_t i = 0; i < plane; ++i)
            if (point_mask.data[i] != 0.f) sel[i] = 0;
    }

    for (int c = 0; c < pred.channels(); ++c)
        for (std::size_t i = 0; i < plane; ++i) {
            if (!sel[i]) continue;
            const double e = static_cast<double>(pred.data[c * plane + i]) -
                             static_cast<double>(gt.data[c * plane + i]);
            sse += e * e;
            ++count;
        }
}

double MaskedSse::psnr() const {
    if (count == 0) throw std::invalid_argument("psnr_at_points: empty coordinate set");
    return psnr_mse(sse / static_cast<double>(count));
}

double psnr_at_points(const Tensor<float>& pred, const Tensor<float>& gt,
                      const Tensor<float>& point_mask, PointPsnrMode mode) {
    MaskedSse acc;
    acc.accumulate(pred, gt, point_mask, mode);
    return acc.psnr();
}

// ---- color clusters -----------------------------------------------------

ColorClusterMap ColorClusterMap::make_default(uint64_t seed) {
    // k-means over a uniform sample of the normalized ab plane.
    constexpr int kSamples = 4096;
    constexpr int kIters = 60;
    auto rng = make_rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> pa(kSamples), pb(kSamples);
    for (int i = 0; i < kSamples; ++i) {
        pa[i] = u(rng);
        pb[i] = u(rng);
    }

    ColorClusterMap m;
    m.centers_a.resize(kClusters);
    m.centers_b.resize(kClusters);
    std::vector<int> pick_idx(kSamples);
    for (int i = 0; i < kSamples; ++i) pick_idx[i] = i;
    std::shuffle(pick_idx.begin(), pick_idx.end(), rng);
    for (int c = 0; c < kClusters; ++c) {
        m.centers_a[c] = static_cast<float>(pa[pick_idx[c]]);
        m.centers_b[c] = static_cast<float>(pb[pick_idx[c]]);
    }

    std::vector<int> assign(kSamples);
    for (int it = 0; it < kIters; ++it) {
        for (int i = 0; i < kSamples; ++i)
            assign[i] = m.assign(static_cast<float>(pa[i]), static_cast<float>(pb[i]));
        std::vector<double> sa(kClusters, 0.0), sb(kClusters, 0.0);
        std::vector<int> cnt(kClusters, 0);
        for (int i = 0; i < kSamples; ++i) {
            sa[assign[i]] += pa[i];
            sb[assign[i]] += pb[i];
            ++cnt[assign[i]];
        }
        for (int c = 0; c < kClusters; ++c) {
            if (cnt[c] == 0) continue; // keep empty cluster's center in place
            m.centers_a[c] = static_cast<float>(sa[c] / cnt[c]);
            m.centers_b[c] = static_cast<float>(sb[c] / cnt[c]);
        }
    }
    return m;
}

int ColorClusterMap::assign(float a, float b) const {
    int best = 0;
    float best_d = std::numeric_limits<float>::max();
    for (int c = 0; c < static_cast<int>(centers_a.size()); ++c) {
        const float da = a - centers_a[c];
        const float db = b - centers_b[c];
        const float d = da * da + db * db;
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

void ColorClusterMap::save(const std::string& path) const {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("cluster map: cannot open for writing " + path);
    f << "id,a,b\n";
    char line[96];
    for (std::size_t c = 0; c < centers_a.size(); ++c) {
        std::snprintf(line, sizeof(line), "%zu,%.9g,%.9g\n", c, centers_a[c], centers_b[c]);
        f << line;
    }
}

ColorClusterMap ColorClusterMap::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cluster map: cannot open " + path);
    std::string line;
    std::getline(f, line); // header
    ColorClusterMap m;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string id, a, b;
        if (!std::getline(ss, id, ',') || !std::getline(ss, a, ',') || !std::getline(ss, b, ','))
            throw DataError("cluster map: bad row in " + path);
        m.centers_a.push_back(std::stof(a));
        m.centers_b.push_back(std::stof(b));
    }
    if (m.centers_a.size() != kClusters)
        throw DataError("cluster map: expected 40 centers in " + path);
    return m;
}

Coverage color_coverage(const std::vector<Tensor<float>>& gt_ab,
                        const std::vector<Tensor<float>>& point_masks,
                        const ColorClusterMap& clusters) {
    if (gt_ab.empty() || gt_ab.size() != point_masks.size())
        throw std::invalid_argument("color_coverage: need equally many patches and masks");

    std::vector<double> per_patch;
    for (std::size_t p = 0; p < gt_ab.size(); ++p) {
        const auto& ab = gt_ab[p];
        const auto& mask = point_masks[p];
        const std::size_t plane = static_cast<std::size_t>(ab.height()) * ab.width();
        std::vector<char> present(ColorClusterMap::kClusters, 0);
        std::vector<char> hit(ColorClusterMap::kClusters, 0);
        for (std::size_t i = 0; i < plane; ++i) {
            const int c = clusters.assign(ab.data[i], ab.data[plane + i]);
            present[c] = 1;
            if (mask.data[i] != 0.f) hit[c] = 1;
        }
        int np = 0, nh = 0;
        for (int c = 0; c < ColorClusterMap::kClusters; ++c) {
            np += present[c];
            nh += hit[c];
        }
        per_patch.push_back(np > 0 ? 100.0 * nh / np : 0.0);
    }

    Coverage cov;
    double sum = 0.0;
    for (double v : per_patch) sum += v;
    cov.mean_percent = sum / per_patch.size();
    double var = 0.0;
    for (double v : per_patch) var += (v - cov.mean_percent) * (v - cov.mean_percent);
    cov.std_percent = std::sqrt(var / per_patch.size());
    return cov;
}

// ---- reports --------------------------------------------------------------

ImageMetrics MetricReport::mean() const {
    ImageMetrics m;
    m.name = "mean";
    for (const auto& r : rows) {
        m.psnr += r.psnr;
        m.ssim += r.ssim;
        m.loe += r.loe;
        m.colorfulness += r.colorfulness;
    }
    const double n = rows.empty() ? 1.0 : static_cast<double>(rows.size());
    m.psnr /= n;
    m.ssim /= n;
    m.loe /= n;
    m.colorfulness /= n;
    return m;
}

ImageMetrics MetricReport::stddev() const {
    const ImageMetrics mu = mean();
    ImageMetrics s;
    s.name = "std";
    for (const auto& r : rows) {
        s.psnr += (r.psnr - mu.psnr) * (r.psnr - mu.psnr);
        s.ssim += (r.ssim - mu.ssim) * (r.ssim - mu.ssim);
        s.loe += (r.loe - mu.loe) * (r.loe - mu.loe);
        s.colorfulness += (r.colorfulness - mu.colorfulness) * (r.colorfulness - mu.colorfulness);
    }
    const double n = rows.empty() ? 1.0 : static_cast<double>(rows.size());
    s.psnr = std::sqrt(s.psnr / n);
    s.ssim = std::sqrt(s.ssim / n);
    s.loe = std::sqrt(s.loe / n);
    s.colorfulness = std::sqrt(s.colorfulness / n);
    return s;
}

std::string format_metric(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

void write_report_csv(const std::string& path, const MetricReport& report) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("report: cannot open for writing " + path);
    f << "name,psnr,ssim,loe,colorfulness\n";
    const auto row = [&f](const ImageMetrics& m) {
        f << m.name << "," << format_metric(m.psnr) << "," << format_metric(m.ssim) << ","
          << format_metric(m.loe) << "," << format_metric(m.colorfulness) << "\n";
    };
    for (const auto& r : report.rows) row(r);
    row(report.mean());
    row(report.stddev());
}

void write_report_table(const std::string& path, const MetricReport& report) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("report: cannot open for writing " + path);
    char line[256];
    std::snprintf(line, sizeof(line), "%-28s %12s %10s %12s %14s\n", "image", "psnr", "ssim",
                  "loe", "colorfulness");
    f << line;
    const auto row = [&](const ImageMetrics& m) {
        std::snprintf(line, sizeof(line), "%-28s %12s %10s %12s %14s\n", m.name.c_str(),
                      format_metric(m.psnr).c_str(), format_metric(m.ssim).c_str(),
                      format_metric(m.loe).c_str(), format_metric(m.colorfulness).c_str());
        f << line;
    };
    for (const auto& r : report.rows) row(r);
    row(report.mean());
    row(report.stddev());
}

} // namespace cwan
