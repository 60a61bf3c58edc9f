#include "cwan/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "cwan/colorspace.hpp"
#include "cwan/errors.hpp"
#include "cwan/image_io.hpp"
#include "cwan/model.hpp"
#include "cwan/rng.hpp"

namespace cwan {

const char* split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "train";
}

Split split_from_name(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "val") return Split::Val;
    if (s == "test") return Split::Test;
    throw DataError("unknown split label: " + s);
}

std::vector<DatasetEntry> Dataset::split_entries(Split s) const {
    std::vector<DatasetEntry> out;
    for (const auto& e : entries)
        if (e.split == s) out.push_back(e);
    return out;
}

Dataset load_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("manifest: cannot open " + path);
    Dataset ds;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            // provenance comment: "# key=value key=value"
            std::istringstream ss(line.substr(1));
            std::string tok;
            while (ss >> tok) {
                const auto eq = tok.find('=');
                if (eq != std::string::npos)
                    ds.provenance[tok.substr(0, eq)] = tok.substr(eq + 1);
            }
            continue;
        }
        std::istringstream ss(line);
        std::string split_s, low, gt;
        if (!std::getline(ss, split_s, '\t') || !std::getline(ss, low, '\t') ||
            !std::getline(ss, gt, '\t'))
            throw DataError("manifest: bad row at line " + std::to_string(lineno) + " in " + path);
        DatasetEntry e;
        e.split = split_from_name(split_s);
        e.low_path = low;
        e.gt_path = gt;
        if (!std::filesystem::exists(e.low_path))
            throw DataError("manifest: unresolvable path " + e.low_path);
        if (!std::filesystem::exists(e.gt_path))
            throw DataError("manifest: unresolvable path " + e.gt_path);
        ds.entries.push_back(std::move(e));
    }
    return ds;
}

void save_manifest(const std::string& path, const Dataset& ds) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("manifest: cannot open for writing " + path);
    if (!ds.provenance.empty()) {
        f << "#";
        for (const auto& [k, v] : ds.provenance) f << " " << k << "=" << v;
        f << "\n";
    }
    for (const auto& e : ds.entries)
        f << split_name(e.split) << "\t" << e.low_path << "\t" << e.gt_path << "\n";
    if (!f) throw DataError("manifest: write failed: " + path);
}

SrgbImage synth_lowlight(const SrgbImage& img, float intensity_decrease, bool linear_domain) {
    if (intensity_decrease < 0.f || intensity_decrease >= 1.f)
        throw std::invalid_argument("synth_lowlight: decrease must be in [0,1)");
    const double keep = 1.0 - static_cast<double>(intensity_decrease);
    SrgbImage out(img.height, img.width);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        const double v = static_cast<double>(img.pixels[i]);
        const double d = linear_domain ? srgb_encode(srgb_decode(v) * keep) : v * keep;
        out.pixels[i] = static_cast<float>(std::clamp(d, 0.0, 1.0));
    }
    return out;
}

SrgbImage add_gaussian_noise(const SrgbImage& img, float sigma, uint64_t seed) {
    if (sigma < 0.f) throw std::invalid_argument("add_gaussian_noise: sigma must be >= 0");
    if (sigma == 0.f) return img;
    SrgbImage out(img.height, img.width);
    auto rng = make_rng(seed);
    std::normal_distribution<double> dist(0.0, static_cast<double>(sigma) / 255.0);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        out.pixels[i] =
            static_cast<float>(std::clamp(static_cast<double>(img.pixels[i]) + dist(rng), 0.0, 1.0));
    return out;
}

namespace {

SrgbImage crop(const SrgbImage& img, int y0, int x0, int size) {
    SrgbImage out(size, size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y0 + y, x0 + x, c);
    return out;
}

void extract_from_pair(const SrgbImage& low, const SrgbImage& gt, std::size_t image_index,
                       const PatchOptions& opt, PatchSet& out) {
    if (low.height != gt.height || low.width != gt.width)
        throw DataError("extract_patches: pair dimensions differ");
    if (low.height < opt.patch_size || low.width < opt.patch_size) {
        std::cerr << "extract_patches: skipping image " << image_index << " ("
                  << low.width << "x" << low.height << " < patch " << opt.patch_size << ")\n";
        return;
    }
    auto rng = make_rng(mix_seed(opt.seed, image_index));
    std::uniform_int_distribution<int> dy(0, low.height - opt.patch_size);
    std::uniform_int_distribution<int> dx(0, low.width - opt.patch_size);
    for (int p = 0; p < opt.per_image; ++p) {
        const int y0 = dy(rng);
        const int x0 = dx(rng);
        Patch patch;
        patch.low = crop(low, y0, x0, opt.patch_size);
        patch.gt = crop(gt, y0, x0, opt.patch_size);
        if (opt.with_attention) {
            const uint64_t bundle_seed = mix_seed(opt.seed, image_index, static_cast<uint64_t>(p));
            patch.bundle = bundle_for_patch(patch.low, patch.gt, opt.attention,
                                            opt.attention_source, bundle_seed);
        }
        out.patches.push_back(std::move(patch));
    }
}

} // namespace

AttentionBundle bundle_for_patch(const SrgbImage& low, const SrgbImage& gt,
                                 const AttentionParams& params, AttentionSource source,
                                 uint64_t seed) {
    const SrgbImage& colors = source == AttentionSource::GroundTruth ? gt : low;
    const LabImage lab = rgb_to_lab(colors);
    return make_attention_bundle(colors, ab_tensor(lab), params, seed);
}

PatchSet extract_patches(const Dataset& ds, Split split, const PatchOptions& opt) {
    PatchSet set;
    set.patch_size = opt.patch_size;
    set.per_image = opt.per_image;
    set.seed = opt.seed;
    const auto entries = ds.split_entries(split);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const SrgbImage low = read_image(entries[i].low_path);
        const SrgbImage gt = read_image(entries[i].gt_path);
        extract_from_pair(low, gt, i, opt, set);
    }
    return set;
}

PatchSet extract_patches(const std::vector<std::pair<SrgbImage, SrgbImage>>& pairs,
                         const PatchOptions& opt) {
    PatchSet set;
    set.patch_size = opt.patch_size;
    set.per_image = opt.per_image;
    set.seed = opt.seed;
    for (std::size_t i = 0; i < pairs.size(); ++i)
        extract_from_pair(pairs[i].first, pairs[i].second, i, opt, set);
    return set;
}

} // namespace cwan
