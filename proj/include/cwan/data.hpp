#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cwan/attention.hpp"
#include "cwan/image.hpp"

namespace cwan {

enum class Split { Train, Val, Test };

const char* split_name(Split s);
Split split_from_name(const std::string& s);

struct DatasetEntry {
    Split split = Split::Train;
    std::string low_path;
    std::string gt_path;
};

/// Manifest-backed list of (low-light, ground-truth) pairs.
/// On disk: `# key=value` provenance lines, then `split<TAB>low<TAB>gt` rows.
struct Dataset {
    std::vector<DatasetEntry> entries;
    std::map<std::string, std::string> provenance;

    std::vector<DatasetEntry> split_entries(Split s) const;
};

Dataset load_manifest(const std::string& path);
void save_manifest(const std::string& path, const Dataset& ds);

/// Pixel-wise intensity decrease. `linear_domain` multiplies decoded
/// linear-light values and re-encodes (the default); otherwise the multiply is
/// applied to the gamma-encoded values directly.
SrgbImage synth_lowlight(const SrgbImage& img, float intensity_decrease,
                         bool linear_domain = true);

/// i.i.d. Gaussian noise per channel, sigma on the 0-255 scale, clamped to [0,1].
SrgbImage add_gaussian_noise(const SrgbImage& img, float sigma, uint64_t seed);

/// Which colors the attention supervision is built from. Ground truth is the
/// default: map and points are regression targets and must hold recoverable
/// foreground colors.
enum class AttentionSource { GroundTruth, LowLight };

struct Patch {
    SrgbImage low;
    SrgbImage gt;
    std::optional<AttentionBundle> bundle;
};

struct PatchSet {
    std::vector<Patch> patches;
    int patch_size = 0;
    int per_image = 0;
    uint64_t seed = 0;
};

struct PatchOptions {
    int patch_size = 64;
    int per_image = 50;
    uint64_t seed = 0;
    bool with_attention = false;
    AttentionParams attention;
    AttentionSource attention_source = AttentionSource::GroundTruth;
};

/// Uniformly random fully-inside crops from every pair in the split, ordered
/// by (image index, patch index). Images smaller than the patch are skipped
/// with a warning on stderr.
PatchSet extract_patches(const Dataset& ds, Split split, const PatchOptions& opt);

/// Same sampling for in-memory pairs (used by tests and the micro-benchmark).
PatchSet extract_patches(const std::vector<std::pair<SrgbImage, SrgbImage>>& pairs,
                         const PatchOptions& opt);

/// Bundle for one already-cropped patch pair; `seed` must be the per-patch
/// sampling seed so stored bundles can be reproduced bit-exactly.
AttentionBundle bundle_for_patch(const SrgbImage& low, const SrgbImage& gt,
                                 const AttentionParams& params, AttentionSource source,
                                 uint64_t seed);

} // namespace cwan
