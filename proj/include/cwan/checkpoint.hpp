#pragma once

#include <map>
#include <string>

#include <json.hpp>

#include "cwan/adam.hpp"
#include "cwan/model.hpp"
#include "cwan/tensor.hpp"

namespace cwan {

/// Container layout (all integers little-endian):
///   magic "CWAN", u32 format version,
///   u32 header length + UTF-8 JSON architecture descriptor,
///   u32 tensor count, per tensor {u16 name length, name, u8 dtype (0 = f32),
///   u8 ndim, u32 dims..., u64 payload byte offset},
///   then the concatenated IEEE-754 f32 payloads.
/// Round trips are bit-exact.
inline constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const nlohmann::json& arch,
                     const ParamRefs<float>& params);

struct LoadedCheckpoint {
    nlohmann::json arch;
    std::map<std::string, Tensor<float>> tensors;
};

LoadedCheckpoint read_checkpoint(const std::string& path);

/// Copies loaded tensors into the registry; every name must match with an
/// identical shape, extras or gaps are load errors.
void load_into(const ParamRefs<float>& params, const LoadedCheckpoint& ck);

// Model-level wrappers (architecture descriptor round trip included).
nlohmann::json describe(const CwanLConfig& cfg);
nlohmann::json describe(const CwanAbConfig& cfg);
CwanLConfig cwan_l_config_from(const nlohmann::json& arch);
CwanAbConfig cwan_ab_config_from(const nlohmann::json& arch);

void save_cwan_l(const std::string& path, CwanL<float>& model);
void save_cwan_ab(const std::string& path, CwanAb<float>& model);
CwanL<float> load_cwan_l(const std::string& path);
CwanAb<float> load_cwan_ab(const std::string& path);

} // namespace cwan
