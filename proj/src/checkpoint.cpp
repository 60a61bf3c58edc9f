#include "cwan/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "cwan/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace cwan {

namespace {

constexpr char kMagic[4] = {'C', 'W', 'A', 'N'};

template <typename T>
void put(std::string& buf, T v) {
    char tmp[sizeof(T)];
    std::memcpy(tmp, &v, sizeof(T));
    buf.append(tmp, sizeof(T));
}

template <typename T>
T take(const std::string& buf, std::size_t& pos) {
    if (pos + sizeof(T) > buf.size()) throw DataError("checkpoint: truncated file");
    T v;
    std::memcpy(&v, buf.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

} // namespace

void save_checkpoint(const std::string& path, const nlohmann::json& arch,
                     const ParamRefs<float>& params) {
    std::string header = arch.dump();
    std::string buf;
    buf.append(kMagic, 4);
    put<uint32_t>(buf, kCheckpointVersion);
    put<uint32_t>(buf, static_cast<uint32_t>(header.size()));
    buf += header;

    put<uint32_t>(buf, static_cast<uint32_t>(params.size()));
    uint64_t offset = 0;
    for (const auto& [name, t] : params) {
        put<uint16_t>(buf, static_cast<uint16_t>(name.size()));
        buf += name;
        put<uint8_t>(buf, 0); // dtype f32
        put<uint8_t>(buf, static_cast<uint8_t>(t->shape.size()));
        for (int d : t->shape) put<uint32_t>(buf, static_cast<uint32_t>(d));
        put<uint64_t>(buf, offset);
        offset += t->numel() * sizeof(float);
    }
    for (const auto& [name, t] : params) {
        (void)name;
        buf.append(reinterpret_cast<const char*>(t->data.data()), t->numel() * sizeof(float));
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("checkpoint: cannot open for writing: " + path);
    f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!f) throw DataError("checkpoint: write failed: " + path);
}

LoadedCheckpoint read_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("checkpoint: cannot open: " + path);
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    std::size_t pos = 0;
    if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0)
        throw DataError("checkpoint: bad magic in " + path);
    pos = 4;
    const auto version = take<uint32_t>(buf, pos);
    if (version != kCheckpointVersion)
        throw DataError("checkpoint: unsupported version " + std::to_string(version));

    const auto header_len = take<uint32_t>(buf, pos);
    if (pos + header_len > buf.size()) throw DataError("checkpoint: truncated header");
    LoadedCheckpoint ck;
    try {
        ck.arch = nlohmann::json::parse(buf.substr(pos, header_len));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint: bad architecture header: ") + e.what());
    }
    pos += header_len;

    struct Entry {
        std::string name;
        std::vector<int> shape;
        uint64_t offset;
    };
    const auto count = take<uint32_t>(buf, pos);
    std::vector<Entry> entries;
    for (uint32_t i = 0; i < count; ++i) {
        Entry e;
        const auto name_len = take<uint16_t>(buf, pos);
        if (pos + name_len > buf.size()) throw DataError("checkpoint: truncated name");
        e.name = buf.substr(pos, name_len);
        pos += name_len;
        const auto dtype = take<uint8_t>(buf, pos);
        if (dtype != 0) throw DataError("checkpoint: unsupported dtype");
        const auto ndim = take<uint8_t>(buf, pos);
        for (uint8_t d = 0; d < ndim; ++d)
            e.shape.push_back(static_cast<int>(take<uint32_t>(buf, pos)));
        e.offset = take<uint64_t>(buf, pos);
        entries.push_back(std::move(e));
    }

    const std::size_t payload_start = pos;
    for (const auto& e : entries) {
        Tensor<float> t(e.shape);
        const std::size_t begin = payload_start + e.offset;
        const std::size_t bytes = t.numel() * sizeof(float);
        if (begin + bytes > buf.size()) throw DataError("checkpoint: truncated payload");
        std::memcpy(t.data.data(), buf.data() + begin, bytes);
        ck.tensors.emplace(e.name, std::move(t));
    }
    return ck;
}

void load_into(const ParamRefs<float>& params, const LoadedCheckpoint& ck) {
    if (params.size() != ck.tensors.size())
        throw DataError("checkpoint: parameter count mismatch (" + std::to_string(params.size()) +
                        " expected, " + std::to_string(ck.tensors.size()) + " stored)");
    for (const auto& [name, t] : params) {
        auto it = ck.tensors.find(name);
        if (it == ck.tensors.end()) throw DataError("checkpoint: missing tensor " + name);
        if (it->second.shape != t->shape)
            throw DataError("checkpoint: shape mismatch for " + name);
        t->data = it->second.data;
    }
}

nlohmann::json describe(const CwanLConfig& cfg) {
    return {{"model", "cwan_l"},
            {"channels", cfg.channels},
            {"blocks", cfg.blocks},
            {"block_kind", block_kind_name(cfg.block_kind)}};
}

nlohmann::json describe(const CwanAbConfig& cfg) {
    return {{"model", "cwan_ab"},
            {"channels", cfg.channels},
            {"generator_blocks", cfg.generator_blocks},
            {"generator_kind", block_kind_name(cfg.generator_kind)},
            {"enhancer_blocks", cfg.enhancer_blocks},
            {"enhancer_kind", block_kind_name(cfg.enhancer_kind)}};
}

namespace {

void require_model(const nlohmann::json& arch, const char* expected) {
    if (!arch.contains("model") || arch["model"] != expected)
        throw DataError(std::string("checkpoint: expected a ") + expected + " model");
}

} // namespace

CwanLConfig cwan_l_config_from(const nlohmann::json& arch) {
    require_model(arch, "cwan_l");
    try {
        CwanLConfig cfg;
        cfg.channels = arch.at("channels").get<int>();
        cfg.blocks = arch.at("blocks").get<int>();
        cfg.block_kind = block_kind_from_name(arch.at("block_kind").get<std::string>());
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint: bad cwan_l descriptor: ") + e.what());
    }
}

CwanAbConfig cwan_ab_config_from(const nlohmann::json& arch) {
    require_model(arch, "cwan_ab");
    try {
        CwanAbConfig cfg;
        cfg.channels = arch.at("channels").get<int>();
        cfg.generator_blocks = arch.at("generator_blocks").get<int>();
        cfg.generator_kind = block_kind_from_name(arch.at("generator_kind").get<std::string>());
        cfg.enhancer_blocks = arch.at("enhancer_blocks").get<int>();
        cfg.enhancer_kind = block_kind_from_name(arch.at("enhancer_kind").get<std::string>());
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint: bad cwan_ab descriptor: ") + e.what());
    }
}

void save_cwan_l(const std::string& path, CwanL<float>& model) {
    ParamRefs<float> params;
    model.collect_params("l.", params);
    save_checkpoint(path, describe(model.cfg), params);
}

void save_cwan_ab(const std::string& path, CwanAb<float>& model) {
    ParamRefs<float> params;
    model.collect_params("ab.", params);
    save_checkpoint(path, describe(model.cfg), params);
}

CwanL<float> load_cwan_l(const std::string& path) {
    LoadedCheckpoint ck = read_checkpoint(path);
    CwanL<float> model(cwan_l_config_from(ck.arch), 0);
    ParamRefs<float> params;
    model.collect_params("l.", params);
    load_into(params, ck);
    return model;
}

CwanAb<float> load_cwan_ab(const std::string& path) {
    LoadedCheckpoint ck = read_checkpoint(path);
    CwanAb<float> model(cwan_ab_config_from(ck.arch), 0);
    ParamRefs<float> params;
    model.collect_params("ab.", params);
    load_into(params, ck);
    return model;
}

} // namespace cwan
