#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "cwan/adam.hpp"
#include "cwan/layers.hpp"
#include "cwan/rng.hpp"
#include "cwan/tensor.hpp"

namespace cwan {

enum class BlockKind { Memory, Forward };

inline const char* block_kind_name(BlockKind k) {
    return k == BlockKind::Memory ? "memory" : "forward";
}
inline BlockKind block_kind_from_name(const std::string& s) {
    if (s == "memory") return BlockKind::Memory;
    if (s == "forward") return BlockKind::Forward;
    throw std::invalid_argument("unknown block kind: " + s);
}

/// Lightness network: feature extraction conv, a chain of blocks (memory
/// blocks by default), reconstruction conv, global residual skip.
/// Conv layers total 1 + 3*blocks + 1 (11 at defaults).
struct CwanLConfig {
    int blocks = 3;
    int channels = 64;
    BlockKind block_kind = BlockKind::Memory;

    int conv_layer_count() const { return 2 + 3 * blocks; }
};

/// Color network: attention map generator (1 forward block, 5 conv layers at
/// defaults) feeding a color enhancer (2 forward blocks, 8 conv layers) that
/// consumes the stacked (ab, map) planes. The sparse-point head is an
/// auxiliary 1x1 conv off the final features, not counted in the 8.
struct CwanAbConfig {
    int generator_blocks = 1;
    int enhancer_blocks = 2;
    int channels = 64;
    BlockKind generator_kind = BlockKind::Forward;
    BlockKind enhancer_kind = BlockKind::Forward;

    int generator_conv_count() const { return 2 + 3 * generator_blocks; }
    int enhancer_conv_count() const { return 2 + 3 * enhancer_blocks; }
};

/// One block of either kind. Memory: conv0/conv1 are 3x3 recursive units with
/// short skips, conv2 is the 1x1 gate over the concatenated long-term inputs.
/// Forward: 3x3 + 1x1 + 3x3, each followed by ReLU, no skips.
template <typename T>
struct Block {
    ConvLayer<T> conv0, conv1, conv2;
};

template <typename T>
void relu_add(const Tensor<T>& pre, const Tensor<T>& skip, Tensor<T>& out) {
    require_same_shape(pre, skip, "relu_add");
    out.resize(pre.shape);
    for (std::size_t i = 0; i < pre.numel(); ++i)
        out.data[i] = (pre.data[i] > T(0) ? pre.data[i] : T(0)) + skip.data[i];
}

/// f_ext + block chain. For memory blocks, each gate consumes
/// concat(previous block outputs..., f_ext output, unit outputs), so the gate
/// at 0-based index b has channels * (b + 3) input channels.
template <typename T>
struct Backbone {
    int in_channels = 0;
    int channels = 0;
    BlockKind kind = BlockKind::Forward;
    ConvLayer<T> ext;
    std::vector<Block<T>> blocks;

    Backbone() = default;

    Backbone(int in_ch, int ch, int nblocks, BlockKind k, std::mt19937_64& rng)
        : in_channels(in_ch), channels(ch), kind(k) {
        if (nblocks < 1) throw std::invalid_argument("Backbone: need at least one block");
        ext = ConvLayer<T>::he_init(in_ch, ch, 3, rng);
        for (int b = 0; b < nblocks; ++b) {
            Block<T> blk;
            if (kind == BlockKind::Memory) {
                blk.conv0 = ConvLayer<T>::he_init(ch, ch, 3, rng);
                blk.conv1 = ConvLayer<T>::he_init(ch, ch, 3, rng);
                blk.conv2 = ConvLayer<T>::he_init(ch * (b + 3), ch, 1, rng); // gate
            } else {
                blk.conv0 = ConvLayer<T>::he_init(ch, ch, 3, rng);
                blk.conv1 = ConvLayer<T>::he_init(ch, ch, 1, rng);
                blk.conv2 = ConvLayer<T>::he_init(ch, ch, 3, rng);
            }
            blocks.push_back(std::move(blk));
        }
    }

    int conv_count() const { return 1 + 3 * static_cast<int>(blocks.size()); }

    struct Acts {
        Tensor<T> input;
        Tensor<T> ext_pre, ext_out;
        struct BlockActs {
            Tensor<T> a0_pre, a0;
            Tensor<T> a1_pre, a1;
            Tensor<T> gate_in; // memory kind
            Tensor<T> a2_pre;  // forward kind
            Tensor<T> out;
        };
        std::vector<BlockActs> blocks;
    };

    const Tensor<T>& forward(const Tensor<T>& x, Acts& acts) {
        acts.input = x;
        acts.blocks.resize(blocks.size());
        ext.forward(x, acts.ext_pre);
        relu_forward(acts.ext_pre, acts.ext_out);

        const Tensor<T>* cur = &acts.ext_out;
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            auto& ba = acts.blocks[b];
            if (kind == BlockKind::Memory) {
                blocks[b].conv0.forward(*cur, ba.a0_pre);
                relu_add(ba.a0_pre, *cur, ba.a0);
                blocks[b].conv1.forward(ba.a0, ba.a1_pre);
                relu_add(ba.a1_pre, ba.a0, ba.a1);

                std::vector<const Tensor<T>*> parts;
                for (std::size_t j = 0; j < b; ++j) parts.push_back(&acts.blocks[j].out);
                parts.push_back(&acts.ext_out);
                parts.push_back(&ba.a0);
                parts.push_back(&ba.a1);
                concat_channels(parts, ba.gate_in);
                blocks[b].conv2.forward(ba.gate_in, ba.out);
            } else {
                blocks[b].conv0.forward(*cur, ba.a0_pre);
                relu_forward(ba.a0_pre, ba.a0);
                blocks[b].conv1.forward(ba.a0, ba.a1_pre);
                relu_forward(ba.a1_pre, ba.a1);
                blocks[b].conv2.forward(ba.a1, ba.a2_pre);
                relu_forward(ba.a2_pre, ba.out);
            }
            cur = &ba.out;
        }
        return *cur;
    }

    // Returns d loss / d input; accumulates parameter grads.
    Tensor<T> backward(const Tensor<T>& g_features, Acts& acts) {
        const int nb = static_cast<int>(blocks.size());
        Tensor<T> g_ext(acts.ext_out.shape);
        std::vector<Tensor<T>> g_out(nb);
        for (int b = 0; b < nb; ++b) g_out[b].resize(acts.blocks[b].out.shape);
        add_inplace(g_out[nb - 1], g_features);

        Tensor<T> scratch, scratch2, scratch3;
        for (int b = nb - 1; b >= 0; --b) {
            auto& ba = acts.blocks[b];
            const Tensor<T>& cur_in = (b == 0) ? acts.ext_out : acts.blocks[b - 1].out;
            Tensor<T>& g_cur = (b == 0) ? g_ext : g_out[b - 1];

            if (kind == BlockKind::Memory) {
                Tensor<T> g_gate_in;
                blocks[b].conv2.backward(ba.gate_in, g_out[b], g_gate_in);
                int c0 = 0;
                for (int j = 0; j < b; ++j) {
                    split_grad_accumulate(g_gate_in, c0, g_out[j]);
                    c0 += channels;
                }
                split_grad_accumulate(g_gate_in, c0, g_ext);
                c0 += channels;
                Tensor<T> g_a0(ba.a0.shape), g_a1(ba.a1.shape);
                split_grad_accumulate(g_gate_in, c0, g_a0);
                c0 += channels;
                split_grad_accumulate(g_gate_in, c0, g_a1);

                relu_backward(ba.a1_pre, g_a1, scratch);        // through unit 1 relu
                add_inplace(g_a0, g_a1);                        // short skip
                blocks[b].conv1.backward(ba.a0, scratch, scratch2);
                add_inplace(g_a0, scratch2);

                relu_backward(ba.a0_pre, g_a0, scratch);        // through unit 0 relu
                add_inplace(g_cur, g_a0);                       // short skip
                blocks[b].conv0.backward(cur_in, scratch, scratch2);
                add_inplace(g_cur, scratch2);
            } else {
                relu_backward(ba.a2_pre, g_out[b], scratch);
                blocks[b].conv2.backward(ba.a1, scratch, scratch2);
                relu_backward(ba.a1_pre, scratch2, scratch);
                blocks[b].conv1.backward(ba.a0, scratch, scratch3);
                relu_backward(ba.a0_pre, scratch3, scratch);
                blocks[b].conv0.backward(cur_in, scratch, scratch2);
                add_inplace(g_cur, scratch2);
            }
        }

        Tensor<T> g_ext_pre, g_x;
        relu_backward(acts.ext_pre, g_ext, g_ext_pre);
        ext.backward(acts.input, g_ext_pre, g_x);
        return g_x;
    }

    void collect_params(const std::string& prefix, ParamRefs<T>& out) {
        out.emplace_back(prefix + "ext.weight", &ext.weight);
        out.emplace_back(prefix + "ext.bias", &ext.bias);
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            const std::string bp = prefix + "block" + std::to_string(b) + ".";
            out.emplace_back(bp + "conv0.weight", &blocks[b].conv0.weight);
            out.emplace_back(bp + "conv0.bias", &blocks[b].conv0.bias);
            out.emplace_back(bp + "conv1.weight", &blocks[b].conv1.weight);
            out.emplace_back(bp + "conv1.bias", &blocks[b].conv1.bias);
            out.emplace_back(bp + "conv2.weight", &blocks[b].conv2.weight);
            out.emplace_back(bp + "conv2.bias", &blocks[b].conv2.bias);
        }
    }
};

/// Lightness enhancer. Output = input + rec(features); unclamped so training
/// gradients flow, clamp happens at inference.
template <typename T>
struct CwanL {
    CwanLConfig cfg;
    Backbone<T> backbone;
    ConvLayer<T> rec;

    CwanL() = default;
    CwanL(const CwanLConfig& c, uint64_t seed) : cfg(c) {
        auto rng = make_rng(seed);
        backbone = Backbone<T>(1, c.channels, c.blocks, c.block_kind, rng);
        rec = ConvLayer<T>::zero_init(c.channels, 1, 3);
    }

    struct Acts {
        typename Backbone<T>::Acts bb;
        Tensor<T> rec_out;
        Tensor<T> out;
    };

    const Tensor<T>& forward(const Tensor<T>& x, Acts& acts) {
        const Tensor<T>& feat = backbone.forward(x, acts.bb);
        rec.forward(feat, acts.rec_out);
        add_residual(acts.rec_out, x, acts.out);
        return acts.out;
    }

    Tensor<T> backward(const Tensor<T>& g_out, Acts& acts) {
        const Tensor<T>& feat = acts.bb.blocks.back().out;
        Tensor<T> g_feat;
        rec.backward(feat, g_out, g_feat);
        Tensor<T> g_x = backbone.backward(g_feat, acts.bb);
        add_inplace(g_x, g_out); // global skip
        return g_x;
    }

    int conv_layer_count() const { return backbone.conv_count() + 1; }

    void collect_params(const std::string& prefix, ParamRefs<T>& out) {
        backbone.collect_params(prefix, out);
        out.emplace_back(prefix + "rec.weight", &rec.weight);
        out.emplace_back(prefix + "rec.bias", &rec.bias);
    }
};

/// Attention map generator: sigmoid-squashed 2-channel map from the ab planes.
template <typename T>
struct AttentionGenerator {
    Backbone<T> backbone;
    ConvLayer<T> rec;

    AttentionGenerator() = default;
    AttentionGenerator(int channels, int nblocks, BlockKind kind, std::mt19937_64& rng) {
        backbone = Backbone<T>(2, channels, nblocks, kind, rng);
        rec = ConvLayer<T>::zero_init(channels, 2, 3);
    }

    struct Acts {
        typename Backbone<T>::Acts bb;
        Tensor<T> rec_pre;
        Tensor<T> out;
    };

    const Tensor<T>& forward(const Tensor<T>& x_ab, Acts& acts) {
        const Tensor<T>& feat = backbone.forward(x_ab, acts.bb);
        rec.forward(feat, acts.rec_pre);
        sigmoid_forward(acts.rec_pre, acts.out);
        return acts.out;
    }

    Tensor<T> backward(const Tensor<T>& g_map, Acts& acts) {
        Tensor<T> g_pre;
        sigmoid_backward(acts.out, g_map, g_pre);
        const Tensor<T>& feat = acts.bb.blocks.back().out;
        Tensor<T> g_feat;
        rec.backward(feat, g_pre, g_feat);
        return backbone.backward(g_feat, acts.bb);
    }

    int conv_layer_count() const { return backbone.conv_count() + 1; }

    void collect_params(const std::string& prefix, ParamRefs<T>& out) {
        backbone.collect_params(prefix, out);
        out.emplace_back(prefix + "rec.weight", &rec.weight);
        out.emplace_back(prefix + "rec.bias", &rec.bias);
    }
};

/// Color enhancer: trunk over concat(ab, map), residual head back onto the ab
/// input, auxiliary 1x1 head predicting the sparse attention points.
template <typename T>
struct ColorEnhancer {
    Backbone<T> backbone;
    ConvLayer<T> rec;
    ConvLayer<T> point_head;

    ColorEnhancer() = default;
    ColorEnhancer(int channels, int nblocks, BlockKind kind, std::mt19937_64& rng) {
        backbone = Backbone<T>(4, channels, nblocks, kind, rng);
        rec = ConvLayer<T>::zero_init(channels, 2, 3);
        point_head = ConvLayer<T>::zero_init(channels, 2, 1);
    }

    struct Acts {
        Tensor<T> in4;
        typename Backbone<T>::Acts bb;
        Tensor<T> rec_out;
        Tensor<T> ab_out;
        Tensor<T> p_out;
    };

    void forward(const Tensor<T>& x_ab, const Tensor<T>& map, Acts& acts) {
        concat_channels(x_ab, map, acts.in4);
        const Tensor<T>& feat = backbone.forward(acts.in4, acts.bb);
        rec.forward(feat, acts.rec_out);
        add_residual(acts.rec_out, x_ab, acts.ab_out);
        point_head.forward(feat, acts.p_out);
    }

    // Returns (g_x_ab, g_map).
    std::pair<Tensor<T>, Tensor<T>> backward(const Tensor<T>& g_ab, const Tensor<T>& g_p,
                                             Acts& acts) {
        const Tensor<T>& feat = acts.bb.blocks.back().out;
        Tensor<T> g_feat, g_feat_p;
        rec.backward(feat, g_ab, g_feat);
        point_head.backward(feat, g_p, g_feat_p);
        add_inplace(g_feat, g_feat_p);

        Tensor<T> g_in4 = backbone.backward(g_feat, acts.bb);
        Tensor<T> g_x_ab({2, g_in4.height(), g_in4.width()});
        Tensor<T> g_map({2, g_in4.height(), g_in4.width()});
        split_grad_accumulate(g_in4, 0, g_x_ab);
        split_grad_accumulate(g_in4, 2, g_map);
        add_inplace(g_x_ab, g_ab); // global skip onto the ab input
        return {std::move(g_x_ab), std::move(g_map)};
    }

    int conv_layer_count() const { return backbone.conv_count() + 1; } // aux head not counted

    void collect_params(const std::string& prefix, ParamRefs<T>& out) {
        backbone.collect_params(prefix, out);
        out.emplace_back(prefix + "rec.weight", &rec.weight);
        out.emplace_back(prefix + "rec.bias", &rec.bias);
        out.emplace_back(prefix + "phead.weight", &point_head.weight);
        out.emplace_back(prefix + "phead.bias", &point_head.bias);
    }
};

/// Generator + enhancer pair trained jointly in stage 2.
template <typename T>
struct CwanAb {
    CwanAbConfig cfg;
    AttentionGenerator<T> generator;
    ColorEnhancer<T> enhancer;

    CwanAb() = default;
    CwanAb(const CwanAbConfig& c, uint64_t seed) : cfg(c) {
        auto rng = make_rng(seed);
        generator = AttentionGenerator<T>(c.channels, c.generator_blocks, c.generator_kind, rng);
        enhancer = ColorEnhancer<T>(c.channels, c.enhancer_blocks, c.enhancer_kind, rng);
    }

    struct Acts {
        typename AttentionGenerator<T>::Acts gen;
        typename ColorEnhancer<T>::Acts enh;
    };

    // Fills acts with m̂ = acts.gen.out, x̂_ab = acts.enh.ab_out, p̂ = acts.enh.p_out.
    void forward(const Tensor<T>& x_ab, Acts& acts) {
        const Tensor<T>& map = generator.forward(x_ab, acts.gen);
        enhancer.forward(x_ab, map, acts.enh);
    }

    // End-to-end gradient: enhancer heads -> trunk -> concat split -> generator.
    Tensor<T> backward(const Tensor<T>& g_ab, const Tensor<T>& g_p, Acts& acts) {
        auto [g_x_ab, g_map] = enhancer.backward(g_ab, g_p, acts.enh);
        Tensor<T> g_x_gen = generator.backward(g_map, acts.gen);
        add_inplace(g_x_ab, g_x_gen);
        return g_x_ab;
    }

    void collect_params(const std::string& prefix, ParamRefs<T>& out) {
        generator.collect_params(prefix + "gen.", out);
        enhancer.collect_params(prefix + "enh.", out);
    }
    void collect_generator_params(const std::string& prefix, ParamRefs<T>& out) {
        generator.collect_params(prefix + "gen.", out);
    }
};

/// The whole model: lightness branch plus color branch.
template <typename T>
struct Cwan {
    CwanL<T> l;
    CwanAb<T> ab;

    Cwan() = default;
    Cwan(const CwanLConfig& lc, const CwanAbConfig& abc, uint64_t seed)
        : l(lc, mix_seed(seed, 1)), ab(abc, mix_seed(seed, 2)) {}
};

// ---- image <-> tensor bridging -----------------------------------------

inline Tensor<float> lightness_tensor(const LabImage& lab) {
    Tensor<float> t({1, lab.height, lab.width});
    std::copy(lab.lightness.begin(), lab.lightness.end(), t.data.begin());
    return t;
}

inline Tensor<float> ab_tensor(const LabImage& lab) {
    Tensor<float> t({2, lab.height, lab.width});
    const std::size_t plane = static_cast<std::size_t>(lab.height) * lab.width;
    for (std::size_t i = 0; i < plane; ++i) {
        t.data[i] = lab.ab[2 * i];
        t.data[plane + i] = lab.ab[2 * i + 1];
    }
    return t;
}

inline LabImage lab_from_tensors(const Tensor<float>& l, const Tensor<float>& ab) {
    LabImage lab(l.height(), l.width());
    std::copy(l.data.begin(), l.data.end(), lab.lightness.begin());
    const std::size_t plane = static_cast<std::size_t>(lab.height) * lab.width;
    for (std::size_t i = 0; i < plane; ++i) {
        lab.ab[2 * i] = ab.data[i];
        lab.ab[2 * i + 1] = ab.data[plane + i];
    }
    return lab;
}

/// Full enhancement pipeline: decompose, enhance both components, fuse.
SrgbImage enhance(Cwan<float>& model, const SrgbImage& img);

} // namespace cwan
