#pragma once

#include <cmath>
#include <cstring>
#include <random>
#include <stdexcept>

#include "cwan/kernels.hpp"
#include "cwan/tensor.hpp"

namespace cwan {

/// 2-d convolution, square kernel (1 or 3), stride 1, "same" zero padding.
/// Parameter gradients accumulate into weight.grad / bias.grad so a batch can
/// sum contributions before the optimizer step.
template <typename T = float>
struct ConvLayer {
    Tensor<T> weight; // (cout, cin, k, k)
    Tensor<T> bias;   // (cout)

    ConvLayer() = default;
    ConvLayer(int cin, int cout, int k) : weight({cout, cin, k, k}), bias({cout}) {
        if (k % 2 == 0) throw std::invalid_argument("ConvLayer: kernel must be odd");
        weight.alloc_grad();
        bias.alloc_grad();
    }

    int out_channels() const { return weight.dim(0); }
    int in_channels() const { return weight.dim(1); }
    int kernel() const { return weight.dim(2); }

    // He-normal weights (std = sqrt(2 / fan_in)), zero bias.
    static ConvLayer he_init(int cin, int cout, int k, std::mt19937_64& rng) {
        ConvLayer l(cin, cout, k);
        const double fan_in = static_cast<double>(cin) * k * k;
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
        for (auto& v : l.weight.data) v = static_cast<T>(dist(rng));
        return l;
    }

    // Zero weights and bias; used for reconstruction heads so training starts
    // from the identity mapping.
    static ConvLayer zero_init(int cin, int cout, int k) { return ConvLayer(cin, cout, k); }

    void forward(const Tensor<T>& x, Tensor<T>& out) const {
        if (x.shape.size() != 3 || x.channels() != in_channels())
            throw std::invalid_argument("ConvLayer::forward: input channels mismatch");
        out.resize({out_channels(), x.height(), x.width()});
        conv2d_forward(x.data.data(), in_channels(), x.height(), x.width(), weight.data.data(),
                       bias.data.data(), out_channels(), kernel(), out.data.data());
    }

    // Accumulates weight/bias grads, writes the input gradient into gin.
    void backward(const Tensor<T>& x, const Tensor<T>& gout, Tensor<T>& gin) {
        if (gout.channels() != out_channels() || gout.height() != x.height() ||
            gout.width() != x.width())
            throw std::invalid_argument("ConvLayer::backward: gradient shape mismatch");
        gin.resize({in_channels(), x.height(), x.width()});
        conv2d_backward_input(gout.data.data(), out_channels(), x.height(), x.width(),
                              weight.data.data(), in_channels(), kernel(), gin.data.data());
        conv2d_backward_params(x.data.data(), in_channels(), x.height(), x.width(),
                               gout.data.data(), out_channels(), kernel(), weight.grad.data(),
                               bias.grad.data());
    }
};

// ---- elementwise ops --------------------------------------------------

template <typename T>
void relu_forward(const Tensor<T>& x, Tensor<T>& out) {
    out.resize(x.shape);
    for (std::size_t i = 0; i < x.numel(); ++i) out.data[i] = x.data[i] > T(0) ? x.data[i] : T(0);
}

// Masks where the pre-activation input was <= 0.
template <typename T>
void relu_backward(const Tensor<T>& x_pre, const Tensor<T>& gout, Tensor<T>& gin) {
    require_same_shape(x_pre, gout, "relu_backward");
    gin.resize(x_pre.shape);
    for (std::size_t i = 0; i < x_pre.numel(); ++i)
        gin.data[i] = x_pre.data[i] > T(0) ? gout.data[i] : T(0);
}

template <typename T>
void sigmoid_forward(const Tensor<T>& x, Tensor<T>& out) {
    out.resize(x.shape);
    for (std::size_t i = 0; i < x.numel(); ++i)
        out.data[i] = T(1) / (T(1) + std::exp(-x.data[i]));
}

// Takes the forward *output* s, since s' = s (1 - s).
template <typename T>
void sigmoid_backward(const Tensor<T>& s, const Tensor<T>& gout, Tensor<T>& gin) {
    require_same_shape(s, gout, "sigmoid_backward");
    gin.resize(s.shape);
    for (std::size_t i = 0; i < s.numel(); ++i)
        gin.data[i] = gout.data[i] * s.data[i] * (T(1) - s.data[i]);
}

template <typename T>
void add_residual(const Tensor<T>& branch, const Tensor<T>& skip, Tensor<T>& out) {
    require_same_shape(branch, skip, "add_residual");
    out.resize(branch.shape);
    for (std::size_t i = 0; i < branch.numel(); ++i)
        out.data[i] = branch.data[i] + skip.data[i];
}

template <typename T>
void add_inplace(Tensor<T>& dst, const Tensor<T>& src) {
    require_same_shape(dst, src, "add_inplace");
    for (std::size_t i = 0; i < dst.numel(); ++i) dst.data[i] += src.data[i];
}

// ---- channel concat / split -------------------------------------------

template <typename T>
void concat_channels(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& out) {
    if (a.height() != b.height() || a.width() != b.width())
        throw std::invalid_argument("concat_channels: spatial mismatch");
    out.resize({a.channels() + b.channels(), a.height(), a.width()});
    std::memcpy(out.data.data(), a.data.data(), a.numel() * sizeof(T));
    std::memcpy(out.data.data() + a.numel(), b.data.data(), b.numel() * sizeof(T));
}

// Variadic form for the memory-block gate input.
template <typename T>
void concat_channels(const std::vector<const Tensor<T>*>& parts, Tensor<T>& out) {
    if (parts.empty()) throw std::invalid_argument("concat_channels: no inputs");
    const int h = parts[0]->height(), w = parts[0]->width();
    int c = 0;
    for (const auto* p : parts) {
        if (p->height() != h || p->width() != w)
            throw std::invalid_argument("concat_channels: spatial mismatch");
        c += p->channels();
    }
    out.resize({c, h, w});
    T* dst = out.data.data();
    for (const auto* p : parts) {
        std::memcpy(dst, p->data.data(), p->numel() * sizeof(T));
        dst += p->numel();
    }
}

// Channels [c0, c0+n) of x.
template <typename T>
void slice_channels(const Tensor<T>& x, int c0, int n, Tensor<T>& out) {
    if (c0 < 0 || c0 + n > x.channels())
        throw std::invalid_argument("slice_channels: range out of bounds");
    out.resize({n, x.height(), x.width()});
    const std::size_t plane = static_cast<std::size_t>(x.height()) * x.width();
    std::memcpy(out.data.data(), x.data.data() + c0 * plane, n * plane * sizeof(T));
}

// Adds the channel segment [c0, c0+seg.channels()) of a concat gradient into seg_grad.
template <typename T>
void split_grad_accumulate(const Tensor<T>& gcat, int c0, Tensor<T>& seg_grad) {
    const std::size_t plane = static_cast<std::size_t>(gcat.height()) * gcat.width();
    const T* src = gcat.data.data() + c0 * plane;
    for (std::size_t i = 0; i < seg_grad.numel(); ++i) seg_grad.data[i] += src[i];
}

template <typename T>
void clamp01(Tensor<T>& x) {
    for (auto& v : x.data) v = v < T(0) ? T(0) : (v > T(1) ? T(1) : v);
}

} // namespace cwan
