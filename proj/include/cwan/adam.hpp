#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "cwan/errors.hpp"
#include "cwan/tensor.hpp"

namespace cwan {

/// Named references to a model's trainable tensors, in a fixed order.
template <typename T = float>
using ParamRefs = std::vector<std::pair<std::string, Tensor<T>*>>;

template <typename T = float>
struct AdamConfig {
    T lr = T(1e-4);
    T weight_decay = T(0); // L2 coefficient added to the raw gradient
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T eps = T(1e-8);
};

/// First/second moment buffers, one pair per parameter tensor.
template <typename T = float>
struct AdamState {
    std::vector<std::vector<T>> m, v;
    long step = 0;

    void init(const ParamRefs<T>& params) {
        m.clear();
        v.clear();
        for (const auto& [name, t] : params) {
            (void)name;
            m.emplace_back(t->numel(), T(0));
            v.emplace_back(t->numel(), T(0));
        }
        step = 0;
    }
};

/// One Adam update over all parameters; reads t->grad, writes t->data.
/// Throws NumericError on any non-finite gradient.
template <typename T>
void adam_step(const ParamRefs<T>& params, AdamState<T>& state, const AdamConfig<T>& cfg) {
    if (state.m.size() != params.size()) state.init(params);
    ++state.step;
    const T bc1 = T(1) - std::pow(cfg.beta1, static_cast<T>(state.step));
    const T bc2 = T(1) - std::pow(cfg.beta2, static_cast<T>(state.step));

    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor<T>* t = params[pi].second;
        if (t->grad.size() != t->data.size())
            throw std::invalid_argument("adam_step: parameter has no gradient buffer");
        auto& m = state.m[pi];
        auto& v = state.v[pi];
        for (std::size_t i = 0; i < t->data.size(); ++i) {
            T g = t->grad[i];
            if (!std::isfinite(g))
                throw NumericError("adam_step: non-finite gradient in " + params[pi].first);
            g += cfg.weight_decay * t->data[i];
            m[i] = cfg.beta1 * m[i] + (T(1) - cfg.beta1) * g;
            v[i] = cfg.beta2 * v[i] + (T(1) - cfg.beta2) * g * g;
            const T mhat = m[i] / bc1;
            const T vhat = v[i] / bc2;
            t->data[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

template <typename T>
void zero_grads(const ParamRefs<T>& params) {
    for (auto& [name, t] : params) {
        (void)name;
        t->zero_grad();
    }
}

// Scales accumulated gradients, e.g. by 1/batch before the update.
template <typename T>
void scale_grads(const ParamRefs<T>& params, T s) {
    for (auto& [name, t] : params) {
        (void)name;
        for (auto& g : t->grad) g *= s;
    }
}

} // namespace cwan
