#pragma once

#include <cmath>
#include <stdexcept>

#include "cwan/tensor.hpp"

namespace cwan {

struct LossConfig {
    float alpha = 1.0f;  // weight of the masked point loss
    float delta = 0.5f;  // Huber threshold
    int beta = 20;       // requested attention points
};

/// Mean absolute error. Gradient (into gpred when non-null) is
/// sign(pred - target) / numel, subgradient 0 at exact ties.
template <typename T>
double l1_loss(const Tensor<T>& pred, const Tensor<T>& target, Tensor<T>* gpred = nullptr) {
    require_same_shape(pred, target, "l1_loss");
    const double inv_n = 1.0 / static_cast<double>(pred.numel());
    if (gpred) gpred->resize(pred.shape);
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.numel(); ++i) {
        const T e = pred.data[i] - target.data[i];
        sum += std::abs(static_cast<double>(e));
        if (gpred)
            gpred->data[i] = e > T(0) ? static_cast<T>(inv_n) : (e < T(0) ? static_cast<T>(-inv_n) : T(0));
    }
    return sum * inv_n;
}

/// Mean Huber: 0.5 e^2 for |e| <= delta, else delta |e| - 0.5 delta^2.
template <typename T>
double huber_loss(const Tensor<T>& pred, const Tensor<T>& target, T delta,
                  Tensor<T>* gpred = nullptr) {
    require_same_shape(pred, target, "huber_loss");
    if (!(delta > T(0))) throw std::invalid_argument("huber_loss: delta must be positive");
    const double inv_n = 1.0 / static_cast<double>(pred.numel());
    if (gpred) gpred->resize(pred.shape);
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.numel(); ++i) {
        const T e = pred.data[i] - target.data[i];
        const T ae = std::abs(e);
        if (ae <= delta) {
            sum += 0.5 * static_cast<double>(e) * static_cast<double>(e);
            if (gpred) gpred->data[i] = static_cast<T>(e * static_cast<T>(inv_n));
        } else {
            sum += static_cast<double>(delta) * static_cast<double>(ae) -
                   0.5 * static_cast<double>(delta) * static_cast<double>(delta);
            if (gpred)
                gpred->data[i] = static_cast<T>((e > T(0) ? delta : -delta) * static_cast<T>(inv_n));
        }
    }
    return sum * inv_n;
}

/// Squared error summed over masked coordinates, divided by beta_effective.
/// Gradient is zero outside the mask. beta_effective = 0 degrades to a zero
/// loss with zero gradient (patch with no attention support).
template <typename T>
double masked_mse(const Tensor<T>& pred, const Tensor<T>& target, const Tensor<T>& point_mask,
                  int beta_effective, Tensor<T>* gpred = nullptr) {
    require_same_shape(pred, target, "masked_mse");
    if (point_mask.height() != pred.height() || point_mask.width() != pred.width())
        throw std::invalid_argument("masked_mse: mask spatial mismatch");
    if (gpred) {
        gpred->resize(pred.shape);
        gpred->fill(T(0));
    }
    if (beta_effective <= 0) return 0.0;

    const std::size_t plane = static_cast<std::size_t>(pred.height()) * pred.width();
    const double inv_b = 1.0 / static_cast<double>(beta_effective);
    double sum = 0.0;
    for (int c = 0; c < pred.channels(); ++c) {
        for (std::size_t i = 0; i < plane; ++i) {
            if (point_mask.data[i] == T(0)) continue;
            const T e = pred.data[c * plane + i] - target.data[c * plane + i];
            sum += static_cast<double>(e) * static_cast<double>(e);
            if (gpred) gpred->data[c * plane + i] = static_cast<T>(2.0 * e * inv_b);
        }
    }
    return sum * inv_b;
}

struct AbLossValue {
    double total = 0.0;
    double huber = 0.0;
    double mse = 0.0;
};

/// Color-enhancement objective: Huber on the predicted ab planes plus
/// alpha * masked point MSE. Components are exposed for logging.
template <typename T>
AbLossValue cwan_ab_loss(const Tensor<T>& ab_pred, const Tensor<T>& ab_target,
                         const Tensor<T>& points_pred, const Tensor<T>& points_target,
                         const Tensor<T>& point_mask, int beta_effective, const LossConfig& cfg,
                         Tensor<T>* g_ab = nullptr, Tensor<T>* g_points = nullptr) {
    AbLossValue v;
    v.huber = huber_loss(ab_pred, ab_target, static_cast<T>(cfg.delta), g_ab);
    v.mse = masked_mse(points_pred, points_target, point_mask, beta_effective, g_points);
    v.total = v.huber + static_cast<double>(cfg.alpha) * v.mse;
    if (g_points && cfg.alpha != 1.0f)
        for (auto& g : g_points->data) g *= static_cast<T>(cfg.alpha);
    return v;
}

} // namespace cwan
