#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "cwan/rng.hpp"

namespace cwan {

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t coords_checked = 0;
};

/// Central finite differences against an analytic gradient at sampled
/// coordinates of one flat parameter/input buffer.
///
///   loss()  re-evaluates the scalar objective at the current buffer values
///   grad    analytic d loss / d buffer, same length as the buffer
///
/// rel = |fd - g| / max(|fd|, |g|, floor); the floor keeps near-zero
/// gradient pairs from dividing noise by noise.
template <typename T>
GradCheckResult grad_check(T* buf, std::size_t n, const std::vector<T>& grad,
                           const std::function<double()>& loss, double h, std::size_t samples,
                           uint64_t seed, double floor = 1e-8) {
    GradCheckResult r;
    auto rng = make_rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    const std::size_t count = std::min(samples, n);
    std::vector<std::size_t> coords;
    if (count == n) {
        coords.resize(n);
        for (std::size_t i = 0; i < n; ++i) coords[i] = i;
    } else {
        for (std::size_t i = 0; i < count; ++i) coords.push_back(pick(rng));
    }

    for (std::size_t i : coords) {
        const T saved = buf[i];
        buf[i] = saved + static_cast<T>(h);
        const double lp = loss();
        buf[i] = saved - static_cast<T>(h);
        const double lm = loss();
        buf[i] = saved;
        const double fd = (lp - lm) / (2.0 * h);
        const double g = static_cast<double>(grad[i]);
        const double denom = std::max({std::abs(fd), std::abs(g), floor});
        const double rel = std::abs(fd - g) / denom;
        r.max_rel_error = std::max(r.max_rel_error, rel);
        ++r.coords_checked;
    }
    return r;
}

/// Fixed random projection weights used to collapse a tensor-valued output to
/// a scalar objective for network-level checks.
template <typename T>
std::vector<T> projection_weights(std::size_t n, uint64_t seed) {
    auto rng = make_rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<T> w(n);
    for (auto& v : w) v = static_cast<T>(u(rng));
    return w;
}

template <typename T>
double project(const std::vector<T>& values, const std::vector<T>& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
        s += static_cast<double>(values[i]) * static_cast<double>(w[i]);
    return s;
}

} // namespace cwan
