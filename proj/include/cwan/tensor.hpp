#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace cwan {

/// Dense row-major N-d array. Feature maps are (C,H,W), conv weights
/// (Cout,Cin,k,k). `grad` stays empty unless the tensor is a trainable
/// parameter or a gradient buffer is explicitly requested.
template <typename T = float>
struct Tensor {
    std::vector<int> shape;
    std::vector<T> data;
    std::vector<T> grad;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)), data(numel_of(shape), T(0)) {}

    static std::size_t numel_of(const std::vector<int>& s) {
        std::size_t n = 1;
        for (int d : s) {
            if (d <= 0) throw std::invalid_argument("tensor dimension must be positive");
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    std::size_t numel() const { return data.size(); }
    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

    // (C,H,W) accessors
    int channels() const { return shape.at(0); }
    int height() const { return shape.at(1); }
    int width() const { return shape.at(2); }

    T& at(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * height() + y) * width() + x];
    }
    const T& at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height() + y) * width() + x];
    }

    void resize(const std::vector<int>& s) {
        shape = s;
        data.assign(numel_of(s), T(0));
    }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    void alloc_grad() { grad.assign(data.size(), T(0)); }
    void zero_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), T(0));
        else std::fill(grad.begin(), grad.end(), T(0));
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

template <typename T>
std::string shape_str(const Tensor<T>& t) {
    std::string s = "(";
    for (std::size_t i = 0; i < t.shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(t.shape[i]);
    }
    return s + ")";
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(what) + ": shape mismatch " + shape_str(a) +
                                    " vs " + shape_str(b));
}

} // namespace cwan
