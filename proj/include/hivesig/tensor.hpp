#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

namespace hivesig {

// Dense row-major value array. Layouts by convention: activations are
// [N,C,H,W], conv weights [out,in,kh,kw], dense weights [out,in], per-channel
// vectors [c].
template <typename T>
struct Tensor {
    std::vector<int> shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s)
        : shape(std::move(s)), data(static_cast<size_t>(numel_of(shape)), T(0)) {}
    Tensor(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {}

    static int64_t numel_of(const std::vector<int>& s) {
        int64_t n = 1;
        for (int d : s) n *= d;
        return s.empty() ? 0 : n;
    }

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int dim(size_t i) const { return i < shape.size() ? shape[i] : 1; }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.shape = shape;
        out.data.assign(data.begin(), data.end());
        return out;
    }
};

inline std::string shape_str(const std::vector<int>& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

}  // namespace hivesig
