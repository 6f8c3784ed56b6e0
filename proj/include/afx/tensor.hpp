#pragma once

#include <cassert>
#include <cstdint>
#include <string>
#include <vector>

namespace afx {

// Dense float32 tensor, NCHW, contiguous. Vectors use (len,1,1,1).
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<float> v;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_), v(static_cast<size_t>(n_) * c_ * h_ * w_, 0.0f) {}
    static Tensor vec(int len) { return Tensor(len, 1, 1, 1); }

    size_t numel() const { return v.size(); }
    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
    std::string shape_str() const {
        return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
               std::to_string(h) + "," + std::to_string(w) + ")";
    }

    float* data() { return v.data(); }
    const float* data() const { return v.data(); }
    // Pointer to sample i / channel plane (i,j).
    float* at(int i) { return v.data() + static_cast<size_t>(i) * c * h * w; }
    const float* at(int i) const { return v.data() + static_cast<size_t>(i) * c * h * w; }
    float* plane(int i, int j) { return at(i) + static_cast<size_t>(j) * h * w; }
    const float* plane(int i, int j) const { return at(i) + static_cast<size_t>(j) * h * w; }

    void zero() { std::fill(v.begin(), v.end(), 0.0f); }
    void fill(float x) { std::fill(v.begin(), v.end(), x); }
};

bool all_finite(const Tensor& t);
float min_value(const Tensor& t);
float max_value(const Tensor& t);

// Channel-wise concat of two NCHW tensors with matching n/h/w.
Tensor concat_channels(const Tensor& a, const Tensor& b);
// Splits gradient of concat_channels back into the two operands.
void split_channels(const Tensor& dy, Tensor& da, Tensor& db);

// y += x (shapes must match).
void axpy(float alpha, const Tensor& x, Tensor& y);

}  // namespace afx
