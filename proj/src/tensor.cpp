#include "afx/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace afx {

bool all_finite(const Tensor& t) {
    for (float x : t.v)
        if (!std::isfinite(x)) return false;
    return true;
}

float min_value(const Tensor& t) {
    return *std::min_element(t.v.begin(), t.v.end());
}

float max_value(const Tensor& t) {
    return *std::max_element(t.v.begin(), t.v.end());
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    assert(a.n == b.n && a.h == b.h && a.w == b.w);
    Tensor y(a.n, a.c + b.c, a.h, a.w);
    size_t plane = static_cast<size_t>(a.h) * a.w;
    for (int i = 0; i < a.n; ++i) {
        std::memcpy(y.at(i), a.at(i), a.c * plane * sizeof(float));
        std::memcpy(y.at(i) + a.c * plane, b.at(i), b.c * plane * sizeof(float));
    }
    return y;
}

void split_channels(const Tensor& dy, Tensor& da, Tensor& db) {
    assert(dy.c == da.c + db.c && dy.n == da.n);
    size_t plane = static_cast<size_t>(dy.h) * dy.w;
    for (int i = 0; i < dy.n; ++i) {
        std::memcpy(da.at(i), dy.at(i), da.c * plane * sizeof(float));
        std::memcpy(db.at(i), dy.at(i) + da.c * plane, db.c * plane * sizeof(float));
    }
}

void axpy(float alpha, const Tensor& x, Tensor& y) {
    assert(x.numel() == y.numel());
    const float* xs = x.data();
    float* ys = y.data();
    for (size_t i = 0; i < x.numel(); ++i) ys[i] += alpha * xs[i];
}

}  // namespace afx
