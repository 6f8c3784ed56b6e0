#pragma once

#include "afx/tensor.hpp"

namespace afx {

// Gaussian-windowed SSIM parameters. data_range is the dynamic range L of
// the internal comparison domain; inputs arrive in [-1,1] and are mapped to
// [0,1], so L stays 1.
struct SsimSpec {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double data_range = 1.0;
};

// Mean of per-window SSIM values over all fully valid window positions,
// each window value clamped to [0,1] before averaging. Inputs are
// single-sample, single-channel tensors of identical shape with values in
// [-1,1]. Symmetric in its arguments; exactly 1 for identical inputs.
double ssim(const Tensor& a, const Tensor& b, const SsimSpec& spec);

// Same value; additionally writes d(ssim)/d(b) (the generated-image side,
// gradient expressed wrt the [-1,1] domain) into db.
double ssim_with_grad(const Tensor& a, const Tensor& b, const SsimSpec& spec, Tensor& db);

}  // namespace afx
