#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "afx/tensor.hpp"

namespace afx {

struct SvmConfig {
    double c = 10.0;
    int max_iterations = 5000;  // outer passes over the data
    double tol = 1e-4;
    double holdout_fraction = 0.1;
    uint64_t seed = 1;
};

// Linear decision-boundary surrogate in standardized feature space:
// distance(f) = |w . z(f) + b| / ||w||  with  z(f) = (f - mean) / std.
struct HyperplaneSurrogate {
    std::vector<double> w;
    double b = 0.0;
    std::vector<double> mean, std;
    double fit_agreement = 0.0;  // held-out decision agreement
    int n_fit = 0;

    int dim() const { return static_cast<int>(w.size()); }
    double distance(const double* feat) const;
    double distance(const float* feat) const;
    // d(distance)/d(raw feature); the subgradient on the plane itself is 0.
    void distance_grad(const float* feat, float* out) const;
};

// Fits a hinge-loss (C-regularised, liblinear-style dual coordinate descent)
// linear separator on standardized features against the given binary
// decisions. Features with zero variance get std 1. Throws ValidationError
// when only one class is present.
HyperplaneSurrogate fit_surrogate(const Tensor& feats, const std::vector<uint8_t>& decisions,
                                  const SvmConfig& cfg);

double hyperplane_distance(const HyperplaneSurrogate& surr, const std::vector<double>& feat);

void save_surrogate(const HyperplaneSurrogate& surr, const std::filesystem::path& path);
HyperplaneSurrogate load_surrogate(const std::filesystem::path& path);

}  // namespace afx
