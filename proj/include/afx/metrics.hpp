#pragma once

#include <array>
#include <string>
#include <vector>

#include "afx/boundary.hpp"
#include "afx/classifier.hpp"
#include "afx/ssim.hpp"
#include "afx/tensor.hpp"

namespace afx {

enum class ExplainerMode { alterfactual, counterfactual };

const char* mode_name(ExplainerMode m);
ExplainerMode parse_mode(const std::string& s);

// Per-pair evaluation outcome. pred_* are (p_class0, p_class1); dist_* are
// hyperplane distances of the penultimate features.
struct ExplanationRecord {
    int id = 0;
    std::array<double, 2> pred_orig{0, 0}, pred_expl{0, 0};
    double ssim_val = 0.0;
    double dist_orig = 0.0, dist_expl = 0.0;
    int target_class = 0;
    bool valid = false;
};

struct EvaluationReport {
    ExplainerMode mode = ExplainerMode::alterfactual;
    int n = 0;
    double validity_pct = 0.0;
    double mean_ssim = 0.0;
    double mean_boundary_drift = 0.0;  // mean |dist(x) - dist(xhat)|
    SsimSpec ssim_spec;
    std::vector<ExplanationRecord> records;
};

// A pair (x, xhat) is valid iff argmax(predict(xhat)) equals the target
// class: the original decision for alterfactuals, the flipped decision for
// counterfactuals. Returns a percentage.
double validity(const TrainedClassifier& clf, const Tensor& xs, const Tensor& xhats,
                ExplainerMode mode);

// Full computational evaluation of explanation pairs (values in [-1,1]).
EvaluationReport evaluate(const TrainedClassifier& clf, const HyperplaneSurrogate& surr,
                          const Tensor& xs, const Tensor& xhats, ExplainerMode mode,
                          const SsimSpec& spec);

}  // namespace afx
