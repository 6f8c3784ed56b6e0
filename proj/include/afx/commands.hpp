#pragma once

#include <cstdint>
#include <vector>

#include "afx/config.hpp"
#include "afx/tensor.hpp"

namespace afx {

// Pipeline commands. Each reads/writes artifacts under cfg.run_dir and
// returns a process exit code (errors surface as the runtime exceptions and
// are mapped to codes by the CLI).
int cmd_train_classifier(const ExperimentConfig& cfg);
int cmd_fit_svm(const ExperimentConfig& cfg);
int cmd_train_explainer(const ExperimentConfig& cfg);
int cmd_evaluate(const ExperimentConfig& cfg);

struct RenderOptions {
    int steps = 8;  // frames per interpolation strip
    int count = 8;  // number of inputs rendered
};
int cmd_render(const ExperimentConfig& cfg, const RenderOptions& opts);

// Linear interpolation frames x_t = (1-t) x + t xhat at t = k/(steps-1).
// Frame 0 is x and frame steps-1 is xhat, bitwise.
std::vector<Tensor> interpolation_frames(const Tensor& x, const Tensor& xhat, int steps);

// Per-sample generation seed used by evaluate and render.
uint64_t eval_seed(uint64_t base, int index);

}  // namespace afx
