#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "afx/boundary.hpp"
#include "afx/classifier.hpp"
#include "afx/data.hpp"
#include "afx/explainer.hpp"

namespace afx {

// One experiment: key = value lines with dotted sections (data.*,
// classifier.*, svm.*, gan.*, eval.*, run_dir). Unknown keys are rejected;
// the defaults are the Fashion-MNIST ankle-boot/sneaker configuration.
struct ExperimentConfig {
    DataSourceSpec data;
    PreprocessSpec prep;  // pipeline resolution; not exposed as keys
    ClassifierConfig classifier;
    SvmConfig svm;
    ExplainerConfig gan;
    Split eval_split = Split::test;
    std::filesystem::path run_dir = "runs/default";

    // Reseeds every stage from one root (the --seed override).
    void set_seed(uint64_t seed);
};

ExperimentConfig parse_config(const std::filesystem::path& path);
ExperimentConfig parse_config_text(const std::string& text);

void apply_overrides(ExperimentConfig& cfg, const std::optional<uint64_t>& seed,
                     const std::optional<std::filesystem::path>& run_dir);

}  // namespace afx
