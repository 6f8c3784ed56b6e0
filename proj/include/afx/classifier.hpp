#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "afx/data.hpp"
#include "afx/nn.hpp"
#include "afx/tensor.hpp"

namespace afx {

struct ClassifierConfig {
    int batch_size = 32;
    int epochs = 40;
    double lr = 1e-3;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    uint64_t seed = 1;
};

// conv3x3(32) conv3x3(32) maxpool conv3x3(64) conv3x3(64) gap dense(2),
// batch norm before each ReLU. Input is (n,1,r,r) in [0,1].
struct ClassifierNet {
    Conv2d conv1, conv2, conv3, conv4;
    BatchNorm2d bn1, bn2, bn3, bn4;
    Dense fc;

    ClassifierNet();
    void init(Rng& rng);
    void collect(Adam& opt);
    std::string arch_descriptor() const;
};

struct TrainedClassifier {
    ClassifierNet net;
    int input_resolution = 128;
    std::array<std::string, 2> class_names{"0", "1"};

    // Frozen inference; no shared mutable state, safe to call concurrently.
    Tensor predict(const Tensor& x01) const;               // (n,2) probabilities
    Tensor penultimate_features(const Tensor& x01) const;  // (n,64), differentiable path

    // Everything the frozen backward pass needs. probs/feats are outputs.
    struct FrozenPass {
        Tensor x, y1, a1, y2, a2, pooled, y3, a3, y4, a4, feats, logits, probs;
        MaxPool2x2::Cache pc;
    };
    void forward_frozen(const Tensor& x01, FrozenPass& fp, Scratch& sc) const;
    // Gradient wrt the [0,1] input given upstream gradients at the logits
    // and/or the penultimate features (either may be empty).
    Tensor input_grad(const FrozenPass& fp, const Tensor& dlogits, const Tensor& dfeats,
                      Scratch& sc) const;

    void validate_input(const Tensor& x01) const;
};

// Probability-pair argmax with the tie resolved to class 1.
inline int argmax_class(const float* p2) { return p2[1] >= p2[0] ? 1 : 0; }

// [-1,1] -> [0,1]
Tensor to_unit_range(const Tensor& pm1);

struct ClassifierTrainMetrics {
    std::vector<double> train_loss;  // per-epoch mean cross entropy
    double final_accuracy = 0.0;
    int epochs = 0;
};

// Trains on `train`, reports accuracy on `val`. Both sets arrive in the
// canonical [-1,1] domain and are mapped to [0,1] internally. Loss is
// cross entropy on the two softmax outputs (for two classes this equals
// binary cross entropy on the class-1 probability).
TrainedClassifier train_classifier(const LabeledImageSet& train, const LabeledImageSet& val,
                                   const ClassifierConfig& cfg,
                                   ClassifierTrainMetrics* metrics = nullptr);

// Per-batch divergence guard shared by the training loops; the thrown
// message names the net and carries the epoch index (1-based).
void ensure_finite_loss(double loss, const char* net_name, int epoch, int sample_index);

void save_classifier(const TrainedClassifier& clf, const std::filesystem::path& path);
TrainedClassifier load_classifier(const std::filesystem::path& path);

}  // namespace afx
