#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "afx/boundary.hpp"
#include "afx/classifier.hpp"
#include "afx/data.hpp"
#include "afx/gan.hpp"
#include "afx/metrics.hpp"
#include "afx/ssim.hpp"

namespace afx {

struct ExplainerConfig {
    ExplainerMode mode = ExplainerMode::alterfactual;
    int batch_size = 1;  // the alternating update scheme is defined per sample
    int epochs = 14;
    double lr_g = 1e-4, lr_d = 1e-4;
    double beta1 = 0.5, beta2 = 0.999, adam_eps = 1e-8;
    double lambda_adv = 1.0, lambda_cls = 1.0, lambda_sim = 1.0, lambda_svm = 1.0;
    bool use_boundary_loss = true;
    uint64_t seed = 1;
    SsimSpec ssim;

    void validate() const;  // throws ConfigError
    // The boundary term only exists for alterfactuals; counterfactual mode
    // always gates it to zero.
    double effective_lambda_svm() const;
    bool boundary_term_active() const;
};

struct ExplainerModel {
    ExplainerMode mode = ExplainerMode::alterfactual;
    GeneratorNet gen;
    DiscriminatorNet disc;
    ExplainerConfig cfg;
    int epoch = 0;
    std::string rng_state;  // training stream snapshot at the last checkpoint
};

// Probability floor keeping every log term finite.
inline constexpr double kProbEps = 1e-7;

// mean(-log p) over a patch map and its gradient wrt p.
double patch_real_loss(const Tensor& p);
Tensor patch_real_loss_grad(const Tensor& p);
// mean(-log(1-p)) and gradient.
double patch_fake_loss(const Tensor& p);
Tensor patch_fake_loss_grad(const Tensor& p);

struct AdvLosses {
    double loss_d = 0.0;      // -mean log D(real,y) - mean log(1 - D(fake,y))
    double loss_g_adv = 0.0;  // -mean log D(fake,y), non-saturating form
};
AdvLosses adversarial_losses(const DiscriminatorNet& d, const Tensor& x_real,
                             const Tensor& x_fake, int label_real, int label_fake);

// Class the explanation must receive: the decision itself for alterfactuals,
// the opposite one for counterfactuals.
int target_class(int decision, ExplainerMode mode);

double binary_cross_entropy(double p1, int target);
// BCE of the classifier's class-1 probability on xhat against target_class
// of the decision on x. Both images in [-1,1].
double classification_loss(const TrainedClassifier& clf, const Tensor& x, const Tensor& xhat,
                           ExplainerMode mode);
// SSIM for alterfactuals (similarity is penalised), 1 - SSIM for
// counterfactuals (dissimilarity is penalised).
double similarity_loss(const Tensor& x, const Tensor& xhat, ExplainerMode mode,
                       const SsimSpec& spec);
// |dist(x) - dist(xhat)| in surrogate feature space; only xhat's side is a
// function of the generator.
double boundary_loss(const TrainedClassifier& clf, const HyperplaneSurrogate& surr,
                     const Tensor& x, const Tensor& xhat);

struct LossComponents {
    double adv = 0.0, cls = 0.0, sim = 0.0, svm = 0.0;
};
// lambda-weighted sum; the svm term is dropped in counterfactual mode.
// Throws TrainingFailure naming the first non-finite component.
double total_generator_loss(const LossComponents& c, const ExplainerConfig& cfg);

// Trains the conditional GAN against the frozen classifier. surr may be null
// unless the boundary term is active. When run_dir is non-empty, every epoch
// atomically rewrites <run_dir>/explainer_<mode>.ckpt and renders a
// fixed-input, fixed-noise monitor grid to <run_dir>/samples/epoch_<n>.png,
// so a crash or a non-finite abort always leaves the last good checkpoint.
ExplainerModel train_explainer(const TrainedClassifier& clf, const HyperplaneSurrogate* surr,
                               const LabeledImageSet& train_set, const ExplainerConfig& cfg,
                               const std::filesystem::path& run_dir = {});

// xhat = G(x, z) where z is the decoder dropout stream drawn from `seed`.
// Bitwise deterministic for a fixed (x, seed) on one machine.
Tensor generate_image(const ExplainerModel& model, const Tensor& x, uint64_t seed);

// Fully populated per-pair record (predictions, ssim, distances, validity).
ExplanationRecord generate(const ExplainerModel& model, const TrainedClassifier& clf,
                           const HyperplaneSurrogate& surr, const Tensor& x, uint64_t seed,
                           const SsimSpec& spec);

void save_explainer(const ExplainerModel& m, const std::filesystem::path& path);
ExplainerModel load_explainer(const std::filesystem::path& path);

}  // namespace afx
