#pragma once

#include <array>
#include <string>

#include "afx/nn.hpp"

namespace afx {

// Image-to-image generator: seven 4x4/stride-2 conv encoder stages down to a
// 1x1 bottleneck, seven 4x4/stride-2 transposed-conv decoder stages back to
// 128x128, skip concatenations from each encoder stage to the matching
// decoder stage. Noise enters as dropout on the first three decoder stages
// and stays active at generation time. Per stage the order is
// conv -> batch norm -> dropout -> activation.
struct GeneratorNet {
    static constexpr int kStages = 7;
    static constexpr std::array<int, kStages> kEncFilters = {64, 128, 256, 512, 512, 512, 512};
    static constexpr std::array<int, kStages> kDecFilters = {512, 512, 512, 256, 128, 64, 1};
    static constexpr float kDropP = 0.5f;
    static constexpr float kLeakySlope = 0.2f;

    std::array<Conv2d, kStages> enc;
    std::array<BatchNorm2d, 5> enc_bn;  // stages 2..6
    std::array<ConvTranspose2d, kStages> dec;
    std::array<BatchNorm2d, 6> dec_bn;  // all but the output stage

    GeneratorNet();
    void init(Rng& rng);
    void collect(Adam& opt);
    std::string arch_descriptor() const;

    struct Pass {
        Tensor e_x;                             // network input
        std::array<Tensor, kStages> e_y, e_a;   // encoder pre-act, act
        std::array<BatchNorm2d::Cache, 5> e_bnc;
        std::array<Tensor, kStages> d_in, d_drop, d_a;
        std::array<Tensor, 3> d_mask;
        std::array<BatchNorm2d::Cache, 6> d_bnc;
    };

    // Batch-stats BN + caller-provided dropout stream; const, so generation
    // can run concurrently with per-call passes. Input (1,1,128,128) in
    // [-1,1]; returns tanh output of the same shape.
    Tensor forward(const Tensor& x, Rng& noise, Pass& gp, Scratch& sc) const;
    // Accumulates parameter gradients from d(loss)/d(xhat).
    void backward(const Tensor& dxhat, Pass& gp, Scratch& sc);
};

// Patch discriminator over (image, class label): the label embeds to an 8x8
// plane, upsamples to 128x128 and concatenates with the image; four
// 4x4/stride-2 convs end in a sigmoid 8x8 patch map.
struct DiscriminatorNet {
    static constexpr int kPatch = 8;

    Embedding embed;  // 2 labels x 64
    Conv2d conv1, conv2, conv3, conv4;
    BatchNorm2d bn2, bn3;

    DiscriminatorNet();
    void init(Rng& rng);
    void collect(Adam& opt);
    std::string arch_descriptor() const;

    struct Pass {
        Tensor input;  // image ++ label plane
        Tensor z1, a1, y2, a2, y3, a3, out;
        BatchNorm2d::Cache c2, c3;
        int label = 0;
    };

    // Returns the (1,1,8,8) patch probability map.
    Tensor forward(const Tensor& image, int label, Pass& dp, Scratch& sc) const;
    // Parameter gradients from d(loss)/d(patch probabilities).
    void backward(const Tensor& dprob, Pass& dp, Scratch& sc);
    // Gradient wrt the image only; discriminator parameters untouched
    // (generator update path).
    Tensor backward_data(const Tensor& dprob, const Pass& dp, Scratch& sc) const;
};

}  // namespace afx
