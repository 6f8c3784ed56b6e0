#pragma once

#include <string>
#include <vector>

#include "afx/rng.hpp"
#include "afx/tensor.hpp"

namespace afx {

// Reusable im2col buffers so hot loops do not reallocate.
struct Scratch {
    std::vector<float> cols;
    std::vector<float> cols2;
};

// Layers own parameters and gradients only. Anything needed between forward
// and backward (inputs, masks, batch statistics) is held by the caller, so a
// frozen net can run inference from several threads with per-thread scratch.

struct Conv2d {
    int in_c = 0, out_c = 0, k = 0, stride = 1, pad = 0;
    Tensor w, b, gw, gb;  // w laid out (out_c, in_c, k, k)

    Conv2d() = default;
    Conv2d(int in_c_, int out_c_, int k_, int stride_, int pad_);
    void init(Rng& rng);
    int out_h(int h) const { return (h + 2 * pad - k) / stride + 1; }

    Tensor fwd(const Tensor& x, Scratch& sc) const;
    // Accumulates gw/gb; returns dx when want_dx.
    Tensor bwd(const Tensor& x, const Tensor& dy, Scratch& sc, bool want_dx = true);
    Tensor bwd_data(const Tensor& dy, int in_h, int in_w, Scratch& sc) const;
};

struct ConvTranspose2d {
    int in_c = 0, out_c = 0, k = 0, stride = 1, pad = 0;
    Tensor w, b, gw, gb;  // w laid out (in_c, out_c, k, k)

    ConvTranspose2d() = default;
    ConvTranspose2d(int in_c_, int out_c_, int k_, int stride_, int pad_);
    void init(Rng& rng);
    int out_h(int h) const { return stride * (h - 1) + k - 2 * pad; }

    Tensor fwd(const Tensor& x, Scratch& sc) const;
    Tensor bwd(const Tensor& x, const Tensor& dy, Scratch& sc, bool want_dx = true);
};

struct BatchNorm2d {
    int c = 0;
    float momentum = 0.99f, eps = 1e-3f;
    Tensor gamma, beta, ggamma, gbeta;
    std::vector<float> run_mean, run_var;

    struct Cache {
        Tensor xhat;
        std::vector<float> inv_std, mean, var;
    };

    BatchNorm2d() = default;
    explicit BatchNorm2d(int c_);

    // Normalises by batch statistics without touching running averages
    // (generator/discriminator semantics: batch statistics always, also at
    // generation time).
    Tensor fwd_batch_stats(const Tensor& x, Cache& cc) const;
    // Normalises by batch statistics and updates the running averages.
    Tensor fwd_batch(const Tensor& x, Cache& cc);
    // Normalises by stored running averages (frozen nets).
    Tensor fwd_frozen(const Tensor& x) const;
    Tensor bwd_batch(const Tensor& dy, const Cache& cc);
    // Like bwd_batch but leaves parameter gradients untouched.
    Tensor bwd_batch_data(const Tensor& dy, const Cache& cc) const;
    // Gradient through fwd_frozen, parameters held fixed.
    Tensor bwd_frozen_data(const Tensor& dy) const;
};

struct Dense {
    int in_d = 0, out_d = 0;
    Tensor w, b, gw, gb;  // w laid out (out_d, in_d)

    Dense() = default;
    Dense(int in_d_, int out_d_);
    void init(Rng& rng);

    Tensor fwd(const Tensor& x) const;  // x: (n, in_d, 1, 1)
    Tensor bwd(const Tensor& x, const Tensor& dy, bool want_dx = true);
    Tensor bwd_data(const Tensor& dy) const;
};

struct MaxPool2x2 {
    struct Cache {
        std::vector<int> arg;  // flat input offset of each pooled max
        int n = 0, c = 0, h = 0, w = 0;
    };
    static Tensor fwd(const Tensor& x, Cache& cc);
    static Tensor bwd(const Tensor& dy, const Cache& cc);
};

Tensor global_avg_pool(const Tensor& x);
Tensor global_avg_pool_bwd(const Tensor& dy, int h, int w);

// Inverted dropout; the mask (0 or 1/(1-p)) is written to mask_out.
Tensor dropout_fwd(const Tensor& x, float p, Rng& rng, Tensor& mask_out);
Tensor dropout_bwd(const Tensor& dy, const Tensor& mask);

Tensor relu(const Tensor& x);
Tensor relu_bwd(const Tensor& x, const Tensor& dy);
Tensor leaky_relu(const Tensor& x, float slope);
Tensor leaky_relu_bwd(const Tensor& x, const Tensor& dy, float slope);
Tensor tanh_act(const Tensor& x);
Tensor tanh_bwd(const Tensor& y, const Tensor& dy);
Tensor sigmoid(const Tensor& x);
Tensor sigmoid_bwd(const Tensor& y, const Tensor& dy);
// In-place stable softmax over the channel axis of (n, c, 1, 1).
void softmax_rows(Tensor& logits);

struct Embedding {
    int num = 0, dim = 0;
    Tensor w, gw;  // (num, dim)

    Embedding() = default;
    Embedding(int num_, int dim_);
    void init(Rng& rng);  // uniform(-0.05, 0.05)
};

// Looks up `label` and reshapes the row to a single-channel (1,1,side,side)
// plane; side*side must equal the embedding dim.
Tensor embedding_plane(const Embedding& e, int label, int side);
void embedding_plane_bwd(Embedding& e, int label, const Tensor& dplane);

Tensor upsample_nearest(const Tensor& x, int factor);
Tensor upsample_nearest_bwd(const Tensor& dy, int factor);

struct Adam {
    double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    long t = 0;
    struct Slot {
        Tensor* p;
        Tensor* g;
        std::vector<float> m, v;
    };
    std::vector<Slot> slots;

    void add(Tensor& p, Tensor& g);
    void zero_grads();
    void step();
};

}  // namespace afx
