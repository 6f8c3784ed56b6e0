#include "afx/gan.hpp"

#include <sstream>

#include "afx/runtime.hpp"

namespace afx {

// ------------------------------------------------------------ GeneratorNet

GeneratorNet::GeneratorNet() {
    int in_c = 1;
    for (int i = 0; i < kStages; ++i) {
        enc[i] = Conv2d(in_c, kEncFilters[i], 4, 2, 1);
        if (i >= 1 && i <= 5) enc_bn[i - 1] = BatchNorm2d(kEncFilters[i]);
        in_c = kEncFilters[i];
    }
    for (int j = 0; j < kStages; ++j) {
        // Decoder stage j consumes the previous decoder output concatenated
        // with the activation of encoder stage 6-j (none at the bottleneck).
        const int cin = j == 0 ? kEncFilters[6] : kDecFilters[j - 1] + kEncFilters[6 - j];
        dec[j] = ConvTranspose2d(cin, kDecFilters[j], 4, 2, 1);
        if (j < 6) dec_bn[j] = BatchNorm2d(kDecFilters[j]);
    }
}

void GeneratorNet::init(Rng& rng) {
    for (auto& c : enc) c.init(rng);
    for (auto& d : dec) d.init(rng);
}

void GeneratorNet::collect(Adam& opt) {
    for (auto& c : enc) {
        opt.add(c.w, c.gw);
        opt.add(c.b, c.gb);
    }
    for (auto& b : enc_bn) {
        opt.add(b.gamma, b.ggamma);
        opt.add(b.beta, b.gbeta);
    }
    for (auto& d : dec) {
        opt.add(d.w, d.gw);
        opt.add(d.b, d.gb);
    }
    for (auto& b : dec_bn) {
        opt.add(b.gamma, b.ggamma);
        opt.add(b.beta, b.gbeta);
    }
}

std::string GeneratorNet::arch_descriptor() const {
    std::ostringstream os;
    os << "gen|enc4x4s2:";
    for (int f : kEncFilters) os << f << ",";
    os << "bn2-6|dec4x4s2:";
    for (int f : kDecFilters) os << f << ",";
    os << "bn1-6,drop1-3|skip-concat|tanh";
    return os.str();
}

Tensor GeneratorNet::forward(const Tensor& x, Rng& noise, Pass& gp, Scratch& sc) const {
    if (x.n != 1 || x.c != 1 || x.h != 128 || x.w != 128)
        throw ValidationError("generator input must be (1,1,128,128), got " + x.shape_str());
    gp.e_x = x;
    for (int i = 0; i < kStages; ++i) {
        const Tensor& in = i == 0 ? gp.e_x : gp.e_a[i - 1];
        Tensor z = enc[i].fwd(in, sc);
        gp.e_y[i] = (i >= 1 && i <= 5) ? enc_bn[i - 1].fwd_batch_stats(z, gp.e_bnc[i - 1])
                                       : std::move(z);
        gp.e_a[i] = i == 6 ? relu(gp.e_y[i]) : leaky_relu(gp.e_y[i], kLeakySlope);
    }
    gp.d_in[0] = gp.e_a[6];
    for (int j = 0; j < kStages; ++j) {
        Tensor z = dec[j].fwd(gp.d_in[j], sc);
        Tensor y = j < 6 ? dec_bn[j].fwd_batch_stats(z, gp.d_bnc[j]) : std::move(z);
        gp.d_drop[j] = j < 3 ? dropout_fwd(y, kDropP, noise, gp.d_mask[j]) : std::move(y);
        gp.d_a[j] = j == 6 ? tanh_act(gp.d_drop[j]) : relu(gp.d_drop[j]);
        if (j < 6) gp.d_in[j + 1] = concat_channels(gp.d_a[j], gp.e_a[5 - j]);
    }
    return gp.d_a[6];
}

void GeneratorNet::backward(const Tensor& dxhat, Pass& gp, Scratch& sc) {
    std::array<Tensor, 6> skip_grad;
    Tensor dd = dxhat;
    Tensor d_bottleneck;
    for (int j = kStages - 1; j >= 0; --j) {
        Tensor dpre = j == 6 ? tanh_bwd(gp.d_a[6], dd) : relu_bwd(gp.d_drop[j], dd);
        if (j < 3) dpre = dropout_bwd(dpre, gp.d_mask[j]);
        Tensor dz = j < 6 ? dec_bn[j].bwd_batch(dpre, gp.d_bnc[j]) : std::move(dpre);
        Tensor din = dec[j].bwd(gp.d_in[j], dz, sc);
        if (j > 0) {
            Tensor da(1, kDecFilters[j - 1], din.h, din.w);
            Tensor dskip(1, din.c - kDecFilters[j - 1], din.h, din.w);
            split_channels(din, da, dskip);
            skip_grad[6 - j] = std::move(dskip);
            dd = std::move(da);
        } else {
            d_bottleneck = std::move(din);
        }
    }
    Tensor de = std::move(d_bottleneck);
    for (int i = kStages - 1; i >= 0; --i) {
        Tensor dpre = i == 6 ? relu_bwd(gp.e_y[6], de) : leaky_relu_bwd(gp.e_y[i], de, kLeakySlope);
        Tensor dz = (i >= 1 && i <= 5) ? enc_bn[i - 1].bwd_batch(dpre, gp.e_bnc[i - 1])
                                       : std::move(dpre);
        const Tensor& in = i == 0 ? gp.e_x : gp.e_a[i - 1];
        Tensor din = enc[i].bwd(in, dz, sc, /*want_dx=*/i > 0);
        if (i > 0) {
            de = std::move(din);
            axpy(1.0f, skip_grad[i - 1], de);
        }
    }
}

// -------------------------------------------------------- DiscriminatorNet

DiscriminatorNet::DiscriminatorNet()
    : embed(2, 64), conv1(2, 64, 4, 2, 1), conv2(64, 128, 4, 2, 1),
      conv3(128, 256, 4, 2, 1), conv4(256, 1, 4, 2, 1), bn2(128), bn3(256) {}

void DiscriminatorNet::init(Rng& rng) {
    embed.init(rng);
    conv1.init(rng);
    conv2.init(rng);
    conv3.init(rng);
    conv4.init(rng);
}

void DiscriminatorNet::collect(Adam& opt) {
    opt.add(embed.w, embed.gw);
    for (Conv2d* c : {&conv1, &conv2, &conv3, &conv4}) {
        opt.add(c->w, c->gw);
        opt.add(c->b, c->gb);
    }
    for (BatchNorm2d* b : {&bn2, &bn3}) {
        opt.add(b->gamma, b->ggamma);
        opt.add(b->beta, b->gbeta);
    }
}

std::string DiscriminatorNet::arch_descriptor() const {
    return "disc|embed(2,64)->8x8->up16|conv4x4s2:64,128,256,1|bn:2,3|sigmoid-patch8";
}

Tensor DiscriminatorNet::forward(const Tensor& image, int label, Pass& dp, Scratch& sc) const {
    if (image.n != 1 || image.c != 1 || image.h != 128 || image.w != 128)
        throw ValidationError("discriminator image must be (1,1,128,128), got " +
                              image.shape_str());
    if (label != 0 && label != 1) throw ValidationError("discriminator label must be 0 or 1");
    dp.label = label;
    const Tensor lbl = upsample_nearest(embedding_plane(embed, label, 8), 16);
    dp.input = concat_channels(image, lbl);
    dp.z1 = conv1.fwd(dp.input, sc);
    dp.a1 = leaky_relu(dp.z1, 0.2f);
    dp.y2 = bn2.fwd_batch_stats(conv2.fwd(dp.a1, sc), dp.c2);
    dp.a2 = leaky_relu(dp.y2, 0.2f);
    dp.y3 = bn3.fwd_batch_stats(conv3.fwd(dp.a2, sc), dp.c3);
    dp.a3 = leaky_relu(dp.y3, 0.2f);
    dp.out = sigmoid(conv4.fwd(dp.a3, sc));
    return dp.out;
}

void DiscriminatorNet::backward(const Tensor& dprob, Pass& dp, Scratch& sc) {
    Tensor dz4 = sigmoid_bwd(dp.out, dprob);
    Tensor da3 = conv4.bwd(dp.a3, dz4, sc);
    Tensor dz3 = bn3.bwd_batch(leaky_relu_bwd(dp.y3, da3, 0.2f), dp.c3);
    Tensor da2 = conv3.bwd(dp.a2, dz3, sc);
    Tensor dz2 = bn2.bwd_batch(leaky_relu_bwd(dp.y2, da2, 0.2f), dp.c2);
    Tensor da1 = conv2.bwd(dp.a1, dz2, sc);
    Tensor dz1 = leaky_relu_bwd(dp.z1, da1, 0.2f);
    Tensor dinput = conv1.bwd(dp.input, dz1, sc);
    Tensor dimg(1, 1, 128, 128), dlbl(1, 1, 128, 128);
    split_channels(dinput, dimg, dlbl);
    embedding_plane_bwd(embed, dp.label, upsample_nearest_bwd(dlbl, 16));
}

Tensor DiscriminatorNet::backward_data(const Tensor& dprob, const Pass& dp, Scratch& sc) const {
    Tensor dz4 = sigmoid_bwd(dp.out, dprob);
    Tensor da3 = conv4.bwd_data(dz4, dp.a3.h, dp.a3.w, sc);
    Tensor dz3 = bn3.bwd_batch_data(leaky_relu_bwd(dp.y3, da3, 0.2f), dp.c3);
    Tensor da2 = conv3.bwd_data(dz3, dp.a2.h, dp.a2.w, sc);
    Tensor dz2 = bn2.bwd_batch_data(leaky_relu_bwd(dp.y2, da2, 0.2f), dp.c2);
    Tensor da1 = conv2.bwd_data(dz2, dp.a1.h, dp.a1.w, sc);
    Tensor dz1 = leaky_relu_bwd(dp.z1, da1, 0.2f);
    Tensor dinput = conv1.bwd_data(dz1, dp.input.h, dp.input.w, sc);
    Tensor dimg(1, 1, 128, 128), dlbl(1, 1, 128, 128);
    split_channels(dinput, dimg, dlbl);
    return dimg;
}

}  // namespace afx
