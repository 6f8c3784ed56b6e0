#include "afx/classifier.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "afx/checkpoint.hpp"
#include "afx/runtime.hpp"

namespace afx {

namespace {

constexpr float kLogEps = 1e-7f;

struct TrainPass {
    Tensor z1, y1, a1, z2, y2, a2, pooled, z3, y3, a3, z4, y4, a4, feats, logits, probs;
    BatchNorm2d::Cache c1, c2, c3, c4;
    MaxPool2x2::Cache pc;
};

void forward_train(ClassifierNet& net, const Tensor& x, TrainPass& tp, Scratch& sc) {
    tp.z1 = net.conv1.fwd(x, sc);
    tp.y1 = net.bn1.fwd_batch(tp.z1, tp.c1);
    tp.a1 = relu(tp.y1);
    tp.z2 = net.conv2.fwd(tp.a1, sc);
    tp.y2 = net.bn2.fwd_batch(tp.z2, tp.c2);
    tp.a2 = relu(tp.y2);
    tp.pooled = MaxPool2x2::fwd(tp.a2, tp.pc);
    tp.z3 = net.conv3.fwd(tp.pooled, sc);
    tp.y3 = net.bn3.fwd_batch(tp.z3, tp.c3);
    tp.a3 = relu(tp.y3);
    tp.z4 = net.conv4.fwd(tp.a3, sc);
    tp.y4 = net.bn4.fwd_batch(tp.z4, tp.c4);
    tp.a4 = relu(tp.y4);
    tp.feats = global_avg_pool(tp.a4);
    tp.logits = net.fc.fwd(tp.feats);
    tp.probs = tp.logits;
    softmax_rows(tp.probs);
}

void backward_train(ClassifierNet& net, const Tensor& x, TrainPass& tp,
                    const Tensor& dlogits, Scratch& sc) {
    Tensor dfeat = net.fc.bwd(tp.feats, dlogits);
    Tensor da4 = global_avg_pool_bwd(dfeat, tp.a4.h, tp.a4.w);
    Tensor dz4 = net.bn4.bwd_batch(relu_bwd(tp.y4, da4), tp.c4);
    Tensor da3 = net.conv4.bwd(tp.a3, dz4, sc);
    Tensor dz3 = net.bn3.bwd_batch(relu_bwd(tp.y3, da3), tp.c3);
    Tensor dpool = net.conv3.bwd(tp.pooled, dz3, sc);
    Tensor da2 = MaxPool2x2::bwd(dpool, tp.pc);
    Tensor dz2 = net.bn2.bwd_batch(relu_bwd(tp.y2, da2), tp.c2);
    Tensor da1 = net.conv2.bwd(tp.a1, dz2, sc);
    Tensor dz1 = net.bn1.bwd_batch(relu_bwd(tp.y1, da1), tp.c1);
    net.conv1.bwd(x, dz1, sc, /*want_dx=*/false);
}

}  // namespace

ClassifierNet::ClassifierNet()
    : conv1(1, 32, 3, 1, 1), conv2(32, 32, 3, 1, 1), conv3(32, 64, 3, 1, 1),
      conv4(64, 64, 3, 1, 1), bn1(32), bn2(32), bn3(64), bn4(64), fc(64, 2) {}

void ClassifierNet::init(Rng& rng) {
    conv1.init(rng);
    conv2.init(rng);
    conv3.init(rng);
    conv4.init(rng);
    fc.init(rng);
}

void ClassifierNet::collect(Adam& opt) {
    for (Conv2d* c : {&conv1, &conv2, &conv3, &conv4}) {
        opt.add(c->w, c->gw);
        opt.add(c->b, c->gb);
    }
    for (BatchNorm2d* b : {&bn1, &bn2, &bn3, &bn4}) {
        opt.add(b->gamma, b->ggamma);
        opt.add(b->beta, b->gbeta);
    }
    opt.add(fc.w, fc.gw);
    opt.add(fc.b, fc.gb);
}

std::string ClassifierNet::arch_descriptor() const {
    return "clf|conv3x3(1,32)bn-relu|conv3x3(32,32)bn-relu|maxpool2|"
           "conv3x3(32,64)bn-relu|conv3x3(64,64)bn-relu|gap|dense(64,2)softmax";
}

void TrainedClassifier::validate_input(const Tensor& x01) const {
    if (x01.c != 1 || x01.h != input_resolution || x01.w != input_resolution)
        throw ValidationError("classifier input must be (n,1," +
                              std::to_string(input_resolution) + "," +
                              std::to_string(input_resolution) + "), got " + x01.shape_str());
    for (float v : x01.v)
        if (!(v >= 0.0f && v <= 1.0f))
            throw ValidationError("classifier input values must lie in [0,1]");
}

void TrainedClassifier::forward_frozen(const Tensor& x01, FrozenPass& fp, Scratch& sc) const {
    const ClassifierNet& n = net;
    fp.x = x01;
    fp.y1 = n.bn1.fwd_frozen(n.conv1.fwd(x01, sc));
    fp.a1 = relu(fp.y1);
    fp.y2 = n.bn2.fwd_frozen(n.conv2.fwd(fp.a1, sc));
    fp.a2 = relu(fp.y2);
    fp.pooled = MaxPool2x2::fwd(fp.a2, fp.pc);
    fp.y3 = n.bn3.fwd_frozen(n.conv3.fwd(fp.pooled, sc));
    fp.a3 = relu(fp.y3);
    fp.y4 = n.bn4.fwd_frozen(n.conv4.fwd(fp.a3, sc));
    fp.a4 = relu(fp.y4);
    fp.feats = global_avg_pool(fp.a4);
    fp.logits = n.fc.fwd(fp.feats);
    fp.probs = fp.logits;
    softmax_rows(fp.probs);
}

Tensor TrainedClassifier::input_grad(const FrozenPass& fp, const Tensor& dlogits,
                                     const Tensor& dfeats, Scratch& sc) const {
    const ClassifierNet& n = net;
    Tensor dfeat(fp.feats.n, fp.feats.c, 1, 1);
    if (dlogits.numel() > 0) dfeat = n.fc.bwd_data(dlogits);
    if (dfeats.numel() > 0) axpy(1.0f, dfeats, dfeat);
    Tensor da4 = global_avg_pool_bwd(dfeat, fp.a4.h, fp.a4.w);
    Tensor dz4 = n.bn4.bwd_frozen_data(relu_bwd(fp.y4, da4));
    Tensor da3 = n.conv4.bwd_data(dz4, fp.a3.h, fp.a3.w, sc);
    Tensor dz3 = n.bn3.bwd_frozen_data(relu_bwd(fp.y3, da3));
    Tensor dpool = n.conv3.bwd_data(dz3, fp.pooled.h, fp.pooled.w, sc);
    Tensor da2 = MaxPool2x2::bwd(dpool, fp.pc);
    Tensor dz2 = n.bn2.bwd_frozen_data(relu_bwd(fp.y2, da2));
    Tensor da1 = n.conv2.bwd_data(dz2, fp.a1.h, fp.a1.w, sc);
    Tensor dz1 = n.bn1.bwd_frozen_data(relu_bwd(fp.y1, da1));
    return n.conv1.bwd_data(dz1, fp.x.h, fp.x.w, sc);
}

Tensor TrainedClassifier::predict(const Tensor& x01) const {
    validate_input(x01);
    FrozenPass fp;
    Scratch sc;
    forward_frozen(x01, fp, sc);
    if (!all_finite(fp.probs)) throw ValidationError("classifier produced non-finite output");
    return fp.probs;
}

Tensor TrainedClassifier::penultimate_features(const Tensor& x01) const {
    validate_input(x01);
    FrozenPass fp;
    Scratch sc;
    forward_frozen(x01, fp, sc);
    if (!all_finite(fp.feats)) throw ValidationError("classifier produced non-finite features");
    return fp.feats;
}

Tensor to_unit_range(const Tensor& pm1) {
    Tensor y = pm1;
    for (float& v : y.v) v = (v + 1.0f) * 0.5f;
    return y;
}

TrainedClassifier train_classifier(const LabeledImageSet& train, const LabeledImageSet& val,
                                   const ClassifierConfig& cfg,
                                   ClassifierTrainMetrics* metrics) {
    if (cfg.epochs < 1) throw ConfigError("classifier.epochs must be >= 1");
    if (cfg.batch_size < 1) throw ConfigError("classifier.batch_size must be >= 1");
    train.validate();
    val.validate();
    if (train.images.c != 1) throw ValidationError("classifier expects single-channel images");

    TrainedClassifier clf;
    clf.input_resolution = train.images.h;
    clf.class_names = train.class_names;
    Rng rng(cfg.seed);
    clf.net.init(rng);

    Adam opt;
    opt.lr = cfg.lr;
    opt.b1 = cfg.beta1;
    opt.b2 = cfg.beta2;
    opt.eps = cfg.eps;
    clf.net.collect(opt);

    const int n = train.images.n, r = train.images.h;
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    Scratch sc;
    TrainPass tp;
    const auto t0 = std::chrono::steady_clock::now();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int bs = std::min(cfg.batch_size, n - start);
            Tensor x(bs, 1, r, r);
            std::vector<uint8_t> yb(bs);
            for (int i = 0; i < bs; ++i) {
                const float* src = train.images.at(order[start + i]);
                float* dst = x.at(i);
                for (int q = 0; q < r * r; ++q) dst[q] = (src[q] + 1.0f) * 0.5f;
                yb[i] = train.labels[order[start + i]];
            }
            forward_train(clf.net, x, tp, sc);
            Tensor dlogits(bs, 2, 1, 1);
            double batch_loss = 0.0;
            for (int i = 0; i < bs; ++i) {
                const float* p = tp.probs.at(i);
                batch_loss += -std::log(std::max(p[yb[i]], kLogEps));
                dlogits.at(i)[0] = (p[0] - (yb[i] == 0 ? 1.0f : 0.0f)) / bs;
                dlogits.at(i)[1] = (p[1] - (yb[i] == 1 ? 1.0f : 0.0f)) / bs;
            }
            ensure_finite_loss(batch_loss, "classifier", epoch + 1, start);
            loss_sum += batch_loss;
            backward_train(clf.net, x, tp, dlogits, sc);
            opt.step();
            opt.zero_grads();
        }
        const double mean_loss = loss_sum / n;
        if (metrics) metrics->train_loss.push_back(mean_loss);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::fprintf(stderr, "[classifier] epoch %d/%d  loss %.4f  (%.0fs)\n", epoch + 1,
                     cfg.epochs, mean_loss, secs);
        std::fflush(stderr);
    }

    // Accuracy with frozen statistics on the held-out split.
    int correct = 0;
    const int vb = 64;
    for (int start = 0; start < val.images.n; start += vb) {
        const int bs = std::min(vb, val.images.n - start);
        Tensor x(bs, 1, r, r);
        for (int i = 0; i < bs; ++i) {
            const float* src = val.images.at(start + i);
            float* dst = x.at(i);
            for (int q = 0; q < r * r; ++q) dst[q] = (src[q] + 1.0f) * 0.5f;
        }
        Tensor probs = clf.predict(x);
        for (int i = 0; i < bs; ++i)
            if (argmax_class(probs.at(i)) == val.labels[start + i]) ++correct;
    }
    const double acc = val.images.n > 0 ? static_cast<double>(correct) / val.images.n : 0.0;
    if (metrics) {
        metrics->final_accuracy = acc;
        metrics->epochs = cfg.epochs;
    }
    std::fprintf(stderr, "[classifier] held-out accuracy %.4f\n", acc);
    return clf;
}

void ensure_finite_loss(double loss, const char* net_name, int epoch, int sample_index) {
    if (!std::isfinite(loss))
        throw TrainingFailure(std::string(net_name) + " loss non-finite at epoch " +
                              std::to_string(epoch) + ", sample " +
                              std::to_string(sample_index));
}

void save_classifier(const TrainedClassifier& clf, const std::filesystem::path& path) {
    TensorFile tf;
    tf.meta = {{"kind", "classifier"},
               {"arch_hash", arch_hash(clf.net.arch_descriptor())},
               {"input_resolution", clf.input_resolution},
               {"class_names", {clf.class_names[0], clf.class_names[1]}}};
    const ClassifierNet& n = clf.net;
    tf.put("conv1.w", n.conv1.w); tf.put("conv1.b", n.conv1.b);
    tf.put("conv2.w", n.conv2.w); tf.put("conv2.b", n.conv2.b);
    tf.put("conv3.w", n.conv3.w); tf.put("conv3.b", n.conv3.b);
    tf.put("conv4.w", n.conv4.w); tf.put("conv4.b", n.conv4.b);
    const BatchNorm2d* bns[4] = {&n.bn1, &n.bn2, &n.bn3, &n.bn4};
    for (int i = 0; i < 4; ++i) {
        const std::string p = "bn" + std::to_string(i + 1);
        tf.put(p + ".gamma", bns[i]->gamma);
        tf.put(p + ".beta", bns[i]->beta);
        tf.put_vec(p + ".run_mean", bns[i]->run_mean);
        tf.put_vec(p + ".run_var", bns[i]->run_var);
    }
    tf.put("fc.w", n.fc.w);
    tf.put("fc.b", n.fc.b);
    tf.save(path);
}

TrainedClassifier load_classifier(const std::filesystem::path& path) {
    TensorFile tf = TensorFile::load(path);
    TrainedClassifier clf;
    if (tf.meta.value("kind", "") != "classifier")
        throw ValidationError("not a classifier checkpoint: " + path.string());
    if (tf.meta.value("arch_hash", 0ull) != arch_hash(clf.net.arch_descriptor()))
        throw ValidationError("classifier architecture hash mismatch: " + path.string());
    clf.input_resolution = tf.meta.value("input_resolution", 128);
    if (tf.meta.contains("class_names")) {
        clf.class_names[0] = tf.meta["class_names"][0].get<std::string>();
        clf.class_names[1] = tf.meta["class_names"][1].get<std::string>();
    }
    ClassifierNet& n = clf.net;
    tf.get("conv1.w", n.conv1.w); tf.get("conv1.b", n.conv1.b);
    tf.get("conv2.w", n.conv2.w); tf.get("conv2.b", n.conv2.b);
    tf.get("conv3.w", n.conv3.w); tf.get("conv3.b", n.conv3.b);
    tf.get("conv4.w", n.conv4.w); tf.get("conv4.b", n.conv4.b);
    BatchNorm2d* bns[4] = {&n.bn1, &n.bn2, &n.bn3, &n.bn4};
    for (int i = 0; i < 4; ++i) {
        const std::string p = "bn" + std::to_string(i + 1);
        tf.get(p + ".gamma", bns[i]->gamma);
        tf.get(p + ".beta", bns[i]->beta);
        tf.get_vec(p + ".run_mean", bns[i]->run_mean);
        tf.get_vec(p + ".run_var", bns[i]->run_var);
    }
    tf.get("fc.w", n.fc.w);
    tf.get("fc.b", n.fc.b);
    return clf;
}

}  // namespace afx
