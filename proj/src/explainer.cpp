#include "afx/explainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <vector>

#include "afx/checkpoint.hpp"
#include "afx/image.hpp"
#include "afx/runtime.hpp"

namespace afx {

namespace {

Tensor sample_slice(const Tensor& set, int i) {
    Tensor x(1, set.c, set.h, set.w);
    std::copy(set.at(i), set.at(i) + x.numel(), x.v.begin());
    return x;
}

void scale_tensor(Tensor& t, float s) {
    for (float& v : t.v) v *= s;
}

void check_generator_input(const Tensor& x) {
    if (x.n != 1 || x.c != 1 || x.h != 128 || x.w != 128)
        throw ValidationError("explainer input must be (1,1,128,128), got " + x.shape_str());
    if (min_value(x) < -1.0f - 1e-6f || max_value(x) > 1.0f + 1e-6f)
        throw ValidationError("explainer input must be preprocessed to [-1,1]");
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

void ExplainerConfig::validate() const {
    if (batch_size != 1) throw ConfigError("gan.batch_size: the training scheme requires 1");
    if (epochs < 1) throw ConfigError("gan.epochs must be >= 1");
    if (lr_g <= 0 || lr_d <= 0) throw ConfigError("gan.lr_g / gan.lr_d must be > 0");
    if (lambda_adv < 0 || lambda_cls < 0 || lambda_sim < 0 || lambda_svm < 0)
        throw ConfigError("gan.lambdas must be >= 0");
}

double ExplainerConfig::effective_lambda_svm() const {
    return mode == ExplainerMode::counterfactual ? 0.0 : lambda_svm;
}

bool ExplainerConfig::boundary_term_active() const {
    return mode == ExplainerMode::alterfactual && use_boundary_loss &&
           effective_lambda_svm() > 0.0;
}

// ------------------------------------------------------------------ losses

double patch_real_loss(const Tensor& p) {
    double s = 0.0;
    for (float v : p.v) s -= std::log(std::max(static_cast<double>(v), kProbEps));
    return s / static_cast<double>(p.numel());
}

Tensor patch_real_loss_grad(const Tensor& p) {
    Tensor g(p.n, p.c, p.h, p.w);
    const double inv_n = 1.0 / static_cast<double>(p.numel());
    for (size_t i = 0; i < p.numel(); ++i)
        g.v[i] = static_cast<float>(-inv_n / std::max(static_cast<double>(p.v[i]), kProbEps));
    return g;
}

double patch_fake_loss(const Tensor& p) {
    double s = 0.0;
    for (float v : p.v) s -= std::log(std::max(1.0 - static_cast<double>(v), kProbEps));
    return s / static_cast<double>(p.numel());
}

Tensor patch_fake_loss_grad(const Tensor& p) {
    Tensor g(p.n, p.c, p.h, p.w);
    const double inv_n = 1.0 / static_cast<double>(p.numel());
    for (size_t i = 0; i < p.numel(); ++i)
        g.v[i] = static_cast<float>(inv_n / std::max(1.0 - static_cast<double>(p.v[i]), kProbEps));
    return g;
}

AdvLosses adversarial_losses(const DiscriminatorNet& d, const Tensor& x_real,
                             const Tensor& x_fake, int label_real, int label_fake) {
    Scratch sc;
    DiscriminatorNet::Pass pr, pf;
    const Tensor out_real = d.forward(x_real, label_real, pr, sc);
    const Tensor out_fake = d.forward(x_fake, label_fake, pf, sc);
    AdvLosses l;
    l.loss_g_adv = patch_real_loss(out_fake);
    l.loss_d = patch_real_loss(out_real) + patch_fake_loss(out_fake);
    return l;
}

int target_class(int decision, ExplainerMode mode) {
    if (decision != 0 && decision != 1) throw ValidationError("decision must be 0 or 1");
    return mode == ExplainerMode::alterfactual ? decision : 1 - decision;
}

double binary_cross_entropy(double p1, int target) {
    const double p = target == 1 ? p1 : 1.0 - p1;
    return -std::log(std::max(p, kProbEps));
}

double classification_loss(const TrainedClassifier& clf, const Tensor& x, const Tensor& xhat,
                           ExplainerMode mode) {
    const Tensor pred_x = clf.predict(to_unit_range(x));
    const int tgt = target_class(argmax_class(pred_x.data()), mode);
    const Tensor pred = clf.predict(to_unit_range(xhat));
    if (!all_finite(pred)) throw TrainingFailure("classifier produced non-finite probabilities");
    return binary_cross_entropy(pred.v[1], tgt);
}

double similarity_loss(const Tensor& x, const Tensor& xhat, ExplainerMode mode,
                       const SsimSpec& spec) {
    const double s = ssim(x, xhat, spec);
    return mode == ExplainerMode::alterfactual ? s : 1.0 - s;
}

double boundary_loss(const TrainedClassifier& clf, const HyperplaneSurrogate& surr,
                     const Tensor& x, const Tensor& xhat) {
    const Tensor fx = clf.penultimate_features(to_unit_range(x));
    const Tensor fh = clf.penultimate_features(to_unit_range(xhat));
    if (surr.dim() != fx.c)
        throw ValidationError("surrogate dimension " + std::to_string(surr.dim()) +
                              " does not match feature dimension " + std::to_string(fx.c));
    return std::abs(surr.distance(fx.data()) - surr.distance(fh.data()));
}

double total_generator_loss(const LossComponents& c, const ExplainerConfig& cfg) {
    const struct {
        const char* name;
        double v;
    } parts[] = {{"adversarial", c.adv}, {"classification", c.cls}, {"similarity", c.sim},
                 {"boundary", c.svm}};
    for (const auto& p : parts)
        if (!std::isfinite(p.v))
            throw TrainingFailure(std::string("non-finite ") + p.name + " loss component");
    double total = cfg.lambda_adv * c.adv + cfg.lambda_cls * c.cls + cfg.lambda_sim * c.sim;
    if (cfg.mode == ExplainerMode::alterfactual) total += cfg.lambda_svm * c.svm;
    return total;
}

// ---------------------------------------------------------------- training

ExplainerModel train_explainer(const TrainedClassifier& clf, const HyperplaneSurrogate* surr,
                               const LabeledImageSet& train_set, const ExplainerConfig& cfg,
                               const std::filesystem::path& run_dir) {
    cfg.validate();
    train_set.validate();
    const int n = train_set.images.n;
    if (n < 1) throw ValidationError("explainer training set is empty");
    if (train_set.images.c != 1 || train_set.images.h != 128 || train_set.images.w != 128)
        throw ValidationError("explainer training images must be (*,1,128,128), got " +
                              train_set.images.shape_str());
    const bool svm_on = cfg.boundary_term_active();
    if (cfg.mode == ExplainerMode::alterfactual && cfg.use_boundary_loss && surr == nullptr)
        throw ValidationError("alterfactual training with the boundary loss needs a surrogate");
    if (svm_on && surr->dim() != 64)
        throw ValidationError("surrogate dimension must match the 64-dim feature space");

    ExplainerModel m;
    m.mode = cfg.mode;
    m.cfg = cfg;
    Rng init_rng(cfg.seed);
    m.gen.init(init_rng);
    m.disc.init(init_rng);

    Adam opt_g, opt_d;
    opt_g.lr = cfg.lr_g;
    opt_d.lr = cfg.lr_d;
    for (Adam* o : {&opt_g, &opt_d}) {
        o->b1 = cfg.beta1;
        o->b2 = cfg.beta2;
        o->eps = cfg.adam_eps;
    }
    m.gen.collect(opt_g);
    m.disc.collect(opt_d);

    // The classifier is frozen, so its decision on each original (and the
    // original's boundary distance) never changes during training.
    std::vector<int> decision(n);
    std::vector<double> dist_orig(svm_on ? n : 0);
    {
        Scratch sc;
        TrainedClassifier::FrozenPass fp;
        for (int i = 0; i < n; ++i) {
            const Tensor x01 = to_unit_range(sample_slice(train_set.images, i));
            clf.forward_frozen(x01, fp, sc);
            decision[i] = argmax_class(fp.probs.data());
            if (svm_on) dist_orig[i] = surr->distance(fp.feats.data());
        }
    }

    Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);  // shuffling + dropout noise
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;

    const int n_grid = std::min(8, n);
    Scratch sc;
    const auto t_start = std::chrono::steady_clock::now();
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double sum_d = 0, sum_total = 0;
        LossComponents sums;
        const auto t_epoch = std::chrono::steady_clock::now();
        for (int step = 0; step < n; ++step) {
            const int idx = order[step];
            const Tensor x = sample_slice(train_set.images, idx);
            const int tgt = target_class(decision[idx], cfg.mode);

            // Discriminator, real pair (x, decision on x).
            opt_d.zero_grads();
            DiscriminatorNet::Pass dp_real;
            m.disc.forward(x, decision[idx], dp_real, sc);
            const double l_d_real = patch_real_loss(dp_real.out);
            m.disc.backward(patch_real_loss_grad(dp_real.out), dp_real, sc);
            opt_d.step();

            // Discriminator, fake pair (G(x,z), target class).
            GeneratorNet::Pass gp;
            const Tensor xhat = m.gen.forward(x, rng, gp, sc);
            opt_d.zero_grads();
            DiscriminatorNet::Pass dp_fake;
            m.disc.forward(xhat, tgt, dp_fake, sc);
            const double l_d_fake = patch_fake_loss(dp_fake.out);
            m.disc.backward(patch_fake_loss_grad(dp_fake.out), dp_fake, sc);
            opt_d.step();
            ensure_finite_loss(l_d_real + l_d_fake, "discriminator", epoch, step);

            // Generator step against the just-updated discriminator.
            opt_g.zero_grads();
            LossComponents comp;
            DiscriminatorNet::Pass dp_g;
            m.disc.forward(xhat, tgt, dp_g, sc);
            comp.adv = patch_real_loss(dp_g.out);
            Tensor dadv = patch_real_loss_grad(dp_g.out);
            scale_tensor(dadv, static_cast<float>(cfg.lambda_adv));
            Tensor dxhat = m.disc.backward_data(dadv, dp_g, sc);

            // Classification (and boundary) gradients share one frozen pass.
            TrainedClassifier::FrozenPass fp;
            clf.forward_frozen(to_unit_range(xhat), fp, sc);
            if (!all_finite(fp.probs))
                throw TrainingFailure("classifier produced non-finite probabilities at epoch " +
                                      std::to_string(epoch) + " step " + std::to_string(step));
            comp.cls = binary_cross_entropy(fp.probs.v[1], tgt);
            Tensor dlogits(1, 2, 1, 1);
            dlogits.v[0] = fp.probs.v[0] - (tgt == 0 ? 1.0f : 0.0f);
            dlogits.v[1] = fp.probs.v[1] - (tgt == 1 ? 1.0f : 0.0f);
            scale_tensor(dlogits, static_cast<float>(cfg.lambda_cls));
            Tensor dfeats;
            if (svm_on) {
                const double dist = surr->distance(fp.feats.data());
                comp.svm = std::abs(dist - dist_orig[idx]);
                const double sgn = dist > dist_orig[idx] ? 1.0 : (dist < dist_orig[idx] ? -1.0 : 0.0);
                dfeats = Tensor(1, 64, 1, 1);
                surr->distance_grad(fp.feats.data(), dfeats.data());
                scale_tensor(dfeats, static_cast<float>(sgn * cfg.effective_lambda_svm()));
            }
            // [0,1] classifier domain back to the generator's [-1,1].
            Tensor dunit = clf.input_grad(fp, dlogits, dfeats, sc);
            axpy(0.5f, dunit, dxhat);

            Tensor dssim;
            const double s = ssim_with_grad(x, xhat, cfg.ssim, dssim);
            comp.sim = cfg.mode == ExplainerMode::alterfactual ? s : 1.0 - s;
            const float sim_sign = cfg.mode == ExplainerMode::alterfactual ? 1.0f : -1.0f;
            axpy(sim_sign * static_cast<float>(cfg.lambda_sim), dssim, dxhat);

            const double total = total_generator_loss(comp, cfg);
            m.gen.backward(dxhat, gp, sc);
            opt_g.step();

            sum_d += l_d_real + l_d_fake;
            sum_total += total;
            sums.adv += comp.adv;
            sums.cls += comp.cls;
            sums.sim += comp.sim;
            sums.svm += comp.svm;
            if ((step + 1) % 1000 == 0)
                std::fprintf(stderr,
                             "[explainer/%s] epoch %d/%d step %d/%d d=%.4f g=%.4f (%.0fs)\n",
                             mode_name(cfg.mode), epoch, cfg.epochs, step + 1, n,
                             sum_d / (step + 1), sum_total / (step + 1), elapsed_s(t_start));
        }
        m.epoch = epoch;
        {
            std::ostringstream os;
            os << rng.g;
            m.rng_state = os.str();
        }
        std::fprintf(stderr,
                     "[explainer/%s] epoch %d/%d done d=%.4f g=%.4f adv=%.4f cls=%.4f "
                     "sim=%.4f svm=%.4f (%.0fs)\n",
                     mode_name(cfg.mode), epoch, cfg.epochs, sum_d / n, sum_total / n,
                     sums.adv / n, sums.cls / n, sums.sim / n, sums.svm / n, elapsed_s(t_epoch));

        if (!run_dir.empty()) {
            save_explainer(m, run_dir / (std::string("explainer_") + mode_name(cfg.mode) +
                                         ".ckpt"));
            std::filesystem::create_directories(run_dir / "samples");
            std::vector<Tensor> tiles;
            for (int i = 0; i < n_grid; ++i) tiles.push_back(sample_slice(train_set.images, i));
            for (int i = 0; i < n_grid; ++i)
                tiles.push_back(generate_image(m, tiles[i], cfg.seed * 1000003ull + i));
            const Tensor grid = compose_grid(tiles, 2, n_grid);
            write_gray_image(run_dir / "samples" / ("epoch_" + std::to_string(epoch) + ".png"),
                             grid.data(), grid.h, grid.w, -1.0f, 1.0f);
        }
    }
    return m;
}

// -------------------------------------------------------------- generation

Tensor generate_image(const ExplainerModel& model, const Tensor& x, uint64_t seed) {
    check_generator_input(x);
    Rng rng(seed);
    GeneratorNet::Pass gp;
    Scratch sc;
    return model.gen.forward(x, rng, gp, sc);
}

ExplanationRecord generate(const ExplainerModel& model, const TrainedClassifier& clf,
                           const HyperplaneSurrogate& surr, const Tensor& x, uint64_t seed,
                           const SsimSpec& spec) {
    const Tensor xhat = generate_image(model, x, seed);
    ExplanationRecord r;
    const Tensor pred_orig = clf.predict(to_unit_range(x));
    const Tensor pred_expl = clf.predict(to_unit_range(xhat));
    r.pred_orig = {pred_orig.v[0], pred_orig.v[1]};
    r.pred_expl = {pred_expl.v[0], pred_expl.v[1]};
    r.target_class = target_class(argmax_class(pred_orig.data()), model.mode);
    r.valid = argmax_class(pred_expl.data()) == r.target_class;
    r.ssim_val = ssim(x, xhat, spec);
    r.dist_orig = surr.distance(clf.penultimate_features(to_unit_range(x)).data());
    r.dist_expl = surr.distance(clf.penultimate_features(to_unit_range(xhat)).data());
    return r;
}

// ------------------------------------------------------------- persistence

namespace {

std::string combined_arch(const ExplainerModel& m) {
    return m.gen.arch_descriptor() + "+" + m.disc.arch_descriptor();
}

void put_conv(TensorFile& tf, const std::string& name, const Conv2d& c) {
    tf.put(name + ".w", c.w);
    tf.put(name + ".b", c.b);
}
void get_conv(const TensorFile& tf, const std::string& name, Conv2d& c) {
    tf.get(name + ".w", c.w);
    tf.get(name + ".b", c.b);
}
void put_convt(TensorFile& tf, const std::string& name, const ConvTranspose2d& c) {
    tf.put(name + ".w", c.w);
    tf.put(name + ".b", c.b);
}
void get_convt(const TensorFile& tf, const std::string& name, ConvTranspose2d& c) {
    tf.get(name + ".w", c.w);
    tf.get(name + ".b", c.b);
}
void put_bn(TensorFile& tf, const std::string& name, const BatchNorm2d& b) {
    tf.put(name + ".gamma", b.gamma);
    tf.put(name + ".beta", b.beta);
}
void get_bn(const TensorFile& tf, const std::string& name, BatchNorm2d& b) {
    tf.get(name + ".gamma", b.gamma);
    tf.get(name + ".beta", b.beta);
}

nlohmann::json config_json(const ExplainerConfig& c) {
    return {{"mode", mode_name(c.mode)},
            {"batch_size", c.batch_size},
            {"epochs", c.epochs},
            {"lr_g", c.lr_g},
            {"lr_d", c.lr_d},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"adam_eps", c.adam_eps},
            {"lambda_adv", c.lambda_adv},
            {"lambda_cls", c.lambda_cls},
            {"lambda_sim", c.lambda_sim},
            {"lambda_svm", c.lambda_svm},
            {"use_boundary_loss", c.use_boundary_loss},
            {"seed", c.seed},
            {"ssim",
             {{"window", c.ssim.window},
              {"sigma", c.ssim.sigma},
              {"k1", c.ssim.k1},
              {"k2", c.ssim.k2},
              {"data_range", c.ssim.data_range}}}};
}

ExplainerConfig config_from_json(const nlohmann::json& j) {
    ExplainerConfig c;
    c.mode = parse_mode(j.at("mode").get<std::string>());
    c.batch_size = j.at("batch_size").get<int>();
    c.epochs = j.at("epochs").get<int>();
    c.lr_g = j.at("lr_g").get<double>();
    c.lr_d = j.at("lr_d").get<double>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.adam_eps = j.at("adam_eps").get<double>();
    c.lambda_adv = j.at("lambda_adv").get<double>();
    c.lambda_cls = j.at("lambda_cls").get<double>();
    c.lambda_sim = j.at("lambda_sim").get<double>();
    c.lambda_svm = j.at("lambda_svm").get<double>();
    c.use_boundary_loss = j.at("use_boundary_loss").get<bool>();
    c.seed = j.at("seed").get<uint64_t>();
    const auto& s = j.at("ssim");
    c.ssim.window = s.at("window").get<int>();
    c.ssim.sigma = s.at("sigma").get<double>();
    c.ssim.k1 = s.at("k1").get<double>();
    c.ssim.k2 = s.at("k2").get<double>();
    c.ssim.data_range = s.at("data_range").get<double>();
    return c;
}

}  // namespace

void save_explainer(const ExplainerModel& m, const std::filesystem::path& path) {
    TensorFile tf;
    tf.meta["kind"] = "explainer";
    tf.meta["mode"] = mode_name(m.mode);
    tf.meta["epoch"] = m.epoch;
    tf.meta["arch"] = arch_hash(combined_arch(m));
    tf.meta["config"] = config_json(m.cfg);
    tf.meta["rng_state"] = m.rng_state;
    for (int i = 0; i < GeneratorNet::kStages; ++i) {
        put_conv(tf, "gen.enc" + std::to_string(i), m.gen.enc[i]);
        put_convt(tf, "gen.dec" + std::to_string(i), m.gen.dec[i]);
    }
    for (int i = 0; i < 5; ++i) put_bn(tf, "gen.enc_bn" + std::to_string(i), m.gen.enc_bn[i]);
    for (int i = 0; i < 6; ++i) put_bn(tf, "gen.dec_bn" + std::to_string(i), m.gen.dec_bn[i]);
    tf.put("disc.embed.w", m.disc.embed.w);
    put_conv(tf, "disc.conv1", m.disc.conv1);
    put_conv(tf, "disc.conv2", m.disc.conv2);
    put_conv(tf, "disc.conv3", m.disc.conv3);
    put_conv(tf, "disc.conv4", m.disc.conv4);
    put_bn(tf, "disc.bn2", m.disc.bn2);
    put_bn(tf, "disc.bn3", m.disc.bn3);
    tf.save(path);
}

ExplainerModel load_explainer(const std::filesystem::path& path) {
    const TensorFile tf = TensorFile::load(path);
    if (tf.meta.value("kind", "") != "explainer")
        throw ValidationError(path.string() + " is not an explainer checkpoint");
    ExplainerModel m;
    m.cfg = config_from_json(tf.meta.at("config"));
    m.mode = parse_mode(tf.meta.at("mode").get<std::string>());
    m.epoch = tf.meta.at("epoch").get<int>();
    m.rng_state = tf.meta.value("rng_state", "");
    if (tf.meta.at("arch").get<uint64_t>() != arch_hash(combined_arch(m)))
        throw ValidationError(path.string() + ": architecture hash mismatch");
    for (int i = 0; i < GeneratorNet::kStages; ++i) {
        get_conv(tf, "gen.enc" + std::to_string(i), m.gen.enc[i]);
        get_convt(tf, "gen.dec" + std::to_string(i), m.gen.dec[i]);
    }
    for (int i = 0; i < 5; ++i) get_bn(tf, "gen.enc_bn" + std::to_string(i), m.gen.enc_bn[i]);
    for (int i = 0; i < 6; ++i) get_bn(tf, "gen.dec_bn" + std::to_string(i), m.gen.dec_bn[i]);
    tf.get("disc.embed.w", m.disc.embed.w);
    get_conv(tf, "disc.conv1", m.disc.conv1);
    get_conv(tf, "disc.conv2", m.disc.conv2);
    get_conv(tf, "disc.conv3", m.disc.conv3);
    get_conv(tf, "disc.conv4", m.disc.conv4);
    get_bn(tf, "disc.bn2", m.disc.bn2);
    get_bn(tf, "disc.bn3", m.disc.bn3);
    return m;
}

}  // namespace afx
