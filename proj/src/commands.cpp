#include "afx/commands.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>

#include "afx/checkpoint.hpp"
#include "afx/image.hpp"
#include "afx/report.hpp"
#include "afx/runtime.hpp"

namespace afx {

namespace {

LabeledImageSet load_split(const ExperimentConfig& cfg, Split split) {
    return preprocess(load_binary_subset(cfg.data, split), cfg.prep);
}

std::filesystem::path classifier_path(const ExperimentConfig& cfg) {
    return cfg.run_dir / "classifier.ckpt";
}
std::filesystem::path surrogate_path(const ExperimentConfig& cfg) {
    return cfg.run_dir / "surrogate.bin";
}
std::filesystem::path explainer_path(const ExperimentConfig& cfg) {
    return cfg.run_dir / (std::string("explainer_") + mode_name(cfg.gan.mode) + ".ckpt");
}

Tensor sample_slice(const Tensor& set, int i) {
    Tensor x(1, set.c, set.h, set.w);
    std::copy(set.at(i), set.at(i) + x.numel(), x.v.begin());
    return x;
}

}  // namespace

uint64_t eval_seed(uint64_t base, int index) {
    return base + 0x9e3779b9ull * (static_cast<uint64_t>(index) + 1);
}

int cmd_train_classifier(const ExperimentConfig& cfg) {
    const LabeledImageSet train = load_split(cfg, Split::train);
    const LabeledImageSet test = load_split(cfg, Split::test);
    ClassifierTrainMetrics metrics;
    TrainedClassifier clf = train_classifier(train, test, cfg.classifier, &metrics);
    clf.class_names = train.class_names;
    std::filesystem::create_directories(cfg.run_dir);
    save_classifier(clf, classifier_path(cfg));

    nlohmann::json j{{"final_accuracy", metrics.final_accuracy},
                     {"epochs", metrics.epochs},
                     {"train_loss", metrics.train_loss},
                     {"classes", {train.class_names[0], train.class_names[1]}},
                     {"seed", cfg.classifier.seed}};
    atomic_write_bytes(cfg.run_dir / "classifier_metrics.json", j.dump(2) + "\n");
    std::printf("test_accuracy=%.4f\n", metrics.final_accuracy);
    return kExitOk;
}

int cmd_fit_svm(const ExperimentConfig& cfg) {
    const TrainedClassifier clf = load_classifier(classifier_path(cfg));
    const LabeledImageSet train = load_split(cfg, Split::train);
    const int n = train.images.n;

    Tensor feats(n, 64, 1, 1);
    std::vector<uint8_t> decisions(n);
    Scratch sc;
    TrainedClassifier::FrozenPass fp;
    const int bs = 64;
    for (int at = 0; at < n; at += bs) {
        const int b = std::min(bs, n - at);
        Tensor x01(b, train.images.c, train.images.h, train.images.w);
        std::copy(train.images.at(at), train.images.at(at) + x01.numel(), x01.v.begin());
        for (float& v : x01.v) v = (v + 1.0f) * 0.5f;
        clf.forward_frozen(x01, fp, sc);
        for (int i = 0; i < b; ++i) {
            std::copy(fp.feats.at(i), fp.feats.at(i) + 64, feats.at(at + i));
            decisions[at + i] = static_cast<uint8_t>(argmax_class(fp.probs.at(i)));
        }
    }

    const HyperplaneSurrogate surr = fit_surrogate(feats, decisions, cfg.svm);
    std::filesystem::create_directories(cfg.run_dir);
    save_surrogate(surr, surrogate_path(cfg));
    std::printf("agreement=%.4f\n", surr.fit_agreement);
    return kExitOk;
}

int cmd_train_explainer(const ExperimentConfig& cfg) {
    const TrainedClassifier clf = load_classifier(classifier_path(cfg));
    ExplainerConfig gcfg = cfg.gan;
    if (gcfg.mode == ExplainerMode::counterfactual && gcfg.lambda_svm != 0.0) {
        std::fprintf(stderr,
                     "warning: the boundary loss has no effect in counterfactual mode; "
                     "lambda_svm coerced from %g to 0\n",
                     gcfg.lambda_svm);
        gcfg.lambda_svm = 0.0;
    }
    HyperplaneSurrogate surr;
    const HyperplaneSurrogate* surr_ptr = nullptr;
    if (gcfg.mode == ExplainerMode::alterfactual && gcfg.use_boundary_loss) {
        surr = load_surrogate(surrogate_path(cfg));
        surr_ptr = &surr;
    }
    const LabeledImageSet train = load_split(cfg, Split::train);
    std::filesystem::create_directories(cfg.run_dir);
    train_explainer(clf, surr_ptr, train, gcfg, cfg.run_dir);
    return kExitOk;
}

int cmd_evaluate(const ExperimentConfig& cfg) {
    const TrainedClassifier clf = load_classifier(classifier_path(cfg));
    const ExplainerModel model = load_explainer(explainer_path(cfg));
    if (model.mode != cfg.gan.mode)
        throw ValidationError("checkpoint mode does not match configured gan.mode");
    const HyperplaneSurrogate surr = load_surrogate(surrogate_path(cfg));
    const LabeledImageSet eval_set = load_split(cfg, cfg.eval_split);

    const int n = eval_set.images.n;
    Tensor xhats(n, 1, eval_set.images.h, eval_set.images.w);
    for (int i = 0; i < n; ++i) {
        const Tensor xhat =
            generate_image(model, sample_slice(eval_set.images, i), eval_seed(cfg.gan.seed, i));
        std::copy(xhat.v.begin(), xhat.v.end(), xhats.at(i));
        if ((i + 1) % 250 == 0)
            std::fprintf(stderr, "[evaluate] generated %d/%d\n", i + 1, n);
    }
    const EvaluationReport rep =
        evaluate(clf, surr, eval_set.images, xhats, model.mode, cfg.gan.ssim);
    write_report_json(rep, cfg.run_dir / "report.json");
    write_report_csv(rep, cfg.run_dir / "report.csv");
    std::printf("%s\n", report_summary_line(rep).c_str());
    return kExitOk;
}

std::vector<Tensor> interpolation_frames(const Tensor& x, const Tensor& xhat, int steps) {
    if (steps < 2) throw ValidationError("render steps must be >= 2");
    if (!x.same_shape(xhat)) throw ValidationError("interpolation endpoints differ in shape");
    std::vector<Tensor> frames;
    frames.reserve(steps);
    for (int k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) / (steps - 1);
        Tensor f(x.n, x.c, x.h, x.w);
        for (size_t q = 0; q < x.numel(); ++q)
            f.v[q] = static_cast<float>((1.0 - t) * x.v[q] + t * xhat.v[q]);
        frames.push_back(std::move(f));
    }
    return frames;
}

int cmd_render(const ExperimentConfig& cfg, const RenderOptions& opts) {
    if (opts.steps < 2) throw ValidationError("render steps must be >= 2");
    if (opts.count < 1) throw ValidationError("render count must be >= 1");
    const ExplainerModel model = load_explainer(explainer_path(cfg));
    const LabeledImageSet eval_set = load_split(cfg, cfg.eval_split);
    const int count = std::min(opts.count, eval_set.images.n);

    const std::filesystem::path out = cfg.run_dir / "render";
    std::filesystem::create_directories(out);
    std::vector<Tensor> originals, explanations;
    for (int i = 0; i < count; ++i) {
        originals.push_back(sample_slice(eval_set.images, i));
        explanations.push_back(generate_image(model, originals[i], eval_seed(cfg.gan.seed, i)));
        const auto frames = interpolation_frames(originals[i], explanations[i], opts.steps);
        const Tensor strip = compose_grid(frames, 1, opts.steps);
        write_gray_image(out / ("strip_" + std::to_string(i) + ".png"), strip.data(), strip.h,
                         strip.w, -1.0f, 1.0f);
    }
    std::vector<Tensor> tiles = originals;
    tiles.insert(tiles.end(), explanations.begin(), explanations.end());
    const Tensor grid = compose_grid(tiles, 2, count);
    write_gray_image(out / "grid.png", grid.data(), grid.h, grid.w, -1.0f, 1.0f);
    std::printf("rendered %d strips and grid.png under %s\n", count, out.string().c_str());
    return kExitOk;
}

}  // namespace afx
