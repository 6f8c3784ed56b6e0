#include "afx/metrics.hpp"

#include <cmath>

#include "afx/runtime.hpp"

namespace afx {

const char* mode_name(ExplainerMode m) {
    return m == ExplainerMode::alterfactual ? "alterfactual" : "counterfactual";
}

ExplainerMode parse_mode(const std::string& s) {
    if (s == "alterfactual") return ExplainerMode::alterfactual;
    if (s == "counterfactual") return ExplainerMode::counterfactual;
    throw ConfigError("unknown explainer mode '" + s + "'");
}

namespace {

void check_pairs(const Tensor& xs, const Tensor& xhats) {
    if (!xs.same_shape(xhats))
        throw ValidationError("originals and explanations must share shape, got " +
                              xs.shape_str() + " vs " + xhats.shape_str());
    if (xs.n < 1) throw ValidationError("empty explanation list");
}

Tensor single(const Tensor& set, int i) {
    Tensor t(1, set.c, set.h, set.w);
    std::copy_n(set.at(i), t.numel(), t.data());
    return t;
}

}  // namespace

double validity(const TrainedClassifier& clf, const Tensor& xs, const Tensor& xhats,
                ExplainerMode mode) {
    check_pairs(xs, xhats);
    int valid = 0;
    for (int i = 0; i < xs.n; ++i) {
        const Tensor po = clf.predict(to_unit_range(single(xs, i)));
        const Tensor pe = clf.predict(to_unit_range(single(xhats, i)));
        const int orig = argmax_class(po.data());
        const int target = mode == ExplainerMode::alterfactual ? orig : 1 - orig;
        valid += argmax_class(pe.data()) == target ? 1 : 0;
    }
    return 100.0 * valid / xs.n;
}

EvaluationReport evaluate(const TrainedClassifier& clf, const HyperplaneSurrogate& surr,
                          const Tensor& xs, const Tensor& xhats, ExplainerMode mode,
                          const SsimSpec& spec) {
    check_pairs(xs, xhats);
    EvaluationReport rep;
    rep.mode = mode;
    rep.n = xs.n;
    rep.ssim_spec = spec;
    rep.records.reserve(xs.n);

    double ssim_sum = 0.0, drift_sum = 0.0;
    int valid_count = 0;
    Scratch sc;
    for (int i = 0; i < xs.n; ++i) {
        const Tensor x = single(xs, i), xh = single(xhats, i);
        TrainedClassifier::FrozenPass fo, fe;
        clf.forward_frozen(to_unit_range(x), fo, sc);
        clf.forward_frozen(to_unit_range(xh), fe, sc);

        ExplanationRecord r;
        r.id = i;
        r.pred_orig = {fo.probs.v[0], fo.probs.v[1]};
        r.pred_expl = {fe.probs.v[0], fe.probs.v[1]};
        const int orig = argmax_class(fo.probs.data());
        r.target_class = mode == ExplainerMode::alterfactual ? orig : 1 - orig;
        r.valid = argmax_class(fe.probs.data()) == r.target_class;
        r.ssim_val = ssim(x, xh, spec);
        r.dist_orig = surr.distance(fo.feats.data());
        r.dist_expl = surr.distance(fe.feats.data());

        ssim_sum += r.ssim_val;
        drift_sum += std::fabs(r.dist_orig - r.dist_expl);
        valid_count += r.valid ? 1 : 0;
        rep.records.push_back(r);
    }
    rep.validity_pct = 100.0 * valid_count / xs.n;
    rep.mean_ssim = ssim_sum / xs.n;
    rep.mean_boundary_drift = drift_sum / xs.n;
    return rep;
}

}  // namespace afx
