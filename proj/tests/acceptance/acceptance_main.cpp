// Acceptance gate: prints one PASS/FAIL line per criterion and exits with
// the number of failures. Criteria 1-4 and 10 read artifacts of the full
// desk-scale runs under --run-root; the rest are self-contained properties.
#include <json.hpp>

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "afx/boundary.hpp"
#include "afx/classifier.hpp"
#include "afx/explainer.hpp"
#include "afx/metrics.hpp"
#include "afx/report.hpp"
#include "afx/runtime.hpp"
#include "afx/ssim.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace afx;

namespace {

int g_failures = 0;

void criterion(int idx, const std::string& what, const std::function<std::string()>& check) {
    std::string detail;
    bool ok = false;
    try {
        detail = check();
        ok = detail.rfind("!", 0) != 0;
        if (!ok) detail = detail.substr(1);
    } catch (const std::exception& e) {
        detail = e.what();
    }
    std::printf("%s  %2d. %s (%s)\n", ok ? "PASS" : "FAIL", idx, what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

Tensor random_image(int h, int w, uint64_t seed, float lo = -1.0f, float hi = 1.0f) {
    Tensor t(1, 1, h, w);
    Rng rng(seed);
    oracle::fill_uniform(t, rng, lo, hi);
    return t;
}

Tensor perturbed(const Tensor& a, float amp, uint64_t seed) {
    Tensor b = a;
    Rng rng(seed);
    for (float& v : b.v) v = std::clamp(v + rng.uniform(-amp, amp), -1.0f, 1.0f);
    return b;
}

// Two intensity classes, same construction as the unit suites.
LabeledImageSet toy_set(int n, int res, uint64_t seed) {
    LabeledImageSet s;
    s.images = Tensor(n, 1, res, res);
    s.labels.resize(n);
    s.class_names = {"dark", "bright"};
    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        const int label = i % 2;
        s.labels[i] = static_cast<uint8_t>(label);
        const float base = label == 0 ? -0.45f : 0.45f;
        float* p = s.images.at(i);
        for (int t = 0; t < res * res; ++t)
            p[t] = std::clamp(base + rng.uniform(-0.5f, 0.5f), -1.0f, 1.0f);
    }
    return s;
}

TrainedClassifier toy_clf(int res, uint64_t seed) {
    ClassifierConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 4;
    cfg.seed = seed;
    return train_classifier(toy_set(8, res, seed + 20), toy_set(4, res, seed + 21), cfg);
}

HyperplaneSurrogate random_surrogate(int d, uint64_t seed) {
    Rng rng(seed);
    HyperplaneSurrogate s;
    s.w.resize(d);
    for (double& v : s.w) v = rng.uniform(-1.0f, 1.0f);
    s.w[0] += 3.0;
    s.b = rng.uniform(-0.5f, 0.5f);
    s.mean.assign(d, 0.3);
    s.std.assign(d, 1.25);
    return s;
}

Tensor to01(const Tensor& x) {
    Tensor y = x;
    for (float& v : y.v) v = (v + 1.0f) * 0.5f;
    return y;
}

// Double-precision re-implementation of the frozen classifier forward, the
// function finite differences are taken of (float rounding in the library
// forward would otherwise dominate the FD noise floor at step 1e-3).
std::vector<double> dconv3x3(const std::vector<double>& x, int c, int h, int w,
                             const Tensor& wt, const Tensor& bt) {
    const int oc = wt.n;
    std::vector<double> y(static_cast<size_t>(oc) * h * w);
    for (int o = 0; o < oc; ++o)
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) {
                double acc = bt.v[o];
                for (int ch = 0; ch < c; ++ch)
                    for (int u = 0; u < 3; ++u)
                        for (int v = 0; v < 3; ++v) {
                            const int r = i - 1 + u, q = j - 1 + v;
                            if (r < 0 || r >= h || q < 0 || q >= w) continue;
                            acc += static_cast<double>(
                                       wt.v[((static_cast<size_t>(o) * c + ch) * 3 + u) * 3 +
                                            v]) *
                                   x[(static_cast<size_t>(ch) * h + r) * w + q];
                        }
                y[(static_cast<size_t>(o) * h + i) * w + j] = acc;
            }
    return y;
}

void dbn_relu(std::vector<double>& y, int c, int hw, const BatchNorm2d& bn) {
    for (int ch = 0; ch < c; ++ch) {
        const double g = bn.gamma.v[ch], b = bn.beta.v[ch];
        const double inv =
            1.0 / std::sqrt(static_cast<double>(bn.run_var[ch]) + static_cast<double>(bn.eps));
        for (int t = 0; t < hw; ++t) {
            double& v = y[static_cast<size_t>(ch) * hw + t];
            v = g * (v - bn.run_mean[ch]) * inv + b;
            if (v < 0.0) v = 0.0;
        }
    }
}

std::vector<double> dpool2(const std::vector<double>& x, int c, int h, int w) {
    const int oh = h / 2, ow = w / 2;
    std::vector<double> y(static_cast<size_t>(c) * oh * ow);
    for (int ch = 0; ch < c; ++ch) {
        const double* p = &x[static_cast<size_t>(ch) * h * w];
        for (int i = 0; i < oh; ++i)
            for (int j = 0; j < ow; ++j) {
                double m = p[(2 * i) * w + 2 * j];
                m = std::max(m, static_cast<double>(p[(2 * i) * w + 2 * j + 1]));
                m = std::max(m, static_cast<double>(p[(2 * i + 1) * w + 2 * j]));
                m = std::max(m, static_cast<double>(p[(2 * i + 1) * w + 2 * j + 1]));
                y[(static_cast<size_t>(ch) * oh + i) * ow + j] = m;
            }
    }
    return y;
}

struct DoubleFrozen {
    std::vector<double> feats;
    double p0 = 0.0, p1 = 0.0;
};

DoubleFrozen double_frozen_forward(const TrainedClassifier& clf, const Tensor& x01) {
    const ClassifierNet& n = clf.net;
    const int r = x01.h;
    std::vector<double> a(x01.v.begin(), x01.v.end());
    a = dconv3x3(a, 1, r, r, n.conv1.w, n.conv1.b);
    dbn_relu(a, 32, r * r, n.bn1);
    a = dconv3x3(a, 32, r, r, n.conv2.w, n.conv2.b);
    dbn_relu(a, 32, r * r, n.bn2);
    a = dpool2(a, 32, r, r);
    const int hp = r / 2;
    a = dconv3x3(a, 32, hp, hp, n.conv3.w, n.conv3.b);
    dbn_relu(a, 64, hp * hp, n.bn3);
    a = dconv3x3(a, 64, hp, hp, n.conv4.w, n.conv4.b);
    dbn_relu(a, 64, hp * hp, n.bn4);

    DoubleFrozen out;
    out.feats.resize(64);
    for (int ch = 0; ch < 64; ++ch) {
        double s = 0.0;
        for (int t = 0; t < hp * hp; ++t) s += a[static_cast<size_t>(ch) * hp * hp + t];
        out.feats[ch] = s / (hp * hp);
    }
    double z0 = n.fc.b.v[0], z1 = n.fc.b.v[1];
    for (int j = 0; j < 64; ++j) {
        z0 += static_cast<double>(n.fc.w.v[j]) * out.feats[j];
        z1 += static_cast<double>(n.fc.w.v[64 + j]) * out.feats[j];
    }
    const double m = std::max(z0, z1);
    const double e0 = std::exp(z0 - m), e1 = std::exp(z1 - m);
    out.p0 = e0 / (e0 + e1);
    out.p1 = e1 / (e0 + e1);
    return out;
}

double surrogate_distance_d(const HyperplaneSurrogate& s, const std::vector<double>& f) {
    double dot = s.b, nw = 0.0;
    for (size_t j = 0; j < s.w.size(); ++j) {
        dot += s.w[j] * (f[j] - s.mean[j]) / s.std[j];
        nw += s.w[j] * s.w[j];
    }
    return std::abs(dot) / std::sqrt(nw);
}

struct FdTally {
    double worst_rel = 0.0;
    int accepted = 0;
    // gap_limit screens probes straddling relu/pool kinks; smooth losses pass
    // gap_limit <= 0 to accept every probe.
    void add(double analytic, const oracle::FdProbe& p, double gap_limit) {
        if (gap_limit > 0.0 && p.gap > gap_limit) return;
        worst_rel = std::max(worst_rel, oracle::rel_err(analytic, p.central));
        ++accepted;
    }
};

std::string read_bytes(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::string s((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return s;
}

std::string require_report(const fs::path& path, ExplainerMode mode, double validity_lo,
                           double ssim_lo, double ssim_hi) {
    if (!fs::exists(path)) return "!missing " + path.string();
    const EvaluationReport rep = read_report_json(path);
    if (rep.mode != mode) return "!unexpected mode in " + path.string();
    const std::string got = fmt("validity=%.2f ssim=%.4f n=%d", rep.validity_pct, rep.mean_ssim,
                                static_cast<int>(rep.records.size()));
    if (rep.validity_pct < validity_lo || rep.mean_ssim < ssim_lo || rep.mean_ssim > ssim_hi)
        return "!" + got;
    return got;
}

}  // namespace

int main(int argc, char** argv) {
    init_compute_quiet();
    fs::path run_root = "runs";
    for (int i = 1; i + 1 < argc; ++i)
        if (std::strcmp(argv[i], "--run-root") == 0) run_root = argv[i + 1];

    criterion(1, "classifier test accuracy within 96.7 +/- 2.0", [&] {
        const fs::path p = run_root / "fashion_alter" / "classifier_metrics.json";
        if (!fs::exists(p)) return "!missing " + p.string();
        const auto j = nlohmann::json::parse(read_bytes(p));
        const double acc = 100.0 * j.at("final_accuracy").get<double>();
        const std::string got = fmt("accuracy=%.2f", acc);
        return (acc >= 94.7 && acc <= 98.7) ? got : "!" + got;
    });

    criterion(2, "alterfactual run: validity >= 90 and mean ssim <= 0.45", [&] {
        return require_report(run_root / "fashion_alter" / "report.json",
                              ExplainerMode::alterfactual, 90.0, 0.0, 0.45);
    });

    criterion(3, "counterfactual run: validity >= 80 and mean ssim >= 0.85", [&] {
        return require_report(run_root / "fashion_counter" / "report.json",
                              ExplainerMode::counterfactual, 80.0, 0.85, 1.0);
    });

    criterion(4, "mnist model-agnostic run: validity >= 88 and mean ssim <= 0.55", [&] {
        return require_report(run_root / "mnist_agnostic" / "report.json",
                              ExplainerMode::alterfactual, 88.0, 0.0, 0.55);
    });

    criterion(5, "ssim matches an independent reference; self-ssim and symmetry exact", [] {
        const SsimSpec spec;
        double worst = 0.0;
        for (int t = 0; t < 20; ++t) {
            const Tensor a = random_image(128, 128, 500 + 2 * t);
            const Tensor b = t % 2 == 0 ? random_image(128, 128, 501 + 2 * t)
                                        : perturbed(a, 0.3f, 501 + 2 * t);
            worst = std::max(worst, std::abs(ssim(a, b, spec) -
                                             oracle::ssim(a, b, spec.window, spec.sigma, spec.k1,
                                                          spec.k2, spec.data_range)));
        }
        for (int r : {16, 61, 128}) {
            const Tensor x = random_image(r, r, 540 + r);
            if (ssim(x, x, spec) != 1.0) return std::string("!self-ssim not exactly 1");
        }
        for (int t = 0; t < 3; ++t) {
            const Tensor a = random_image(64, 64, 550 + t), b = perturbed(a, 0.4f, 560 + t);
            if (ssim(a, b, spec) != ssim(b, a, spec)) return std::string("!asymmetric ssim");
        }
        const std::string got = fmt("max deviation %.2e over 20 pairs", worst);
        return worst <= 1e-4 ? got : "!" + got;
    });

    criterion(6, "hyperplane distance: analytic value and scale invariance within 1e-9", [] {
        HyperplaneSurrogate s;
        s.w = {3.0, 4.0};
        s.b = 0.0;
        s.mean = {0.0, 0.0};
        s.std = {1.0, 1.0};
        const float feat[2] = {1.0f, 1.0f};
        const double base = s.distance(feat);
        double worst = std::abs(base - 1.4);
        for (double c : {2.0, 37.5, 0.125}) {
            HyperplaneSurrogate cs = s;
            for (double& v : cs.w) v *= c;
            cs.b *= c;
            worst = std::max(worst, std::abs(cs.distance(feat) - base));
        }
        const std::string got = fmt("max error %.2e", worst);
        return worst <= 1e-9 ? got : "!" + got;
    });

    criterion(7, "loss identities: similarity complement, zero self boundary, lambda linearity",
              [] {
                  SsimSpec spec;
                  for (int t = 0; t < 6; ++t) {
                      const Tensor a = random_image(32, 32, 600 + t);
                      const Tensor b = perturbed(a, 0.2f, 610 + t);
                      const double la = similarity_loss(a, b, ExplainerMode::alterfactual, spec);
                      const double lc = similarity_loss(a, b, ExplainerMode::counterfactual, spec);
                      if (la + lc != 1.0) return std::string("!similarity complement not exact");
                  }
                  const TrainedClassifier clf = toy_clf(16, 5);
                  const HyperplaneSurrogate surr = random_surrogate(64, 8);
                  const Tensor x = random_image(16, 16, 620, -0.8f, 0.8f);
                  if (boundary_loss(clf, surr, x, x) != 0.0)
                      return std::string("!self boundary loss not zero");
                  const LossComponents comp{0.37, 1.21, 0.55, 2.03};
                  ExplainerConfig cfg;
                  cfg.mode = ExplainerMode::alterfactual;
                  double worst = 0.0;
                  const auto probe = [&](double* lambda) {
                      double t3[3];
                      for (int k = 0; k < 3; ++k) {
                          *lambda = k;
                          t3[k] = total_generator_loss(comp, cfg);
                      }
                      *lambda = 1.0;
                      worst = std::max(worst, std::abs((t3[2] - t3[1]) - (t3[1] - t3[0])));
                  };
                  probe(&cfg.lambda_adv);
                  probe(&cfg.lambda_cls);
                  probe(&cfg.lambda_sim);
                  probe(&cfg.lambda_svm);
                  cfg.mode = ExplainerMode::counterfactual;
                  cfg.lambda_svm = 5.0;
                  const double gated = total_generator_loss(comp, cfg);
                  cfg.lambda_svm = 0.0;
                  if (gated != total_generator_loss(comp, cfg))
                      return std::string("!svm term not gated out in counterfactual mode");
                  const std::string got = fmt("lambda linearity defect %.2e", worst);
                  return worst <= 1e-12 ? got : "!" + got;
              });

    criterion(8, "loss gradients match finite differences within rel 1e-3 on a toy pipeline", [] {
        FdTally adv, sim, cls, svm;

        // Adversarial terms: analytic patch-loss gradients on an 8x8 map.
        // Smooth in p, so every probe counts.
        Tensor p = random_image(8, 8, 700, 0.1f, 0.9f);
        const Tensor gr = patch_real_loss_grad(p);
        const Tensor gf = patch_fake_loss_grad(p);
        for (size_t q = 0; q < 6; ++q) {
            adv.add(gr.v[q], oracle::fd_probe(p.v[q], 1e-3, [&] { return patch_real_loss(p); }),
                    0.0);
            adv.add(gf.v[q], oracle::fd_probe(p.v[q], 1e-3, [&] { return patch_fake_loss(p); }),
                    0.0);
        }

        // Similarity term: ssim gradient wrt the explanation image. Kinks
        // only at the per-window clamp, screened by the slope gap.
        SsimSpec spec;
        spec.window = 5;
        const Tensor a = random_image(8, 8, 710, -0.7f, 0.7f);
        Tensor b = perturbed(a, 0.2f, 711);
        Tensor db;
        const double s = ssim_with_grad(a, b, spec, db);
        if (s != similarity_loss(a, b, ExplainerMode::alterfactual, spec))
            return std::string("!alterfactual similarity loss is not the ssim value");
        for (size_t q : oracle::largest_magnitude(db, 6))
            sim.add(db.v[q], oracle::fd_probe(b.v[q], 1e-3, [&] { return ssim(a, b, spec); }),
                    1e-2);

        // Classification term through an 8x8 classifier. Finite differences
        // run on the double-precision forward; the slope gap screens probes
        // that straddle a relu/pool kink. Evaluated at a training image
        // against the opposite label, where the loss is steep.
        const LabeledImageSet set = toy_set(8, 8, 23);
        ClassifierConfig ccfg;
        ccfg.epochs = 20;
        ccfg.batch_size = 4;
        ccfg.lr = 5e-3;
        const TrainedClassifier clf = train_classifier(set, set, ccfg);
        Tensor xhat01(1, 1, 8, 8);
        for (int q = 0; q < 64; ++q) xhat01.v[q] = (set.images.at(0)[q] + 1.0f) * 0.5f;
        Scratch sc;
        TrainedClassifier::FrozenPass fp;
        clf.forward_frozen(xhat01, fp, sc);
        const DoubleFrozen od = double_frozen_forward(clf, xhat01);
        if (std::abs(od.p1 - fp.probs.v[1]) > 1e-4)
            return std::string("!double-precision forward disagrees with the library");
        const int tgt = fp.probs.v[0] > fp.probs.v[1] ? 1 : 0;
        Tensor dlogits(1, 2, 1, 1);
        dlogits.v[0] = fp.probs.v[0] - (tgt == 0 ? 1.0f : 0.0f);
        dlogits.v[1] = fp.probs.v[1] - (tgt == 1 ? 1.0f : 0.0f);
        const Tensor gcls = clf.input_grad(fp, dlogits, Tensor(), sc);
        const auto cls_loss = [&] {
            const DoubleFrozen o = double_frozen_forward(clf, xhat01);
            return -std::log(std::max(tgt == 1 ? o.p1 : o.p0, kProbEps));
        };
        for (size_t q : oracle::largest_magnitude(gcls, 12))
            cls.add(gcls.v[q], oracle::fd_probe(xhat01.v[q], 1e-3, cls_loss), 1e-3);

        // Boundary term: |distance drift| in surrogate feature space through
        // the same classifier features, against the double-precision chain.
        const HyperplaneSurrogate surr = random_surrogate(64, 9);
        Tensor xh2(1, 1, 8, 8);
        for (int q = 0; q < 64; ++q) xh2.v[q] = (set.images.at(1)[q] + 1.0f) * 0.5f;
        const double dref =
            surrogate_distance_d(surr, double_frozen_forward(clf, xhat01).feats);
        clf.forward_frozen(xh2, fp, sc);
        const double dist = surr.distance(fp.feats.data());
        const double sgn = dist > dref ? 1.0 : (dist < dref ? -1.0 : 0.0);
        Tensor dfeats(1, 64, 1, 1);
        surr.distance_grad(fp.feats.data(), dfeats.data());
        for (float& v : dfeats.v) v *= static_cast<float>(sgn);
        const Tensor gb = clf.input_grad(fp, Tensor(), dfeats, sc);
        const auto b_loss = [&] {
            const DoubleFrozen o = double_frozen_forward(clf, xh2);
            return std::abs(surrogate_distance_d(surr, o.feats) - dref);
        };
        for (size_t q : oracle::largest_magnitude(gb, 12))
            svm.add(gb.v[q], oracle::fd_probe(xh2.v[q], 1e-3, b_loss), 1e-3);

        const double worst =
            std::max({adv.worst_rel, sim.worst_rel, cls.worst_rel, svm.worst_rel});
        const std::string got =
            fmt("rel err adv %.1e/%d sim %.1e/%d cls %.1e/%d svm %.1e/%d", adv.worst_rel,
                adv.accepted, sim.worst_rel, sim.accepted, cls.worst_rel, cls.accepted,
                svm.worst_rel, svm.accepted);
        const bool enough =
            adv.accepted == 12 && sim.accepted >= 4 && cls.accepted >= 5 && svm.accepted >= 5;
        return (enough && worst <= 1e-3) ? got : "!" + got;
    });

    criterion(9, "identity explanations: alterfactual validity 100, counterfactual 0", [] {
        const TrainedClassifier clf = toy_clf(16, 7);
        const Tensor xs = toy_set(8, 16, 730).images;
        const double va = validity(clf, xs, xs, ExplainerMode::alterfactual);
        const double vc = validity(clf, xs, xs, ExplainerMode::counterfactual);
        const std::string got = fmt("alterfactual %.1f counterfactual %.1f", va, vc);
        return (va == 100.0 && vc == 0.0) ? got : "!" + got;
    });

    criterion(10, "surrogate held-out decision agreement >= 0.95", [&] {
        const fs::path p = run_root / "fashion_alter" / "surrogate.bin";
        if (!fs::exists(p)) return "!missing " + p.string();
        const HyperplaneSurrogate surr = load_surrogate(p);
        const std::string got = fmt("agreement=%.4f on %d fit samples", surr.fit_agreement,
                                    surr.n_fit);
        return surr.fit_agreement >= 0.95 ? got : "!" + got;
    });

    criterion(11, "bitwise-deterministic generation and identical repeated reports", [&] {
        const fs::path ckpt = run_root / "fashion_alter" / "explainer_alterfactual.ckpt";
        ExplainerModel model;
        std::string source;
        if (fs::exists(ckpt)) {
            model = load_explainer(ckpt);
            source = "run checkpoint";
        } else {
            // No desk-scale checkpoint yet: train a miniature explainer so the
            // property is still exercised end to end.
            ExplainerConfig cfg;
            cfg.mode = ExplainerMode::counterfactual;
            cfg.epochs = 1;
            cfg.seed = 3;
            LabeledImageSet set = toy_set(2, 128, 740);
            model = train_explainer(toy_clf(128, 9), nullptr, set, cfg);
            source = "miniature model";
        }
        const Tensor x = random_image(128, 128, 741);
        const Tensor g1 = generate_image(model, x, 77);
        const Tensor g2 = generate_image(model, x, 77);
        if (g1.v != g2.v) return std::string("!repeated generation differs");

        const TrainedClassifier clf = toy_clf(128, 9);
        const HyperplaneSurrogate surr = random_surrogate(64, 10);
        Tensor xs(2, 1, 128, 128), xhats(2, 1, 128, 128);
        for (int i = 0; i < 2; ++i) {
            const Tensor xi = random_image(128, 128, 750 + i);
            const Tensor hi = generate_image(model, xi, 760 + i);
            std::copy(xi.v.begin(), xi.v.end(), xs.at(i));
            std::copy(hi.v.begin(), hi.v.end(), xhats.at(i));
        }
        const SsimSpec spec;
        const fs::path t1 = fs::temp_directory_path() / "afx_acceptance_r1.json";
        const fs::path t2 = fs::temp_directory_path() / "afx_acceptance_r2.json";
        write_report_json(evaluate(clf, surr, xs, xhats, model.mode, spec), t1);
        write_report_json(evaluate(clf, surr, xs, xhats, model.mode, spec), t2);
        const bool same = read_bytes(t1) == read_bytes(t2);
        fs::remove(t1);
        fs::remove(t2);
        if (!same) return std::string("!repeated evaluation reports differ");
        return "deterministic with " + source;
    });

    std::printf("acceptance: %d/11 criteria passed\n", 11 - g_failures);
    return g_failures;
}
