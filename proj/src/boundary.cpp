#include "afx/boundary.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "afx/checkpoint.hpp"
#include "afx/rng.hpp"
#include "afx/runtime.hpp"

namespace afx {

namespace {

double norm(const std::vector<double>& w) {
    double s = 0.0;
    for (double v : w) s += v * v;
    return std::sqrt(s);
}

// L2-regularised L1-hinge SVM via dual coordinate descent (the liblinear
// algorithm): min 1/2 w'w + C sum max(0, 1 - y_i w'x_i), bias folded in as a
// constant 1 feature. Deterministic given the seed.
void solve_svm(const std::vector<std::vector<double>>& xs, const std::vector<int>& ys,
               double c, int max_iterations, double tol, uint64_t seed,
               std::vector<double>& w_out, double& b_out) {
    const int n = static_cast<int>(xs.size());
    const int d = static_cast<int>(xs[0].size()) + 1;  // + bias feature
    std::vector<double> w(d, 0.0), alpha(n, 0.0), qd(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double q = 1.0;  // bias feature
        for (double v : xs[i]) q += v * v;
        qd[i] = q;
    }
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);

    for (int pass = 0; pass < max_iterations; ++pass) {
        rng.shuffle(order);
        double max_viol = 0.0;
        for (int idx : order) {
            const auto& x = xs[idx];
            const double y = ys[idx] ? 1.0 : -1.0;
            double wx = w[d - 1];
            for (size_t j = 0; j < x.size(); ++j) wx += w[j] * x[j];
            const double grad = y * wx - 1.0;
            double pg = grad;  // projected gradient
            if (alpha[idx] <= 0.0 && grad > 0.0) pg = 0.0;
            if (alpha[idx] >= c && grad < 0.0) pg = 0.0;
            max_viol = std::max(max_viol, std::fabs(pg));
            if (pg == 0.0) continue;
            const double old = alpha[idx];
            const double next = std::min(std::max(old - grad / qd[idx], 0.0), c);
            if (next == old) continue;
            const double step = (next - old) * y;
            for (size_t j = 0; j < x.size(); ++j) w[j] += step * x[j];
            w[d - 1] += step;
            alpha[idx] = next;
        }
        if (max_viol < tol) break;
    }
    b_out = w[d - 1];
    w.resize(d - 1);
    w_out = std::move(w);
}

}  // namespace

double HyperplaneSurrogate::distance(const double* feat) const {
    double s = b;
    for (int j = 0; j < dim(); ++j) s += w[j] * ((feat[j] - mean[j]) / std[j]);
    return std::fabs(s) / norm(w);
}

double HyperplaneSurrogate::distance(const float* feat) const {
    double s = b;
    for (int j = 0; j < dim(); ++j) s += w[j] * ((static_cast<double>(feat[j]) - mean[j]) / std[j]);
    return std::fabs(s) / norm(w);
}

void HyperplaneSurrogate::distance_grad(const float* feat, float* out) const {
    double s = b;
    for (int j = 0; j < dim(); ++j) s += w[j] * ((static_cast<double>(feat[j]) - mean[j]) / std[j]);
    const double sgn = s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0);
    const double inv_norm = 1.0 / norm(w);
    for (int j = 0; j < dim(); ++j)
        out[j] = static_cast<float>(sgn * inv_norm * w[j] / std[j]);
}

double hyperplane_distance(const HyperplaneSurrogate& surr, const std::vector<double>& feat) {
    if (static_cast<int>(feat.size()) != surr.dim())
        throw ValidationError("feature dimension mismatch in hyperplane_distance");
    return surr.distance(feat.data());
}

HyperplaneSurrogate fit_surrogate(const Tensor& feats, const std::vector<uint8_t>& decisions,
                                  const SvmConfig& cfg) {
    const int n = feats.n, d = feats.c;
    if (static_cast<size_t>(n) != decisions.size())
        throw ValidationError("feature/decision count mismatch");
    if (n < 2) throw ValidationError("fit_surrogate needs at least two samples");
    int pos = 0;
    for (uint8_t y : decisions) pos += y ? 1 : 0;
    if (pos == 0 || pos == n)
        throw ValidationError("fit_surrogate: decisions contain a single class only");

    // Seeded holdout split: fit on ~90%, report agreement on the rest.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(cfg.seed);
    rng.shuffle(order);
    int n_hold = static_cast<int>(std::lround(n * cfg.holdout_fraction));
    n_hold = std::min(std::max(n_hold, 0), n - 2);
    const int n_fit = n - n_hold;

    HyperplaneSurrogate surr;
    surr.mean.assign(d, 0.0);
    surr.std.assign(d, 1.0);
    for (int t = 0; t < n_fit; ++t) {
        const float* f = feats.at(order[t]);
        for (int j = 0; j < d; ++j) surr.mean[j] += f[j];
    }
    for (int j = 0; j < d; ++j) surr.mean[j] /= n_fit;
    std::vector<double> var(d, 0.0);
    for (int t = 0; t < n_fit; ++t) {
        const float* f = feats.at(order[t]);
        for (int j = 0; j < d; ++j) {
            const double z = f[j] - surr.mean[j];
            var[j] += z * z;
        }
    }
    for (int j = 0; j < d; ++j) {
        const double sd = std::sqrt(var[j] / n_fit);
        surr.std[j] = sd > 0.0 ? sd : 1.0;  // constant features pass through
    }

    std::vector<std::vector<double>> xs(n_fit, std::vector<double>(d));
    std::vector<int> ys(n_fit);
    int fit_pos = 0;
    for (int t = 0; t < n_fit; ++t) {
        const float* f = feats.at(order[t]);
        for (int j = 0; j < d; ++j) xs[t][j] = (f[j] - surr.mean[j]) / surr.std[j];
        ys[t] = decisions[order[t]];
        fit_pos += ys[t];
    }
    if (fit_pos == 0 || fit_pos == n_fit)
        throw ValidationError("fit_surrogate: fit slice contains a single class only");

    solve_svm(xs, ys, cfg.c, cfg.max_iterations, cfg.tol, cfg.seed, surr.w, surr.b);
    surr.n_fit = n_fit;

    int agree = 0;
    for (int t = n_fit; t < n; ++t) {
        const float* f = feats.at(order[t]);
        double s = surr.b;
        for (int j = 0; j < d; ++j) s += surr.w[j] * ((f[j] - surr.mean[j]) / surr.std[j]);
        const int pred = s >= 0.0 ? 1 : 0;
        agree += pred == decisions[order[t]] ? 1 : 0;
    }
    surr.fit_agreement = n_hold > 0 ? static_cast<double>(agree) / n_hold : 1.0;
    std::fprintf(stderr, "[svm] fit on %d, held-out agreement %.4f (%d samples)\n", n_fit,
                 surr.fit_agreement, n_hold);
    return surr;
}

void save_surrogate(const HyperplaneSurrogate& surr, const std::filesystem::path& path) {
    // Doubles round-trip exactly through the JSON container, which matters
    // for reproducing distances bit-for-bit across runs.
    TensorFile tf;
    tf.meta = {{"kind", "hyperplane_surrogate"},
               {"b", surr.b},
               {"fit_agreement", surr.fit_agreement},
               {"n_fit", surr.n_fit},
               {"w", surr.w},
               {"mean", surr.mean},
               {"std", surr.std}};
    tf.save(path);
}

HyperplaneSurrogate load_surrogate(const std::filesystem::path& path) {
    TensorFile tf = TensorFile::load(path);
    if (tf.meta.value("kind", "") != "hyperplane_surrogate")
        throw ValidationError("not a surrogate file: " + path.string());
    HyperplaneSurrogate surr;
    surr.b = tf.meta.value("b", 0.0);
    surr.fit_agreement = tf.meta.value("fit_agreement", 0.0);
    surr.n_fit = tf.meta.value("n_fit", 0);
    surr.w = tf.meta["w"].get<std::vector<double>>();
    surr.mean = tf.meta["mean"].get<std::vector<double>>();
    surr.std = tf.meta["std"].get<std::vector<double>>();
    return surr;
}

}  // namespace afx
