#include "afx/ssim.hpp"

#include <cmath>
#include <vector>

#include "afx/runtime.hpp"

namespace afx {

namespace {

std::vector<double> gaussian_kernel(int window, double sigma) {
    std::vector<double> g(window);
    const double c = (window - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < window; ++i) {
        g[i] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
        sum += g[i];
    }
    for (double& v : g) v /= sum;
    return g;
}

// Separable valid-mode correlation: (h,w) -> (h-win+1, w-win+1).
void gauss_valid(const std::vector<double>& in, int h, int w, const std::vector<double>& g,
                 std::vector<double>& tmp, std::vector<double>& out) {
    const int win = static_cast<int>(g.size());
    const int vw = w - win + 1, vh = h - win + 1;
    tmp.assign(static_cast<size_t>(h) * vw, 0.0);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < vw; ++j) {
            double s = 0.0;
            const double* row = in.data() + static_cast<size_t>(i) * w + j;
            for (int t = 0; t < win; ++t) s += g[t] * row[t];
            tmp[static_cast<size_t>(i) * vw + j] = s;
        }
    out.assign(static_cast<size_t>(vh) * vw, 0.0);
    for (int i = 0; i < vh; ++i)
        for (int j = 0; j < vw; ++j) {
            double s = 0.0;
            for (int t = 0; t < win; ++t) s += g[t] * tmp[static_cast<size_t>(i + t) * vw + j];
            out[static_cast<size_t>(i) * vw + j] = s;
        }
}

// Transpose of gauss_valid: scatters window-indexed values back onto the
// (h,w) pixel grid.
void gauss_valid_t(const std::vector<double>& in, int h, int w, const std::vector<double>& g,
                   std::vector<double>& tmp, std::vector<double>& out) {
    const int win = static_cast<int>(g.size());
    const int vw = w - win + 1, vh = h - win + 1;
    tmp.assign(static_cast<size_t>(h) * vw, 0.0);
    for (int i = 0; i < vh; ++i)
        for (int j = 0; j < vw; ++j) {
            const double v = in[static_cast<size_t>(i) * vw + j];
            for (int t = 0; t < win; ++t) tmp[static_cast<size_t>(i + t) * vw + j] += g[t] * v;
        }
    out.assign(static_cast<size_t>(h) * w, 0.0);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < vw; ++j) {
            const double v = tmp[static_cast<size_t>(i) * vw + j];
            if (v == 0.0) continue;
            double* row = out.data() + static_cast<size_t>(i) * w + j;
            for (int t = 0; t < win; ++t) row[t] += g[t] * v;
        }
}

struct SsimMaps {
    int vh = 0, vw = 0;
    std::vector<double> ua, ub, eaa, ebb, eab;  // window means
    std::vector<double> a01, b01;               // inputs mapped to [0,1]
};

void check_inputs(const Tensor& a, const Tensor& b, const SsimSpec& spec) {
    if (!a.same_shape(b))
        throw ValidationError("ssim inputs must share shape, got " + a.shape_str() + " vs " +
                              b.shape_str());
    if (a.n != 1 || a.c != 1) throw ValidationError("ssim expects (1,1,h,w) tensors");
    if (a.h < spec.window || a.w < spec.window)
        throw ValidationError("ssim inputs smaller than the window");
    for (float v : a.v)
        if (!(v >= -1.0f && v <= 1.0f)) throw ValidationError("ssim input outside [-1,1]");
    for (float v : b.v)
        if (!(v >= -1.0f && v <= 1.0f)) throw ValidationError("ssim input outside [-1,1]");
}

void compute_maps(const Tensor& a, const Tensor& b, const SsimSpec& spec, SsimMaps& m) {
    const int h = a.h, w = a.w;
    const auto g = gaussian_kernel(spec.window, spec.sigma);
    m.vh = h - spec.window + 1;
    m.vw = w - spec.window + 1;
    const size_t hw = static_cast<size_t>(h) * w;
    m.a01.resize(hw);
    m.b01.resize(hw);
    std::vector<double> prod(hw), sq(hw), tmp;
    for (size_t i = 0; i < hw; ++i) {
        m.a01[i] = (a.v[i] + 1.0) * 0.5;
        m.b01[i] = (b.v[i] + 1.0) * 0.5;
    }
    gauss_valid(m.a01, h, w, g, tmp, m.ua);
    gauss_valid(m.b01, h, w, g, tmp, m.ub);
    for (size_t i = 0; i < hw; ++i) sq[i] = m.a01[i] * m.a01[i];
    gauss_valid(sq, h, w, g, tmp, m.eaa);
    for (size_t i = 0; i < hw; ++i) sq[i] = m.b01[i] * m.b01[i];
    gauss_valid(sq, h, w, g, tmp, m.ebb);
    for (size_t i = 0; i < hw; ++i) prod[i] = m.a01[i] * m.b01[i];
    gauss_valid(prod, h, w, g, tmp, m.eab);
}

}  // namespace

double ssim(const Tensor& a, const Tensor& b, const SsimSpec& spec) {
    check_inputs(a, b, spec);
    SsimMaps m;
    compute_maps(a, b, spec, m);
    const double c1 = (spec.k1 * spec.data_range) * (spec.k1 * spec.data_range);
    const double c2 = (spec.k2 * spec.data_range) * (spec.k2 * spec.data_range);
    const size_t nwin = static_cast<size_t>(m.vh) * m.vw;
    double total = 0.0;
    for (size_t i = 0; i < nwin; ++i) {
        const double ua = m.ua[i], ub = m.ub[i];
        const double va = m.eaa[i] - ua * ua;
        const double vb = m.ebb[i] - ub * ub;
        const double vab = m.eab[i] - ua * ub;
        const double s = ((2.0 * ua * ub + c1) * (2.0 * vab + c2)) /
                         ((ua * ua + ub * ub + c1) * (va + vb + c2));
        total += std::min(1.0, std::max(0.0, s));
    }
    return total / static_cast<double>(nwin);
}

double ssim_with_grad(const Tensor& a, const Tensor& b, const SsimSpec& spec, Tensor& db) {
    check_inputs(a, b, spec);
    SsimMaps m;
    compute_maps(a, b, spec, m);
    const double c1 = (spec.k1 * spec.data_range) * (spec.k1 * spec.data_range);
    const double c2 = (spec.k2 * spec.data_range) * (spec.k2 * spec.data_range);
    const size_t nwin = static_cast<size_t>(m.vh) * m.vw;
    const double inv_n = 1.0 / static_cast<double>(nwin);

    // Window-level coefficients of the pixel chain
    //   dS/db_p = g_p * (cmu + csab * a_p + 2*csbb * b_p - (csab*ua + 2*csbb*ub))
    std::vector<double> cmu(nwin, 0.0), csab(nwin, 0.0), csbb(nwin, 0.0), cconst(nwin, 0.0);
    double total = 0.0;
    for (size_t i = 0; i < nwin; ++i) {
        const double ua = m.ua[i], ub = m.ub[i];
        const double va = m.eaa[i] - ua * ua;
        const double vb = m.ebb[i] - ub * ub;
        const double vab = m.eab[i] - ua * ub;
        const double a1 = 2.0 * ua * ub + c1, b1 = ua * ua + ub * ub + c1;
        const double a2 = 2.0 * vab + c2, b2 = va + vb + c2;
        const double s = (a1 * a2) / (b1 * b2);
        total += std::min(1.0, std::max(0.0, s));
        if (s < 0.0 || s > 1.0) continue;  // clamp region: zero gradient
        const double ds_da1 = a2 / (b1 * b2);
        const double ds_da2 = a1 / (b1 * b2);
        const double ds_db1 = -s / b1;
        const double ds_db2 = -s / b2;
        const double d_mu = ds_da1 * 2.0 * ua + ds_db1 * 2.0 * ub;
        const double d_sab = ds_da2 * 2.0;
        const double d_sbb = ds_db2;
        cmu[i] = inv_n * d_mu;
        csab[i] = inv_n * d_sab;
        csbb[i] = inv_n * d_sbb;
        cconst[i] = -inv_n * (d_sab * ua + 2.0 * d_sbb * ub);
    }

    const auto g = gaussian_kernel(spec.window, spec.sigma);
    const int h = a.h, w = a.w;
    std::vector<double> tmp, acc, term;
    // cmu + cconst scattered directly
    for (size_t i = 0; i < nwin; ++i) cmu[i] += cconst[i];
    gauss_valid_t(cmu, h, w, g, tmp, acc);
    // + a_p * scatter(csab)
    gauss_valid_t(csab, h, w, g, tmp, term);
    for (size_t p = 0; p < acc.size(); ++p) acc[p] += m.a01[p] * term[p];
    // + 2 b_p * scatter(csbb)
    gauss_valid_t(csbb, h, w, g, tmp, term);
    for (size_t p = 0; p < acc.size(); ++p) acc[p] += 2.0 * m.b01[p] * term[p];

    db = Tensor(1, 1, h, w);
    // chain through b01 = (b+1)/2
    for (size_t p = 0; p < acc.size(); ++p) db.v[p] = static_cast<float>(acc[p] * 0.5);
    return total * inv_n;
}

}  // namespace afx
