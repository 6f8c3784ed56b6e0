#include "afx/nn.hpp"

#include <cmath>
#include <cstring>

#include "afx/blas.hpp"

namespace afx {

namespace {

// Gathers k*k windows of `im` (c_im,h_im,w_im) at a (ph x pw) grid of
// positions with origin (i*s-p, j*s-p) into cols laid out
// (c_im*k*k) x (ph*pw). Out-of-range taps read zero.
void im2col(const float* im, int c_im, int h_im, int w_im, int k, int s, int p,
            int ph, int pw, float* cols) {
    const int npos = ph * pw;
    for (int ci = 0; ci < c_im; ++ci) {
        const float* imc = im + static_cast<size_t>(ci) * h_im * w_im;
        for (int ki = 0; ki < k; ++ki) {
            for (int kj = 0; kj < k; ++kj) {
                float* row = cols + (static_cast<size_t>(ci * k + ki) * k + kj) * npos;
                for (int i = 0; i < ph; ++i) {
                    const int yi = i * s - p + ki;
                    float* out = row + static_cast<size_t>(i) * pw;
                    if (yi < 0 || yi >= h_im) {
                        std::memset(out, 0, sizeof(float) * pw);
                        continue;
                    }
                    const float* imrow = imc + static_cast<size_t>(yi) * w_im;
                    for (int j = 0; j < pw; ++j) {
                        const int xj = j * s - p + kj;
                        out[j] = (xj >= 0 && xj < w_im) ? imrow[xj] : 0.0f;
                    }
                }
            }
        }
    }
}

// Scatter-add inverse of im2col. `im` must be zeroed by the caller.
void col2im(const float* cols, int c_im, int h_im, int w_im, int k, int s, int p,
            int ph, int pw, float* im) {
    const int npos = ph * pw;
    for (int ci = 0; ci < c_im; ++ci) {
        float* imc = im + static_cast<size_t>(ci) * h_im * w_im;
        for (int ki = 0; ki < k; ++ki) {
            for (int kj = 0; kj < k; ++kj) {
                const float* row = cols + (static_cast<size_t>(ci * k + ki) * k + kj) * npos;
                for (int i = 0; i < ph; ++i) {
                    const int yi = i * s - p + ki;
                    if (yi < 0 || yi >= h_im) continue;
                    float* imrow = imc + static_cast<size_t>(yi) * w_im;
                    const float* in = row + static_cast<size_t>(i) * pw;
                    for (int j = 0; j < pw; ++j) {
                        const int xj = j * s - p + kj;
                        if (xj >= 0 && xj < w_im) imrow[xj] += in[j];
                    }
                }
            }
        }
    }
}

float glorot_limit(int fan_in, int fan_out) {
    return std::sqrt(6.0f / static_cast<float>(fan_in + fan_out));
}

void fill_uniform(Tensor& t, Rng& rng, float lo, float hi) {
    for (float& x : t.v) x = rng.uniform(lo, hi);
}

void add_bias_plane(float* y, const float* b, int c, int hw) {
    for (int j = 0; j < c; ++j) {
        float* p = y + static_cast<size_t>(j) * hw;
        for (int i = 0; i < hw; ++i) p[i] += b[j];
    }
}

void accum_bias_grad(const float* dy, float* gb, int c, int hw) {
    for (int j = 0; j < c; ++j) {
        const float* p = dy + static_cast<size_t>(j) * hw;
        double s = 0.0;
        for (int i = 0; i < hw; ++i) s += p[i];
        gb[j] += static_cast<float>(s);
    }
}

}  // namespace

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(int in_c_, int out_c_, int k_, int stride_, int pad_)
    : in_c(in_c_), out_c(out_c_), k(k_), stride(stride_), pad(pad_),
      w(out_c_, in_c_, k_, k_), b(Tensor::vec(out_c_)),
      gw(out_c_, in_c_, k_, k_), gb(Tensor::vec(out_c_)) {}

void Conv2d::init(Rng& rng) {
    const float lim = glorot_limit(in_c * k * k, out_c * k * k);
    fill_uniform(w, rng, -lim, lim);
    b.zero();
}

Tensor Conv2d::fwd(const Tensor& x, Scratch& sc) const {
    const int oh = out_h(x.h), ow = (x.w + 2 * pad - k) / stride + 1;
    const int ckk = in_c * k * k, ohw = oh * ow;
    Tensor y(x.n, out_c, oh, ow);
    sc.cols.resize(static_cast<size_t>(ckk) * ohw);
    for (int i = 0; i < x.n; ++i) {
        im2col(x.at(i), in_c, x.h, x.w, k, stride, pad, oh, ow, sc.cols.data());
        gemm_nn(out_c, ohw, ckk, w.data(), sc.cols.data(), y.at(i));
        add_bias_plane(y.at(i), b.data(), out_c, ohw);
    }
    return y;
}

Tensor Conv2d::bwd(const Tensor& x, const Tensor& dy, Scratch& sc, bool want_dx) {
    const int oh = dy.h, ow = dy.w;
    const int ckk = in_c * k * k, ohw = oh * ow;
    sc.cols.resize(static_cast<size_t>(ckk) * ohw);
    sc.cols2.resize(static_cast<size_t>(ckk) * ohw);
    Tensor dx;
    if (want_dx) dx = Tensor(x.n, in_c, x.h, x.w);
    for (int i = 0; i < x.n; ++i) {
        im2col(x.at(i), in_c, x.h, x.w, k, stride, pad, oh, ow, sc.cols.data());
        gemm_nt(out_c, ckk, ohw, dy.at(i), sc.cols.data(), gw.data(), 1.0f);
        accum_bias_grad(dy.at(i), gb.data(), out_c, ohw);
        if (want_dx) {
            gemm_tn(ckk, ohw, out_c, w.data(), dy.at(i), sc.cols2.data());
            col2im(sc.cols2.data(), in_c, x.h, x.w, k, stride, pad, oh, ow, dx.at(i));
        }
    }
    return dx;
}

Tensor Conv2d::bwd_data(const Tensor& dy, int in_h, int in_w, Scratch& sc) const {
    const int ckk = in_c * k * k, ohw = dy.h * dy.w;
    sc.cols2.resize(static_cast<size_t>(ckk) * ohw);
    Tensor dx(dy.n, in_c, in_h, in_w);
    for (int i = 0; i < dy.n; ++i) {
        gemm_tn(ckk, ohw, out_c, w.data(), dy.at(i), sc.cols2.data());
        col2im(sc.cols2.data(), in_c, in_h, in_w, k, stride, pad, dy.h, dy.w, dx.at(i));
    }
    return dx;
}

// ------------------------------------------------------- ConvTranspose2d

ConvTranspose2d::ConvTranspose2d(int in_c_, int out_c_, int k_, int stride_, int pad_)
    : in_c(in_c_), out_c(out_c_), k(k_), stride(stride_), pad(pad_),
      w(in_c_, out_c_, k_, k_), b(Tensor::vec(out_c_)),
      gw(in_c_, out_c_, k_, k_), gb(Tensor::vec(out_c_)) {}

void ConvTranspose2d::init(Rng& rng) {
    const float lim = glorot_limit(in_c * k * k, out_c * k * k);
    fill_uniform(w, rng, -lim, lim);
    b.zero();
}

Tensor ConvTranspose2d::fwd(const Tensor& x, Scratch& sc) const {
    const int oh = out_h(x.h), ow = stride * (x.w - 1) + k - 2 * pad;
    const int okk = out_c * k * k, ihw = x.h * x.w;
    Tensor y(x.n, out_c, oh, ow);
    sc.cols.resize(static_cast<size_t>(okk) * ihw);
    for (int i = 0; i < x.n; ++i) {
        gemm_tn(okk, ihw, in_c, w.data(), x.at(i), sc.cols.data());
        col2im(sc.cols.data(), out_c, oh, ow, k, stride, pad, x.h, x.w, y.at(i));
        add_bias_plane(y.at(i), b.data(), out_c, oh * ow);
    }
    return y;
}

Tensor ConvTranspose2d::bwd(const Tensor& x, const Tensor& dy, Scratch& sc, bool want_dx) {
    const int okk = out_c * k * k, ihw = x.h * x.w;
    sc.cols.resize(static_cast<size_t>(okk) * ihw);
    Tensor dx;
    if (want_dx) dx = Tensor(x.n, in_c, x.h, x.w);
    for (int i = 0; i < x.n; ++i) {
        im2col(dy.at(i), out_c, dy.h, dy.w, k, stride, pad, x.h, x.w, sc.cols.data());
        gemm_nt(in_c, okk, ihw, x.at(i), sc.cols.data(), gw.data(), 1.0f);
        accum_bias_grad(dy.at(i), gb.data(), out_c, dy.h * dy.w);
        if (want_dx) gemm_nn(in_c, ihw, okk, w.data(), sc.cols.data(), dx.at(i));
    }
    return dx;
}

// ----------------------------------------------------------- BatchNorm2d

BatchNorm2d::BatchNorm2d(int c_)
    : c(c_), gamma(Tensor::vec(c_)), beta(Tensor::vec(c_)),
      ggamma(Tensor::vec(c_)), gbeta(Tensor::vec(c_)),
      run_mean(c_, 0.0f), run_var(c_, 1.0f) {
    gamma.fill(1.0f);
}

Tensor BatchNorm2d::fwd_batch_stats(const Tensor& x, Cache& cc) const {
    const int hw = x.h * x.w;
    const double cnt = static_cast<double>(x.n) * hw;
    cc.xhat = Tensor(x.n, x.c, x.h, x.w);
    cc.inv_std.assign(c, 0.0f);
    cc.mean.assign(c, 0.0f);
    cc.var.assign(c, 0.0f);
    Tensor y(x.n, x.c, x.h, x.w);
    for (int j = 0; j < c; ++j) {
        double s = 0.0, s2 = 0.0;
        for (int i = 0; i < x.n; ++i) {
            const float* p = x.plane(i, j);
            for (int t = 0; t < hw; ++t) {
                s += p[t];
                s2 += static_cast<double>(p[t]) * p[t];
            }
        }
        const double mean = s / cnt;
        const double var = std::max(0.0, s2 / cnt - mean * mean);
        const float istd = static_cast<float>(1.0 / std::sqrt(var + eps));
        cc.inv_std[j] = istd;
        cc.mean[j] = static_cast<float>(mean);
        cc.var[j] = static_cast<float>(var);
        const float mf = static_cast<float>(mean);
        const float g = gamma.v[j], bb = beta.v[j];
        for (int i = 0; i < x.n; ++i) {
            const float* p = x.plane(i, j);
            float* xh = cc.xhat.plane(i, j);
            float* yo = y.plane(i, j);
            for (int t = 0; t < hw; ++t) {
                const float xn = (p[t] - mf) * istd;
                xh[t] = xn;
                yo[t] = g * xn + bb;
            }
        }
    }
    return y;
}

Tensor BatchNorm2d::fwd_batch(const Tensor& x, Cache& cc) {
    Tensor y = fwd_batch_stats(x, cc);
    for (int j = 0; j < c; ++j) {
        run_mean[j] = momentum * run_mean[j] + (1.0f - momentum) * cc.mean[j];
        run_var[j] = momentum * run_var[j] + (1.0f - momentum) * cc.var[j];
    }
    return y;
}

Tensor BatchNorm2d::fwd_frozen(const Tensor& x) const {
    const int hw = x.h * x.w;
    Tensor y(x.n, x.c, x.h, x.w);
    for (int j = 0; j < c; ++j) {
        const float istd = 1.0f / std::sqrt(run_var[j] + eps);
        const float g = gamma.v[j] * istd;
        const float bb = beta.v[j] - gamma.v[j] * istd * run_mean[j];
        for (int i = 0; i < x.n; ++i) {
            const float* p = x.plane(i, j);
            float* yo = y.plane(i, j);
            for (int t = 0; t < hw; ++t) yo[t] = g * p[t] + bb;
        }
    }
    return y;
}

Tensor BatchNorm2d::bwd_batch(const Tensor& dy, const Cache& cc) {
    const int hw = dy.h * dy.w;
    const double cnt = static_cast<double>(dy.n) * hw;
    Tensor dx(dy.n, dy.c, dy.h, dy.w);
    for (int j = 0; j < c; ++j) {
        double s1 = 0.0, s2 = 0.0;
        for (int i = 0; i < dy.n; ++i) {
            const float* d = dy.plane(i, j);
            const float* xh = cc.xhat.plane(i, j);
            for (int t = 0; t < hw; ++t) {
                s1 += d[t];
                s2 += static_cast<double>(d[t]) * xh[t];
            }
        }
        gbeta.v[j] += static_cast<float>(s1);
        ggamma.v[j] += static_cast<float>(s2);
        const float g_istd = gamma.v[j] * cc.inv_std[j];
        const float m1 = static_cast<float>(s1 / cnt), m2 = static_cast<float>(s2 / cnt);
        for (int i = 0; i < dy.n; ++i) {
            const float* d = dy.plane(i, j);
            const float* xh = cc.xhat.plane(i, j);
            float* o = dx.plane(i, j);
            for (int t = 0; t < hw; ++t) o[t] = g_istd * (d[t] - m1 - xh[t] * m2);
        }
    }
    return dx;
}

Tensor BatchNorm2d::bwd_batch_data(const Tensor& dy, const Cache& cc) const {
    const int hw = dy.h * dy.w;
    const double cnt = static_cast<double>(dy.n) * hw;
    Tensor dx(dy.n, dy.c, dy.h, dy.w);
    for (int j = 0; j < c; ++j) {
        double s1 = 0.0, s2 = 0.0;
        for (int i = 0; i < dy.n; ++i) {
            const float* d = dy.plane(i, j);
            const float* xh = cc.xhat.plane(i, j);
            for (int t = 0; t < hw; ++t) {
                s1 += d[t];
                s2 += static_cast<double>(d[t]) * xh[t];
            }
        }
        const float g_istd = gamma.v[j] * cc.inv_std[j];
        const float m1 = static_cast<float>(s1 / cnt), m2 = static_cast<float>(s2 / cnt);
        for (int i = 0; i < dy.n; ++i) {
            const float* d = dy.plane(i, j);
            const float* xh = cc.xhat.plane(i, j);
            float* o = dx.plane(i, j);
            for (int t = 0; t < hw; ++t) o[t] = g_istd * (d[t] - m1 - xh[t] * m2);
        }
    }
    return dx;
}

Tensor BatchNorm2d::bwd_frozen_data(const Tensor& dy) const {
    const int hw = dy.h * dy.w;
    Tensor dx(dy.n, dy.c, dy.h, dy.w);
    for (int j = 0; j < c; ++j) {
        const float g = gamma.v[j] / std::sqrt(run_var[j] + eps);
        for (int i = 0; i < dy.n; ++i) {
            const float* d = dy.plane(i, j);
            float* o = dx.plane(i, j);
            for (int t = 0; t < hw; ++t) o[t] = g * d[t];
        }
    }
    return dx;
}

// ----------------------------------------------------------------- Dense

Dense::Dense(int in_d_, int out_d_)
    : in_d(in_d_), out_d(out_d_), w(out_d_, in_d_, 1, 1), b(Tensor::vec(out_d_)),
      gw(out_d_, in_d_, 1, 1), gb(Tensor::vec(out_d_)) {}

void Dense::init(Rng& rng) {
    const float lim = glorot_limit(in_d, out_d);
    fill_uniform(w, rng, -lim, lim);
    b.zero();
}

Tensor Dense::fwd(const Tensor& x) const {
    Tensor y(x.n, out_d, 1, 1);
    gemm_nt(x.n, out_d, in_d, x.data(), w.data(), y.data());
    for (int i = 0; i < x.n; ++i)
        for (int j = 0; j < out_d; ++j) y.at(i)[j] += b.v[j];
    return y;
}

Tensor Dense::bwd(const Tensor& x, const Tensor& dy, bool want_dx) {
    gemm_tn(out_d, in_d, x.n, dy.data(), x.data(), gw.data(), 1.0f);
    for (int i = 0; i < x.n; ++i)
        for (int j = 0; j < out_d; ++j) gb.v[j] += dy.at(i)[j];
    if (!want_dx) return Tensor();
    Tensor dx(x.n, in_d, 1, 1);
    gemm_nn(x.n, in_d, out_d, dy.data(), w.data(), dx.data());
    return dx;
}

Tensor Dense::bwd_data(const Tensor& dy) const {
    Tensor dx(dy.n, in_d, 1, 1);
    gemm_nn(dy.n, in_d, out_d, dy.data(), w.data(), dx.data());
    return dx;
}

// ------------------------------------------------------------ MaxPool2x2

Tensor MaxPool2x2::fwd(const Tensor& x, Cache& cc) {
    const int oh = x.h / 2, ow = x.w / 2;
    Tensor y(x.n, x.c, oh, ow);
    cc.n = x.n; cc.c = x.c; cc.h = x.h; cc.w = x.w;
    cc.arg.assign(static_cast<size_t>(x.n) * x.c * oh * ow, 0);
    size_t oi = 0;
    for (int i = 0; i < x.n; ++i) {
        for (int j = 0; j < x.c; ++j) {
            const float* p = x.plane(i, j);
            float* yo = y.plane(i, j);
            for (int a = 0; a < oh; ++a) {
                for (int bcol = 0; bcol < ow; ++bcol) {
                    const int base = (2 * a) * x.w + 2 * bcol;
                    int best = base;
                    float bv = p[base];
                    const int cand[3] = {base + 1, base + x.w, base + x.w + 1};
                    for (int t = 0; t < 3; ++t)
                        if (p[cand[t]] > bv) { bv = p[cand[t]]; best = cand[t]; }
                    yo[a * ow + bcol] = bv;
                    cc.arg[oi++] = best;
                }
            }
        }
    }
    return y;
}

Tensor MaxPool2x2::bwd(const Tensor& dy, const Cache& cc) {
    Tensor dx(cc.n, cc.c, cc.h, cc.w);
    size_t oi = 0;
    for (int i = 0; i < cc.n; ++i)
        for (int j = 0; j < cc.c; ++j) {
            float* o = dx.plane(i, j);
            const float* d = dy.plane(i, j);
            const int ohw = (cc.h / 2) * (cc.w / 2);
            for (int t = 0; t < ohw; ++t) o[cc.arg[oi++]] += d[t];
        }
    return dx;
}

// ------------------------------------------------------- pooling & noise

Tensor global_avg_pool(const Tensor& x) {
    Tensor y(x.n, x.c, 1, 1);
    const int hw = x.h * x.w;
    for (int i = 0; i < x.n; ++i)
        for (int j = 0; j < x.c; ++j) {
            const float* p = x.plane(i, j);
            double s = 0.0;
            for (int t = 0; t < hw; ++t) s += p[t];
            y.at(i)[j] = static_cast<float>(s / hw);
        }
    return y;
}

Tensor global_avg_pool_bwd(const Tensor& dy, int h, int w) {
    Tensor dx(dy.n, dy.c, h, w);
    const float inv = 1.0f / (h * w);
    for (int i = 0; i < dy.n; ++i)
        for (int j = 0; j < dy.c; ++j) {
            const float g = dy.at(i)[j] * inv;
            float* o = dx.plane(i, j);
            for (int t = 0; t < h * w; ++t) o[t] = g;
        }
    return dx;
}

Tensor dropout_fwd(const Tensor& x, float p, Rng& rng, Tensor& mask_out) {
    mask_out = Tensor(x.n, x.c, x.h, x.w);
    Tensor y(x.n, x.c, x.h, x.w);
    const float scale = 1.0f / (1.0f - p);
    for (size_t i = 0; i < x.numel(); ++i) {
        const float m = rng.u01() < p ? 0.0f : scale;
        mask_out.v[i] = m;
        y.v[i] = x.v[i] * m;
    }
    return y;
}

Tensor dropout_bwd(const Tensor& dy, const Tensor& mask) {
    Tensor dx(dy.n, dy.c, dy.h, dy.w);
    for (size_t i = 0; i < dy.numel(); ++i) dx.v[i] = dy.v[i] * mask.v[i];
    return dx;
}

// ------------------------------------------------------------ activations

Tensor relu(const Tensor& x) {
    Tensor y = x;
    for (float& v : y.v) v = v > 0.0f ? v : 0.0f;
    return y;
}
Tensor relu_bwd(const Tensor& x, const Tensor& dy) {
    Tensor dx(dy.n, dy.c, dy.h, dy.w);
    for (size_t i = 0; i < dy.numel(); ++i) dx.v[i] = x.v[i] > 0.0f ? dy.v[i] : 0.0f;
    return dx;
}
Tensor leaky_relu(const Tensor& x, float slope) {
    Tensor y = x;
    for (float& v : y.v) v = v > 0.0f ? v : slope * v;
    return y;
}
Tensor leaky_relu_bwd(const Tensor& x, const Tensor& dy, float slope) {
    Tensor dx(dy.n, dy.c, dy.h, dy.w);
    for (size_t i = 0; i < dy.numel(); ++i)
        dx.v[i] = x.v[i] > 0.0f ? dy.v[i] : slope * dy.v[i];
    return dx;
}
Tensor tanh_act(const Tensor& x) {
    Tensor y = x;
    for (float& v : y.v) v = std::tanh(v);
    return y;
}
Tensor tanh_bwd(const Tensor& y, const Tensor& dy) {
    Tensor dx(dy.n, dy.c, dy.h, dy.w);
    for (size_t i = 0; i < dy.numel(); ++i) dx.v[i] = dy.v[i] * (1.0f - y.v[i] * y.v[i]);
    return dx;
}
Tensor sigmoid(const Tensor& x) {
    Tensor y = x;
    for (float& v : y.v) v = 1.0f / (1.0f + std::exp(-v));
    return y;
}
Tensor sigmoid_bwd(const Tensor& y, const Tensor& dy) {
    Tensor dx(dy.n, dy.c, dy.h, dy.w);
    for (size_t i = 0; i < dy.numel(); ++i) dx.v[i] = dy.v[i] * y.v[i] * (1.0f - y.v[i]);
    return dx;
}

void softmax_rows(Tensor& logits) {
    for (int i = 0; i < logits.n; ++i) {
        float* p = logits.at(i);
        float m = p[0];
        for (int j = 1; j < logits.c; ++j) m = std::max(m, p[j]);
        double s = 0.0;
        for (int j = 0; j < logits.c; ++j) {
            p[j] = std::exp(p[j] - m);
            s += p[j];
        }
        for (int j = 0; j < logits.c; ++j) p[j] = static_cast<float>(p[j] / s);
    }
}

// ------------------------------------------------------------- Embedding

Embedding::Embedding(int num_, int dim_)
    : num(num_), dim(dim_), w(num_, dim_, 1, 1), gw(num_, dim_, 1, 1) {}

void Embedding::init(Rng& rng) { fill_uniform(w, rng, -0.05f, 0.05f); }

Tensor embedding_plane(const Embedding& e, int label, int side) {
    Tensor y(1, 1, side, side);
    std::memcpy(y.data(), e.w.at(label), sizeof(float) * e.dim);
    return y;
}

void embedding_plane_bwd(Embedding& e, int label, const Tensor& dplane) {
    float* g = e.gw.at(label);
    for (int i = 0; i < e.dim; ++i) g[i] += dplane.v[i];
}

Tensor upsample_nearest(const Tensor& x, int factor) {
    Tensor y(x.n, x.c, x.h * factor, x.w * factor);
    for (int i = 0; i < x.n; ++i)
        for (int j = 0; j < x.c; ++j) {
            const float* p = x.plane(i, j);
            float* yo = y.plane(i, j);
            for (int a = 0; a < y.h; ++a) {
                const float* prow = p + (a / factor) * x.w;
                float* yrow = yo + static_cast<size_t>(a) * y.w;
                for (int bcol = 0; bcol < y.w; ++bcol) yrow[bcol] = prow[bcol / factor];
            }
        }
    return y;
}

Tensor upsample_nearest_bwd(const Tensor& dy, int factor) {
    Tensor dx(dy.n, dy.c, dy.h / factor, dy.w / factor);
    for (int i = 0; i < dy.n; ++i)
        for (int j = 0; j < dy.c; ++j) {
            const float* d = dy.plane(i, j);
            float* o = dx.plane(i, j);
            for (int a = 0; a < dy.h; ++a)
                for (int bcol = 0; bcol < dy.w; ++bcol)
                    o[(a / factor) * dx.w + bcol / factor] +=
                        d[static_cast<size_t>(a) * dy.w + bcol];
        }
    return dx;
}

// ------------------------------------------------------------------ Adam

void Adam::add(Tensor& p, Tensor& g) {
    slots.push_back({&p, &g, std::vector<float>(p.numel(), 0.0f),
                     std::vector<float>(p.numel(), 0.0f)});
}

void Adam::zero_grads() {
    for (auto& s : slots) s.g->zero();
}

void Adam::step() {
    ++t;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t));
    for (auto& s : slots) {
        float* p = s.p->data();
        const float* g = s.g->data();
        for (size_t i = 0; i < s.p->numel(); ++i) {
            s.m[i] = static_cast<float>(b1 * s.m[i] + (1.0 - b1) * g[i]);
            s.v[i] = static_cast<float>(b2 * s.v[i] + (1.0 - b2) * static_cast<double>(g[i]) * g[i]);
            const double mh = s.m[i] / bc1, vh = s.v[i] / bc2;
            p[i] -= static_cast<float>(lr * mh / (std::sqrt(vh) + eps));
        }
    }
}

}  // namespace afx
