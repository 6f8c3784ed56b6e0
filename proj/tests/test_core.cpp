#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "afx/blas.hpp"
#include "afx/nn.hpp"
#include "afx/rng.hpp"
#include "afx/runtime.hpp"
#include "afx/tensor.hpp"
#include "support/oracles.hpp"

using namespace afx;

namespace {
const int kInit = [] {
    init_compute_quiet();
    return 0;
}();

bool close(double a, double b, double rel, double abs_floor) {
    return std::abs(a - b) <= std::max(rel * std::max(std::abs(a), std::abs(b)), abs_floor);
}
}  // namespace

TEST_CASE("gemm wrappers match a direct triple loop") {
    Rng rng(7);
    const int m = 5, k = 7, n = 6;
    std::vector<float> a(m * k), b(k * n), c(m * n);
    std::vector<double> ad(m * k), bd(k * n);
    for (int i = 0; i < m * k; ++i) ad[i] = a[i] = rng.uniform(-1, 1);
    for (int i = 0; i < k * n; ++i) bd[i] = b[i] = rng.uniform(-1, 1);
    const auto ref = oracle::gemm(ad, bd, m, k, n);

    gemm_nn(m, n, k, a.data(), b.data(), c.data(), 0.0f);
    for (int i = 0; i < m * n; ++i) CHECK(c[i] == doctest::Approx(ref[i]).epsilon(1e-5));

    // A stored transposed (k x m).
    std::vector<float> at(k * m);
    for (int i = 0; i < m; ++i)
        for (int t = 0; t < k; ++t) at[t * m + i] = a[i * k + t];
    gemm_tn(m, n, k, at.data(), b.data(), c.data(), 0.0f);
    for (int i = 0; i < m * n; ++i) CHECK(c[i] == doctest::Approx(ref[i]).epsilon(1e-5));

    // B stored transposed (n x k).
    std::vector<float> bt(n * k);
    for (int t = 0; t < k; ++t)
        for (int j = 0; j < n; ++j) bt[j * k + t] = b[t * n + j];
    gemm_nt(m, n, k, a.data(), bt.data(), c.data(), 0.0f);
    for (int i = 0; i < m * n; ++i) CHECK(c[i] == doctest::Approx(ref[i]).epsilon(1e-5));
}

TEST_CASE("conv2d forward matches direct convolution") {
    Rng rng(11);
    for (auto [ic, oc, k, s, p, hw] : {std::tuple{1, 4, 3, 1, 1, 8}, std::tuple{3, 2, 4, 2, 1, 8},
                                       std::tuple{2, 5, 4, 2, 1, 16}, std::tuple{2, 3, 1, 1, 0, 6}}) {
        Conv2d cv(ic, oc, k, s, p);
        cv.init(rng);
        Tensor x(2, ic, hw, hw);
        oracle::fill_uniform(x, rng, -1, 1);
        Scratch sc;
        const Tensor y = cv.fwd(x, sc);
        const Tensor ref = oracle::conv2d(x, cv.w, cv.b, s, p);
        REQUIRE(y.same_shape(ref));
        for (size_t i = 0; i < y.numel(); ++i)
            CHECK(y.v[i] == doctest::Approx(ref.v[i]).epsilon(1e-4));
    }
}

TEST_CASE("conv2d backward matches finite differences") {
    Rng rng(13);
    Conv2d cv(2, 3, 3, 2, 1);
    cv.init(rng);
    Tensor x(1, 2, 6, 6);
    oracle::fill_uniform(x, rng, -1, 1);
    Tensor wsum(1, 3, 3, 3);
    oracle::fill_uniform(wsum, rng, -1, 1);
    Scratch sc;
    auto loss = [&] {
        const Tensor y = cv.fwd(x, sc);
        double s = 0;
        for (size_t i = 0; i < y.numel(); ++i) s += static_cast<double>(wsum.v[i]) * y.v[i];
        return s;
    };
    const Tensor y = cv.fwd(x, sc);
    cv.gw.zero();
    cv.gb.zero();
    const Tensor dx = cv.bwd(x, wsum, sc);

    for (size_t i : oracle::largest_magnitude(cv.gw, 6))
        CHECK(close(oracle::central_diff(cv.w.v[i], 1e-3, loss), cv.gw.v[i], 2e-3, 2e-4));
    for (size_t i : oracle::largest_magnitude(cv.gb, 2))
        CHECK(close(oracle::central_diff(cv.b.v[i], 1e-3, loss), cv.gb.v[i], 2e-3, 2e-4));
    for (size_t i : oracle::largest_magnitude(dx, 6))
        CHECK(close(oracle::central_diff(x.v[i], 1e-3, loss), dx.v[i], 2e-3, 2e-4));
}

TEST_CASE("conv transpose forward matches direct scatter") {
    Rng rng(17);
    for (auto [ic, oc, k, s, p, hw] : {std::tuple{3, 2, 4, 2, 1, 4}, std::tuple{2, 4, 4, 2, 1, 8},
                                       std::tuple{2, 2, 3, 1, 1, 5}}) {
        ConvTranspose2d ct(ic, oc, k, s, p);
        ct.init(rng);
        Tensor x(2, ic, hw, hw);
        oracle::fill_uniform(x, rng, -1, 1);
        Scratch sc;
        const Tensor y = ct.fwd(x, sc);
        const Tensor ref = oracle::conv_transpose2d(x, ct.w, ct.b, s, p);
        REQUIRE(y.same_shape(ref));
        for (size_t i = 0; i < y.numel(); ++i)
            CHECK(y.v[i] == doctest::Approx(ref.v[i]).epsilon(1e-4));
    }
}

TEST_CASE("conv transpose backward matches finite differences") {
    Rng rng(19);
    ConvTranspose2d ct(3, 2, 4, 2, 1);
    ct.init(rng);
    Tensor x(1, 3, 4, 4);
    oracle::fill_uniform(x, rng, -1, 1);
    Tensor wsum(1, 2, 8, 8);
    oracle::fill_uniform(wsum, rng, -1, 1);
    Scratch sc;
    auto loss = [&] {
        const Tensor y = ct.fwd(x, sc);
        double s = 0;
        for (size_t i = 0; i < y.numel(); ++i) s += static_cast<double>(wsum.v[i]) * y.v[i];
        return s;
    };
    ct.gw.zero();
    ct.gb.zero();
    const Tensor dx = ct.bwd(x, wsum, sc);
    for (size_t i : oracle::largest_magnitude(ct.gw, 6))
        CHECK(close(oracle::central_diff(ct.w.v[i], 1e-3, loss), ct.gw.v[i], 2e-3, 2e-4));
    for (size_t i : oracle::largest_magnitude(ct.gb, 2))
        CHECK(close(oracle::central_diff(ct.b.v[i], 1e-3, loss), ct.gb.v[i], 2e-3, 2e-4));
    for (size_t i : oracle::largest_magnitude(dx, 6))
        CHECK(close(oracle::central_diff(x.v[i], 1e-3, loss), dx.v[i], 2e-3, 2e-4));
}

TEST_CASE("batch norm: batch statistics forward and backward") {
    Rng rng(23);
    BatchNorm2d bn(3);
    for (int c = 0; c < 3; ++c) {
        bn.gamma.v[c] = rng.uniform(0.5f, 1.5f);
        bn.beta.v[c] = rng.uniform(-0.5f, 0.5f);
    }
    Tensor x(2, 3, 4, 4);
    oracle::fill_uniform(x, rng, -2, 2);

    BatchNorm2d::Cache cc;
    const Tensor y = bn.fwd_batch_stats(x, cc);

    // Per-channel normalisation: mean ~ beta, variance ~ gamma^2 (up to eps).
    for (int c = 0; c < 3; ++c) {
        double mean = 0, var = 0;
        for (int n = 0; n < 2; ++n)
            for (int t = 0; t < 16; ++t) mean += y.plane(n, c)[t];
        mean /= 32;
        for (int n = 0; n < 2; ++n)
            for (int t = 0; t < 16; ++t) var += (y.plane(n, c)[t] - mean) * (y.plane(n, c)[t] - mean);
        var /= 32;
        CHECK(mean == doctest::Approx(bn.beta.v[c]).epsilon(1e-4));
        CHECK(std::sqrt(var) ==
              doctest::Approx(std::abs(bn.gamma.v[c]) *
                              std::sqrt(cc.var[c] / (cc.var[c] + bn.eps)))
                  .epsilon(1e-3));
    }

    Tensor wsum(2, 3, 4, 4);
    oracle::fill_uniform(wsum, rng, -1, 1);
    auto loss = [&] {
        BatchNorm2d::Cache tmp;
        const Tensor z = bn.fwd_batch_stats(x, tmp);
        double s = 0;
        for (size_t i = 0; i < z.numel(); ++i) s += static_cast<double>(wsum.v[i]) * z.v[i];
        return s;
    };
    bn.ggamma.zero();
    bn.gbeta.zero();
    const Tensor dx = bn.bwd_batch(wsum, cc);
    for (size_t i : oracle::largest_magnitude(dx, 8))
        CHECK(close(oracle::central_diff(x.v[i], 1e-3, loss), dx.v[i], 2e-3, 2e-4));
    for (size_t i : oracle::largest_magnitude(bn.ggamma, 2))
        CHECK(close(oracle::central_diff(bn.gamma.v[i], 1e-3, loss), bn.ggamma.v[i], 2e-3, 2e-4));
    for (size_t i : oracle::largest_magnitude(bn.gbeta, 2))
        CHECK(close(oracle::central_diff(bn.beta.v[i], 1e-3, loss), bn.gbeta.v[i], 2e-3, 2e-4));
}

TEST_CASE("batch norm: frozen forward uses running averages") {
    BatchNorm2d bn(1);
    bn.run_mean[0] = 0.5f;
    bn.run_var[0] = 4.0f;
    bn.gamma.v[0] = 2.0f;
    bn.beta.v[0] = 1.0f;
    Tensor x(1, 1, 1, 2);
    x.v = {2.5f, 0.5f};
    const Tensor y = bn.fwd_frozen(x);
    CHECK(y.v[0] == doctest::Approx(1.0f + 2.0f * 2.0f / std::sqrt(4.0f + bn.eps)).epsilon(1e-5));
    CHECK(y.v[1] == doctest::Approx(1.0f).epsilon(1e-5));

    // Gradient of the frozen transform is diagonal: gamma / sqrt(var + eps).
    Tensor dy(1, 1, 1, 2);
    dy.v = {1.0f, -2.0f};
    const Tensor dx = bn.bwd_frozen_data(dy);
    const float scale = 2.0f / std::sqrt(4.0f + bn.eps);
    CHECK(dx.v[0] == doctest::Approx(scale).epsilon(1e-5));
    CHECK(dx.v[1] == doctest::Approx(-2.0f * scale).epsilon(1e-5));
}

TEST_CASE("batch norm: fwd_batch updates running stats with momentum 0.99") {
    BatchNorm2d bn(1);
    Tensor x(1, 1, 1, 4);
    x.v = {1.0f, 2.0f, 3.0f, 4.0f};
    BatchNorm2d::Cache cc;
    bn.fwd_batch(x, cc);
    CHECK(bn.run_mean[0] == doctest::Approx(0.99f * 0.0f + 0.01f * 2.5f).epsilon(1e-6));
    CHECK(bn.run_var[0] == doctest::Approx(0.99f * 1.0f + 0.01f * 1.25f).epsilon(1e-6));
}

TEST_CASE("dense layer backward matches finite differences") {
    Rng rng(29);
    Dense d(5, 3);
    d.init(rng);
    Tensor x(2, 5, 1, 1);
    oracle::fill_uniform(x, rng, -1, 1);
    Tensor wsum(2, 3, 1, 1);
    oracle::fill_uniform(wsum, rng, -1, 1);
    auto loss = [&] {
        const Tensor y = d.fwd(x);
        double s = 0;
        for (size_t i = 0; i < y.numel(); ++i) s += static_cast<double>(wsum.v[i]) * y.v[i];
        return s;
    };
    d.gw.zero();
    d.gb.zero();
    const Tensor dx = d.bwd(x, wsum);
    for (size_t i : oracle::largest_magnitude(d.gw, 6))
        CHECK(close(oracle::central_diff(d.w.v[i], 1e-3, loss), d.gw.v[i], 2e-3, 2e-4));
    for (size_t i : oracle::largest_magnitude(d.gb, 2))
        CHECK(close(oracle::central_diff(d.b.v[i], 1e-3, loss), d.gb.v[i], 2e-3, 2e-4));
    for (size_t i : oracle::largest_magnitude(dx, 4))
        CHECK(close(oracle::central_diff(x.v[i], 1e-3, loss), dx.v[i], 2e-3, 2e-4));
}

TEST_CASE("max pool 2x2 forward and scatter backward") {
    Tensor x(1, 1, 4, 4);
    x.v = {1, 2, 5, 4, 3, 0, 1, 1, 9, 8, 2, 2, 7, 6, 3, 1};
    MaxPool2x2::Cache cc;
    const Tensor y = MaxPool2x2::fwd(x, cc);
    CHECK(y.h == 2);
    CHECK(y.v[0] == 3.0f);
    CHECK(y.v[1] == 5.0f);
    CHECK(y.v[2] == 9.0f);
    CHECK(y.v[3] == 3.0f);
    Tensor dy(1, 1, 2, 2);
    dy.v = {1, 2, 3, 4};
    const Tensor dx = MaxPool2x2::bwd(dy, cc);
    CHECK(dx.v[4] == 1.0f);   // position of 3
    CHECK(dx.v[2] == 2.0f);   // position of 5
    CHECK(dx.v[8] == 3.0f);   // position of 9
    CHECK(dx.v[14] == 4.0f);  // position of 3 (bottom-right block)
    double total = 0;
    for (float v : dx.v) total += v;
    CHECK(total == doctest::Approx(10.0));
}

TEST_CASE("global average pool and its backward") {
    Tensor x(1, 2, 2, 2);
    x.v = {1, 2, 3, 4, -1, -2, -3, -4};
    const Tensor y = global_avg_pool(x);
    CHECK(y.v[0] == doctest::Approx(2.5));
    CHECK(y.v[1] == doctest::Approx(-2.5));
    Tensor dy(1, 2, 1, 1);
    dy.v = {4.0f, 8.0f};
    const Tensor dx = global_avg_pool_bwd(dy, 2, 2);
    CHECK(dx.v[0] == doctest::Approx(1.0));
    CHECK(dx.v[7] == doctest::Approx(2.0));
}

TEST_CASE("activation forwards and backwards") {
    Tensor x(1, 1, 1, 4);
    x.v = {-2.0f, -0.5f, 0.5f, 2.0f};

    const Tensor r = relu(x);
    CHECK(r.v[0] == 0.0f);
    CHECK(r.v[3] == 2.0f);
    const Tensor l = leaky_relu(x, 0.2f);
    CHECK(l.v[0] == doctest::Approx(-0.4));
    CHECK(l.v[2] == doctest::Approx(0.5));

    Tensor dy(1, 1, 1, 4);
    dy.v = {1, 1, 1, 1};
    const Tensor dr = relu_bwd(x, dy);
    CHECK(dr.v[1] == 0.0f);
    CHECK(dr.v[2] == 1.0f);
    const Tensor dl = leaky_relu_bwd(x, dy, 0.2f);
    CHECK(dl.v[0] == doctest::Approx(0.2));
    CHECK(dl.v[3] == doctest::Approx(1.0));

    const Tensor t = tanh_act(x);
    const Tensor dt = tanh_bwd(t, dy);
    for (int i = 0; i < 4; ++i) {
        CHECK(t.v[i] == doctest::Approx(std::tanh(x.v[i])).epsilon(1e-6));
        CHECK(dt.v[i] == doctest::Approx(1.0 - std::tanh(x.v[i]) * std::tanh(x.v[i])).epsilon(1e-5));
    }
    const Tensor s = sigmoid(x);
    const Tensor ds = sigmoid_bwd(s, dy);
    for (int i = 0; i < 4; ++i) {
        const double sv = 1.0 / (1.0 + std::exp(-x.v[i]));
        CHECK(s.v[i] == doctest::Approx(sv).epsilon(1e-6));
        CHECK(ds.v[i] == doctest::Approx(sv * (1 - sv)).epsilon(1e-5));
    }
}

TEST_CASE("softmax rows: normalisation and shift invariance") {
    Tensor z(2, 2, 1, 1);
    z.v = {1.0f, 3.0f, -40.0f, 42.0f};
    softmax_rows(z);
    CHECK(z.v[0] + z.v[1] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(z.v[1] == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-6));
    CHECK(z.v[2] + z.v[3] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(z.v[3] > 0.999f);
}

TEST_CASE("dropout: inverted mask, determinism, backward") {
    Rng rng(31);
    Tensor x(1, 1, 8, 8);
    x.fill(1.0f);
    Tensor mask;
    const Tensor y = dropout_fwd(x, 0.5f, rng, mask);
    int kept = 0;
    for (size_t i = 0; i < y.numel(); ++i) {
        CHECK((y.v[i] == 0.0f || y.v[i] == 2.0f));
        CHECK(mask.v[i] == y.v[i]);  // x is all ones
        kept += y.v[i] != 0.0f;
    }
    CHECK(kept > 8);
    CHECK(kept < 56);

    Rng rng2(31);
    Tensor mask2;
    const Tensor y2 = dropout_fwd(x, 0.5f, rng2, mask2);
    CHECK(y2.v == y.v);

    Tensor dy(1, 1, 8, 8);
    dy.fill(3.0f);
    const Tensor dx = dropout_bwd(dy, mask);
    for (size_t i = 0; i < dx.numel(); ++i) CHECK(dx.v[i] == 3.0f * mask.v[i]);
}

TEST_CASE("embedding plane lookup and gradient routing") {
    Embedding e(2, 16);
    Rng rng(37);
    e.init(rng);
    const Tensor p1 = embedding_plane(e, 1, 4);
    CHECK(p1.h == 4);
    CHECK(p1.w == 4);
    for (int i = 0; i < 16; ++i) CHECK(p1.v[i] == e.w.v[16 + i]);

    e.gw.zero();
    Tensor dp(1, 1, 4, 4);
    for (int i = 0; i < 16; ++i) dp.v[i] = static_cast<float>(i);
    embedding_plane_bwd(e, 1, dp);
    for (int i = 0; i < 16; ++i) {
        CHECK(e.gw.v[16 + i] == static_cast<float>(i));
        CHECK(e.gw.v[i] == 0.0f);  // row 0 untouched
    }
}

TEST_CASE("nearest upsample and block-sum backward") {
    Tensor x(1, 1, 2, 2);
    x.v = {1, 2, 3, 4};
    const Tensor y = upsample_nearest(x, 3);
    CHECK(y.h == 6);
    CHECK(y.plane(0, 0)[0] == 1.0f);
    CHECK(y.plane(0, 0)[2] == 1.0f);
    CHECK(y.plane(0, 0)[3] == 2.0f);
    CHECK(y.plane(0, 0)[5 * 6 + 5] == 4.0f);

    Tensor dy(1, 1, 6, 6);
    dy.fill(1.0f);
    const Tensor dx = upsample_nearest_bwd(dy, 3);
    for (int i = 0; i < 4; ++i) CHECK(dx.v[i] == 9.0f);
}

TEST_CASE("adam: bias-corrected first step has magnitude ~ lr") {
    Tensor p(1, 1, 1, 1), g(1, 1, 1, 1);
    p.v[0] = 1.0f;
    g.v[0] = 0.3f;
    Adam opt;
    opt.lr = 0.01;
    opt.add(p, g);
    opt.step();
    CHECK(p.v[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-3));

    // A quadratic descends to its minimum.
    p.v[0] = 2.0f;
    Adam opt2;
    opt2.lr = 0.05;
    opt2.add(p, g);
    for (int i = 0; i < 400; ++i) {
        g.v[0] = 2.0f * p.v[0];
        opt2.step();
    }
    CHECK(std::abs(p.v[0]) < 1e-2);
}

TEST_CASE("tensor helpers: concat/split round trip and axpy") {
    Rng rng(41);
    Tensor a(2, 3, 2, 2), b(2, 2, 2, 2);
    oracle::fill_uniform(a, rng, -1, 1);
    oracle::fill_uniform(b, rng, -1, 1);
    const Tensor c = concat_channels(a, b);
    CHECK(c.c == 5);
    CHECK(c.plane(1, 0)[0] == a.plane(1, 0)[0]);
    CHECK(c.plane(1, 3)[0] == b.plane(1, 0)[0]);
    Tensor a2(2, 3, 2, 2), b2(2, 2, 2, 2);
    split_channels(c, a2, b2);
    CHECK(a2.v == a.v);
    CHECK(b2.v == b.v);

    Tensor y = a;
    axpy(2.0f, a, y);
    for (size_t i = 0; i < y.numel(); ++i) CHECK(y.v[i] == doctest::Approx(3.0f * a.v[i]));
}

TEST_CASE("rng: seeded determinism and permutation validity") {
    Rng r1(123), r2(123);
    for (int i = 0; i < 100; ++i) CHECK(r1.next() == r2.next());
    std::vector<int> xs(50);
    for (int i = 0; i < 50; ++i) xs[i] = i;
    Rng r3(9);
    r3.shuffle(xs);
    std::vector<int> sorted = xs;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 50; ++i) CHECK(sorted[i] == i);
    bool moved = false;
    for (int i = 0; i < 50; ++i) moved |= xs[i] != i;
    CHECK(moved);
}
