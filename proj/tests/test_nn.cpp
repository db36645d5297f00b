#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "humanoid/nn.hpp"

using namespace humanoid;
using nn::Tensor;

namespace {

Tensor<double> randn(std::vector<int> shape, std::mt19937_64& rng,
                     double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  std::normal_distribution<double> d(0.0, scale);
  for (double& x : t.v) x = d(rng);
  return t;
}

// Test-local direct 6-loop convolution oracle (same padding).
Tensor<double> conv_oracle(const Tensor<double>& in, const Tensor<double>& k,
                           const Tensor<double>& b) {
  const int H = in.dim(0), W = in.dim(1), Ci = in.dim(2);
  const int Kh = k.dim(0), Kw = k.dim(1), Co = k.dim(3);
  Tensor<double> out({H, W, Co});
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int co = 0; co < Co; ++co) {
        double s = b.v[co];
        for (int ky = 0; ky < Kh; ++ky)
          for (int kx = 0; kx < Kw; ++kx)
            for (int ci = 0; ci < Ci; ++ci) {
              const int iy = y + ky - Kh / 2, ix = x + kx - Kw / 2;
              if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
              s += in.v[(size_t(iy) * W + ix) * Ci + ci] *
                   k.v[((size_t(ky) * Kw + kx) * Ci + ci) * Co + co];
            }
        out.v[(size_t(y) * W + x) * Co + co] = s;
      }
  return out;
}

}  // namespace

TEST_CASE("conv2d identity kernel reproduces input") {
  std::mt19937_64 rng(1);
  Tensor<double> in = randn({5, 7, 3}, rng);
  Tensor<double> k({1, 1, 3, 3});
  for (int c = 0; c < 3; ++c) k.v[size_t(c) * 3 + c] = 1.0;
  Tensor<double> b({3}), out;
  nn::conv2d_same(in, k, b, out);
  REQUIRE(out.shape == in.shape);
  for (size_t i = 0; i < in.size(); ++i) CHECK(out.v[i] == doctest::Approx(in.v[i]));
}

TEST_CASE("conv2d zero kernel broadcasts bias") {
  std::mt19937_64 rng(2);
  Tensor<double> in = randn({4, 4, 2}, rng);
  Tensor<double> k({3, 3, 2, 2}), b({2}), out;
  b.v = {0.5, -1.25};
  nn::conv2d_same(in, k, b, out);
  for (int p = 0; p < 16; ++p) {
    CHECK(out.v[size_t(p) * 2] == 0.5);
    CHECK(out.v[size_t(p) * 2 + 1] == -1.25);
  }
}

TEST_CASE("conv2d random 3x3 matches direct oracle") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor<double> in = randn({6, 5, 3}, rng);
    Tensor<double> k = randn({3, 3, 3, 4}, rng);
    Tensor<double> b = randn({4}, rng);
    Tensor<double> out;
    nn::conv2d_same(in, k, b, out);
    Tensor<double> want = conv_oracle(in, k, b);
    REQUIRE(out.size() == want.size());
    for (size_t i = 0; i < out.size(); ++i)
      CHECK(out.v[i] == doctest::Approx(want.v[i]).epsilon(1e-9));
  }
}

TEST_CASE("conv2d backward matches finite differences") {
  std::mt19937_64 rng(4);
  Tensor<double> in = randn({4, 3, 2}, rng);
  Tensor<double> k = randn({3, 3, 2, 3}, rng);
  Tensor<double> b = randn({3}, rng);
  Tensor<double> probe = randn({4, 3, 3}, rng);  // fixed loss weights
  auto loss = [&]() {
    Tensor<double> out;
    nn::conv2d_same(in, k, b, out);
    double s = 0;
    for (size_t i = 0; i < out.size(); ++i) s += probe.v[i] * out.v[i];
    return s;
  };
  Tensor<double> out;
  nn::conv2d_same(in, k, b, out);
  Tensor<double> gin(in.shape), gk(k.shape), gb(b.shape);
  nn::conv2d_same_backward(in, k, probe, gin, gk, gb);
  const double eps = 1e-6;
  auto fd = [&](double& slot) {
    const double v0 = slot;
    slot = v0 + eps;
    const double fp = loss();
    slot = v0 - eps;
    const double fm = loss();
    slot = v0;
    return (fp - fm) / (2 * eps);
  };
  for (size_t i = 0; i < in.size(); i += 5)
    CHECK(gin.v[i] == doctest::Approx(fd(in.v[i])).epsilon(1e-6));
  for (size_t i = 0; i < k.size(); i += 7)
    CHECK(gk.v[i] == doctest::Approx(fd(k.v[i])).epsilon(1e-6));
  for (size_t i = 0; i < b.size(); ++i)
    CHECK(gb.v[i] == doctest::Approx(fd(b.v[i])).epsilon(1e-6));
}

TEST_CASE("maxpool2 window examples and ceil geometry") {
  Tensor<double> in({2, 2, 1});
  in.v = {1, 2, 3, 4};
  Tensor<double> out;
  std::vector<int> am;
  nn::maxpool2(in, out, am);
  REQUIRE(out.shape == std::vector<int>{1, 1, 1});
  CHECK(out.v[0] == 4);
  CHECK(am[0] == 3);  // flat iy*W+ix

  Tensor<double> odd({5, 3, 1});
  for (size_t i = 0; i < odd.size(); ++i) odd.v[i] = double(i);
  nn::maxpool2(odd, out, am);
  CHECK(out.shape == std::vector<int>{3, 2, 1});
  // trailing single row/column windows
  CHECK(out.v[5] == 14.0);

  Tensor<double> flat({4, 4, 1});
  for (double& x : flat.v) x = 7.0;
  nn::maxpool2(flat, out, am);
  for (double x : out.v) CHECK(x == 7.0);
  CHECK(am[0] == 0);  // first row-major element wins ties
}

TEST_CASE("maxpool2 backward matches finite differences") {
  std::mt19937_64 rng(5);
  Tensor<double> in = randn({5, 5, 2}, rng);  // continuous => no ties
  Tensor<double> probe = randn({3, 3, 2}, rng);
  auto loss = [&]() {
    Tensor<double> out;
    std::vector<int> am;
    nn::maxpool2(in, out, am);
    double s = 0;
    for (size_t i = 0; i < out.size(); ++i) s += probe.v[i] * out.v[i];
    return s;
  };
  Tensor<double> out, gin(in.shape);
  std::vector<int> am;
  nn::maxpool2(in, out, am);
  nn::maxpool2_backward(probe, am, gin);
  const double eps = 1e-6;
  for (size_t i = 0; i < in.size(); ++i) {
    const double v0 = in.v[i];
    in.v[i] = v0 + eps;
    const double fp = loss();
    in.v[i] = v0 - eps;
    const double fm = loss();
    in.v[i] = v0;
    CHECK(gin.v[i] == doctest::Approx((fp - fm) / (2 * eps)).epsilon(1e-6));
  }
}

TEST_CASE("deconv2_s2 zero input and single-tap kernel placement") {
  Tensor<double> in({1, 1, 1});
  Tensor<double> k({4, 4, 1, 1});
  for (size_t i = 0; i < k.size(); ++i) k.v[i] = double(i + 1);
  Tensor<double> b({1}), out;
  nn::deconv2_s2(in, k, b, out);  // zero input
  REQUIRE(out.shape == std::vector<int>{2, 2, 1});
  for (double x : out.v) CHECK(x == 0.0);

  in.v[0] = 2.0;
  nn::deconv2_s2(in, k, b, out);
  // out[oy][ox] = 2 * k[oy+1][ox+1] (pad 1 crops the kernel border)
  CHECK(out.v[0] == 2.0 * k.v[1 * 4 + 1]);
  CHECK(out.v[1] == 2.0 * k.v[1 * 4 + 2]);
  CHECK(out.v[2] == 2.0 * k.v[2 * 4 + 1]);
  CHECK(out.v[3] == 2.0 * k.v[2 * 4 + 2]);
}

TEST_CASE("deconv2_s2 is the adjoint of a stride-2 4x4 convolution") {
  std::mt19937_64 rng(6);
  const int H = 3, W = 4, Ci = 2, Co = 3;
  Tensor<double> x = randn({H, W, Ci}, rng);
  Tensor<double> k = randn({4, 4, Ci, Co}, rng);
  Tensor<double> b({Co});
  Tensor<double> up;
  nn::deconv2_s2(x, k, b, up);
  Tensor<double> y = randn({2 * H, 2 * W, Co}, rng);
  double lhs = 0;  // <deconv(x), y>
  for (size_t i = 0; i < up.size(); ++i) lhs += up.v[i] * y.v[i];
  // test-written stride-2 convolution of y with the same kernel
  double rhs = 0;  // <x, conv_s2(y)>
  for (int iy = 0; iy < H; ++iy)
    for (int ix = 0; ix < W; ++ix)
      for (int ci = 0; ci < Ci; ++ci) {
        double s = 0;
        for (int ky = 0; ky < 4; ++ky)
          for (int kx = 0; kx < 4; ++kx) {
            const int oy = 2 * iy + ky - 1, ox = 2 * ix + kx - 1;
            if (oy < 0 || oy >= 2 * H || ox < 0 || ox >= 2 * W) continue;
            for (int co = 0; co < Co; ++co)
              s += y.v[(size_t(oy) * 2 * W + ox) * Co + co] *
                   k.v[((size_t(ky) * 4 + kx) * Ci + ci) * Co + co];
          }
        rhs += s * x.v[(size_t(iy) * W + ix) * Ci + ci];
      }
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("deconv2_s2 backward matches finite differences") {
  std::mt19937_64 rng(7);
  Tensor<double> in = randn({2, 3, 2}, rng);
  Tensor<double> k = randn({4, 4, 2, 2}, rng);
  Tensor<double> b = randn({2}, rng);
  Tensor<double> probe = randn({4, 6, 2}, rng);
  auto loss = [&]() {
    Tensor<double> out;
    nn::deconv2_s2(in, k, b, out);
    double s = 0;
    for (size_t i = 0; i < out.size(); ++i) s += probe.v[i] * out.v[i];
    return s;
  };
  Tensor<double> gin(in.shape), gk(k.shape), gb(b.shape);
  nn::deconv2_s2_backward(in, k, probe, gin, gk, gb);
  const double eps = 1e-6;
  auto fd = [&](double& slot) {
    const double v0 = slot;
    slot = v0 + eps;
    const double fp = loss();
    slot = v0 - eps;
    const double fm = loss();
    slot = v0;
    return (fp - fm) / (2 * eps);
  };
  for (size_t i = 0; i < in.size(); i += 3)
    CHECK(gin.v[i] == doctest::Approx(fd(in.v[i])).epsilon(1e-6));
  for (size_t i = 0; i < k.size(); i += 11)
    CHECK(gk.v[i] == doctest::Approx(fd(k.v[i])).epsilon(1e-6));
  for (size_t i = 0; i < b.size(); ++i)
    CHECK(gb.v[i] == doctest::Approx(fd(b.v[i])).epsilon(1e-6));
}

TEST_CASE("fc forward and backward") {
  Tensor<double> in({3});
  in.v = {1, 2, 3};
  Tensor<double> w({2, 3});
  w.v = {1, 0, 0, 0, 1, 1};
  Tensor<double> b({2});
  b.v = {10, -1};
  Tensor<double> out;
  nn::fc(in, w, b, out);
  CHECK(out.v[0] == 11.0);
  CHECK(out.v[1] == 4.0);
  Tensor<double> gout({2});
  gout.v = {1.0, 0.5};
  Tensor<double> gin({3}), gw({2, 3}), gb({2});
  nn::fc_backward(in, w, gout, gin, gw, gb);
  CHECK(gin.v[0] == 1.0);
  CHECK(gin.v[1] == 0.5);
  CHECK(gin.v[2] == 0.5);
  CHECK(gw.v[0] == 1.0);
  CHECK(gw.v[5] == 1.5);
  CHECK(gb.v[1] == 0.5);
}

TEST_CASE("softmax of zeros is uniform; large inputs stay finite") {
  double z[4] = {0, 0, 0, 0}, p[4];
  nn::softmax(z, p, 4);
  for (double x : p) CHECK(x == doctest::Approx(0.25));
  double big[3] = {1e4, 1e4 - 1, -1e4}, q[3];
  nn::softmax(big, q, 3);
  double s = 0;
  for (double x : q) {
    CHECK(std::isfinite(x));
    s += x;
  }
  CHECK(s == doctest::Approx(1.0));
}

TEST_CASE("cross entropy: Gibbs inequality and self-entropy") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    double p[5], q[5], sp = 0, sq = 0;
    for (int i = 0; i < 5; ++i) {
      p[i] = u(rng);
      q[i] = u(rng);
      sp += p[i];
      sq += q[i];
    }
    for (int i = 0; i < 5; ++i) {
      p[i] /= sp;
      q[i] /= sq;
    }
    double ent = 0;
    for (int i = 0; i < 5; ++i) ent -= p[i] * std::log(p[i]);
    CHECK(nn::cross_entropy(p, p, 5) == doctest::Approx(ent));
    CHECK(nn::cross_entropy(q, p, 5) >= ent - 1e-12);
  }
}

TEST_CASE("softmax+CE gradient is pred minus label") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> d(0, 1);
  double z[6], p[6], label[6] = {0, 0, 1, 0, 0, 0}, g[6] = {0};
  for (double& x : z) x = d(rng);
  nn::softmax(z, p, 6);
  nn::ce_softmax_backward(p, label, g, 6);
  const double eps = 1e-6;
  for (int i = 0; i < 6; ++i) {
    const double v0 = z[i];
    double pp[6];
    z[i] = v0 + eps;
    nn::softmax(z, pp, 6);
    const double fp = nn::cross_entropy(pp, label, 6);
    z[i] = v0 - eps;
    nn::softmax(z, pp, 6);
    const double fm = nn::cross_entropy(pp, label, 6);
    z[i] = v0;
    CHECK(g[i] == doctest::Approx((fp - fm) / (2 * eps)).epsilon(1e-6));
  }
}

TEST_CASE("lstm_step: zero state, zero weights gives zero output") {
  const int In = 3, Hd = 2;
  Tensor<double> wx({4 * Hd, In}), wh({4 * Hd, Hd}), b({4 * Hd});
  double x[In] = {0, 0, 0}, h0[Hd] = {0, 0}, c0[Hd] = {0, 0};
  double h[Hd], c[Hd];
  nn::LstmCache<double> cache;
  nn::lstm_step(x, h0, c0, wx, wh, b, h, c, cache);
  for (int j = 0; j < Hd; ++j) {
    CHECK(h[j] == 0.0);
    CHECK(c[j] == 0.0);
  }
}

TEST_CASE("lstm_step: saturated forget gate carries the cell state") {
  const int In = 2, Hd = 2;
  Tensor<double> wx({4 * Hd, In}), wh({4 * Hd, Hd}), b({4 * Hd});
  // forget-gate biases large positive, input gate large negative
  for (int j = 0; j < Hd; ++j) {
    b.v[size_t(Hd) + j] = 30.0;
    b.v[j] = -30.0;
  }
  double x[In] = {0.3, -0.7}, h0[Hd] = {0.1, -0.2}, c0[Hd] = {1.5, -2.5};
  double h[Hd], c[Hd];
  nn::LstmCache<double> cache;
  nn::lstm_step(x, h0, c0, wx, wh, b, h, c, cache);
  CHECK(c[0] == doctest::Approx(1.5).epsilon(1e-9));
  CHECK(c[1] == doctest::Approx(-2.5).epsilon(1e-9));
}

TEST_CASE("lstm_step_backward matches finite differences over a 3-step roll") {
  std::mt19937_64 rng(10);
  const int In = 3, Hd = 2, Tn = 3;
  Tensor<double> wx = randn({4 * Hd, In}, rng, 0.5);
  Tensor<double> wh = randn({4 * Hd, Hd}, rng, 0.5);
  Tensor<double> b = randn({4 * Hd}, rng, 0.5);
  std::vector<Tensor<double>> xs;
  for (int t = 0; t < Tn; ++t) xs.push_back(randn({In}, rng));
  Tensor<double> probe = randn({Tn * Hd}, rng);
  auto roll = [&](std::vector<nn::LstmCache<double>>* caches,
                  std::vector<std::vector<double>>* hs,
                  std::vector<std::vector<double>>* cs) {
    std::vector<double> h(Hd, 0), c(Hd, 0);
    double loss = 0;
    for (int t = 0; t < Tn; ++t) {
      std::vector<double> hn(Hd), cn(Hd);
      nn::LstmCache<double> cache;
      nn::lstm_step(xs[size_t(t)].data(), h.data(), c.data(), wx, wh, b,
                    hn.data(), cn.data(), cache);
      if (caches) caches->push_back(cache);
      if (hs) hs->push_back(h);   // previous h, as backward needs h_prev
      if (cs) cs->push_back(c);
      h = hn;
      c = cn;
      for (int j = 0; j < Hd; ++j) loss += probe.v[size_t(t) * Hd + j] * h[j];
    }
    return loss;
  };
  std::vector<nn::LstmCache<double>> caches;
  std::vector<std::vector<double>> hprev, cprev;
  roll(&caches, &hprev, &cprev);
  Tensor<double> gwx(wx.shape), gwh(wh.shape), gb(b.shape);
  std::vector<double> dh(Hd, 0), dc(Hd, 0);
  std::vector<Tensor<double>> gxs(size_t(Tn), Tensor<double>({In}));
  for (int t = Tn - 1; t >= 0; --t) {
    for (int j = 0; j < Hd; ++j) dh[size_t(j)] += probe.v[size_t(t) * Hd + j];
    std::vector<double> dhp(Hd, 0), dcp(Hd, 0);
    nn::lstm_step_backward(xs[size_t(t)].data(), hprev[size_t(t)].data(),
                           cprev[size_t(t)].data(), wx, wh, caches[size_t(t)],
                           dh.data(), dc.data(), gxs[size_t(t)].data(),
                           dhp.data(), dcp.data(), gwx, gwh, gb);
    dh = dhp;
    dc = dcp;
  }
  const double eps = 1e-5;
  auto fd = [&](double& slot) {
    const double v0 = slot;
    slot = v0 + eps;
    const double fp = roll(nullptr, nullptr, nullptr);
    slot = v0 - eps;
    const double fm = roll(nullptr, nullptr, nullptr);
    slot = v0;
    return (fp - fm) / (2 * eps);
  };
  for (size_t i = 0; i < wx.size(); i += 4)
    CHECK(gwx.v[i] == doctest::Approx(fd(wx.v[i])).epsilon(1e-4));
  for (size_t i = 0; i < wh.size(); i += 3)
    CHECK(gwh.v[i] == doctest::Approx(fd(wh.v[i])).epsilon(1e-4));
  for (size_t i = 0; i < b.size(); ++i)
    CHECK(gb.v[i] == doctest::Approx(fd(b.v[i])).epsilon(1e-4));
  for (int t = 0; t < Tn; ++t)
    for (int i = 0; i < In; ++i)
      CHECK(gxs[size_t(t)].v[size_t(i)] ==
            doctest::Approx(fd(xs[size_t(t)].v[size_t(i)])).epsilon(1e-4));
}

TEST_CASE("sgd_update examples") {
  nn::Parameter<double> p("w", {1});
  p.value.v[0] = 1.0;
  p.grad.v[0] = 1.0;  // grad equals w
  std::vector<nn::Parameter<double>*> ps{&p};
  REQUIRE(nn::sgd_update(ps, 0.1, 0.0, 0.0));
  CHECK(p.value.v[0] == doctest::Approx(0.9));

  SUBCASE("zero gradient leaves weights unchanged") {
    nn::Parameter<double> q("q", {2});
    q.value.v = {3.0, -4.0};
    std::vector<nn::Parameter<double>*> qs{&q};
    REQUIRE(nn::sgd_update(qs, 0.5, 0.9, 0.0));
    CHECK(q.value.v[0] == 3.0);
    CHECK(q.value.v[1] == -4.0);
  }

  SUBCASE("momentum accelerates on a constant gradient") {
    nn::Parameter<double> q("q", {1});
    q.value.v[0] = 0.0;
    std::vector<nn::Parameter<double>*> qs{&q};
    double prev = 0.0, prev_step = 0.0;
    for (int i = 0; i < 5; ++i) {
      q.grad.v[0] = 1.0;
      REQUIRE(nn::sgd_update(qs, 0.1, 0.9, 0.0));
      const double step = prev - q.value.v[0];
      if (i > 0) CHECK(step > prev_step);
      prev_step = step;
      prev = q.value.v[0];
    }
  }

  SUBCASE("weight decay shrinks weights with zero gradient") {
    nn::Parameter<double> q("q", {1});
    q.value.v[0] = 2.0;
    std::vector<nn::Parameter<double>*> qs{&q};
    REQUIRE(nn::sgd_update(qs, 0.1, 0.0, 0.5));
    CHECK(q.value.v[0] == doctest::Approx(2.0 - 0.1 * 0.5 * 2.0));
  }

  SUBCASE("non-finite gradient aborts the step") {
    nn::Parameter<double> q("theta", {1});
    q.value.v[0] = 1.0;
    q.grad.v[0] = std::nan("");
    std::vector<nn::Parameter<double>*> qs{&q};
    std::string err;
    CHECK_FALSE(nn::sgd_update(qs, 0.1, 0.9, 0.0, &err));
    CHECK(q.value.v[0] == 1.0);
    CHECK(err.find("theta") != std::string::npos);
  }

  SUBCASE("descends a quadratic") {
    nn::Parameter<double> q("q", {1});
    q.value.v[0] = 5.0;
    std::vector<nn::Parameter<double>*> qs{&q};
    double prev_loss = 25.0;
    for (int i = 0; i < 10; ++i) {
      q.grad.v[0] = 2.0 * q.value.v[0];
      REQUIRE(nn::sgd_update(qs, 0.1, 0.0, 0.0));
      const double loss = q.value.v[0] * q.value.v[0];
      CHECK(loss < prev_loss);
      prev_loss = loss;
    }
  }
}

TEST_CASE("grad_check: exact on a linear map, skips a straddled kink") {
  std::mt19937_64 rng(11);
  nn::Parameter<double> w("w", {4});
  w.value.v = {0.5, -1.0, 2.0, 0.25};
  const double coef[4] = {1.0, -2.0, 3.0, 0.5};
  auto loss = [&]() {
    double s = 0;
    for (int i = 0; i < 4; ++i) s += coef[i] * w.value.v[size_t(i)];
    return s;
  };
  for (int i = 0; i < 4; ++i) w.grad.v[size_t(i)] = coef[i];
  std::vector<nn::Parameter<double>*> ps{&w};
  auto res = nn::grad_check(loss, ps, 1e-3, 100, rng);
  CHECK(res.checked == 4);
  CHECK(res.skipped == 0);
  CHECK(res.max_rel_err < 1e-10);

  // A ReLU whose kink lies inside the probe interval: the eps and eps/2
  // central differences disagree, so the coordinate is skipped rather than
  // reported as a gradient error.
  nn::Parameter<double> k("k", {1});
  k.value.v[0] = 4e-4;  // kink at 0 sits between eps/2 and eps probes
  k.grad.v[0] = 1.0;
  auto kink_loss = [&]() { return std::max(k.value.v[0], 0.0); };
  std::vector<nn::Parameter<double>*> ks{&k};
  auto kres = nn::grad_check(kink_loss, ks, 1e-3, 10, rng);
  CHECK(kres.skipped == 1);
  CHECK(kres.checked == 0);
}
