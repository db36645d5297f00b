#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "humanoid/common.hpp"

namespace humanoid::nn {

template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> v;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    v.assign(numel(shape), T(0));
  }
  static size_t numel(const std::vector<int>& s) {
    size_t n = 1;
    for (int d : s) {
      if (d <= 0) throw InternalError("non-positive tensor dim");
      n *= static_cast<size_t>(d);
    }
    return n;
  }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }
  size_t size() const { return v.size(); }
  T* data() { return v.data(); }
  const T* data() const { return v.data(); }
  void zero() { std::fill(v.begin(), v.end(), T(0)); }
};

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  Tensor<T> vel;

  Parameter() = default;
  Parameter(std::string n, std::vector<int> shape)
      : name(std::move(n)), value(shape), grad(shape), vel(shape) {}
};

// ---------------------------------------------------------------------------
// Convolution, same padding (odd kernel), layout in/out [H,W,C], kernel
// [Kh,Kw,Ci,Co]. Backward accumulates into every gradient output.
// ---------------------------------------------------------------------------

template <typename T>
void conv2d_same(const Tensor<T>& in, const Tensor<T>& k, const Tensor<T>& b,
                 Tensor<T>& out) {
  const int H = in.dim(0), W = in.dim(1), Ci = in.dim(2);
  const int Kh = k.dim(0), Kw = k.dim(1), Co = k.dim(3);
  if (k.dim(2) != Ci)
    throw InternalError("conv2d: kernel Ci " + std::to_string(k.dim(2)) +
                        " != input C " + std::to_string(Ci));
  if (Kh % 2 == 0 || Kw % 2 == 0) throw InternalError("conv2d: even kernel");
  out = Tensor<T>({H, W, Co});
  const int ph = Kh / 2, pw = Kw / 2;
  std::vector<T> acc(static_cast<size_t>(Co));
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      for (int co = 0; co < Co; ++co) acc[co] = b.v[co];
      for (int ky = 0; ky < Kh; ++ky) {
        const int iy = y + ky - ph;
        if (iy < 0 || iy >= H) continue;
        for (int kx = 0; kx < Kw; ++kx) {
          const int ix = x + kx - pw;
          if (ix < 0 || ix >= W) continue;
          const T* ip = &in.v[(static_cast<size_t>(iy) * W + ix) * Ci];
          const T* kp = &k.v[((static_cast<size_t>(ky) * Kw + kx) * Ci) * Co];
          for (int ci = 0; ci < Ci; ++ci) {
            const T v = ip[ci];
            const T* kr = kp + static_cast<size_t>(ci) * Co;
            for (int co = 0; co < Co; ++co) acc[co] += v * kr[co];
          }
        }
      }
      T* op = &out.v[(static_cast<size_t>(y) * W + x) * Co];
      for (int co = 0; co < Co; ++co) op[co] = acc[co];
    }
  }
}

template <typename T>
void conv2d_same_backward(const Tensor<T>& in, const Tensor<T>& k,
                          const Tensor<T>& gout, Tensor<T>& gin, Tensor<T>& gk,
                          Tensor<T>& gb) {
  const int H = in.dim(0), W = in.dim(1), Ci = in.dim(2);
  const int Kh = k.dim(0), Kw = k.dim(1), Co = k.dim(3);
  const int ph = Kh / 2, pw = Kw / 2;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const T* go = &gout.v[(static_cast<size_t>(y) * W + x) * Co];
      for (int co = 0; co < Co; ++co) gb.v[co] += go[co];
      for (int ky = 0; ky < Kh; ++ky) {
        const int iy = y + ky - ph;
        if (iy < 0 || iy >= H) continue;
        for (int kx = 0; kx < Kw; ++kx) {
          const int ix = x + kx - pw;
          if (ix < 0 || ix >= W) continue;
          const size_t ibase = (static_cast<size_t>(iy) * W + ix) * Ci;
          const size_t kbase = (static_cast<size_t>(ky) * Kw + kx) * Ci * Co;
          for (int ci = 0; ci < Ci; ++ci) {
            const T* kr = &k.v[kbase + static_cast<size_t>(ci) * Co];
            T* gkr = &gk.v[kbase + static_cast<size_t>(ci) * Co];
            const T iv = in.v[ibase + ci];
            T s = 0;
            for (int co = 0; co < Co; ++co) {
              s += kr[co] * go[co];
              gkr[co] += iv * go[co];
            }
            gin.v[ibase + ci] += s;
          }
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// ReLU
// ---------------------------------------------------------------------------

template <typename T>
void relu(const Tensor<T>& in, Tensor<T>& out) {
  out = in;
  for (T& x : out.v)
    if (x < T(0)) x = T(0);
}

template <typename T>
void relu_backward(const Tensor<T>& in, const Tensor<T>& gout, Tensor<T>& gin) {
  for (size_t i = 0; i < in.size(); ++i)
    if (in.v[i] > T(0)) gin.v[i] += gout.v[i];
}

// ---------------------------------------------------------------------------
// Stride-2 max pooling with ceil-division output dims; odd trailing rows
// and columns get a 1-wide window. First row-major maximum wins ties.
// ---------------------------------------------------------------------------

template <typename T>
void maxpool2(const Tensor<T>& in, Tensor<T>& out, std::vector<int>& argmax) {
  const int H = in.dim(0), W = in.dim(1), C = in.dim(2);
  const int Ho = (H + 1) / 2, Wo = (W + 1) / 2;
  out = Tensor<T>({Ho, Wo, C});
  argmax.assign(out.size(), 0);
  for (int oy = 0; oy < Ho; ++oy) {
    for (int ox = 0; ox < Wo; ++ox) {
      for (int c = 0; c < C; ++c) {
        T best{};
        int bestIdx = -1;
        for (int dy = 0; dy < 2; ++dy) {
          const int iy = 2 * oy + dy;
          if (iy >= H) break;
          for (int dx = 0; dx < 2; ++dx) {
            const int ix = 2 * ox + dx;
            if (ix >= W) break;
            const T v = in.v[(static_cast<size_t>(iy) * W + ix) * C + c];
            if (bestIdx < 0 || v > best) {
              best = v;
              bestIdx = iy * W + ix;
            }
          }
        }
        const size_t o = (static_cast<size_t>(oy) * Wo + ox) * C + c;
        out.v[o] = best;
        argmax[o] = bestIdx;
      }
    }
  }
}

template <typename T>
void maxpool2_backward(const Tensor<T>& gout, const std::vector<int>& argmax,
                       Tensor<T>& gin) {
  const int C = gout.dim(2);
  const int W = gin.dim(1);
  (void)W;
  for (size_t o = 0; o < gout.size(); ++o) {
    const int c = static_cast<int>(o % C);
    gin.v[static_cast<size_t>(argmax[o]) * C + c] += gout.v[o];
  }
}

// ---------------------------------------------------------------------------
// Transposed convolution, stride 2, fixed 4x4 kernel, pad 1: output is
// exactly 2H x 2W. Kernel layout [4,4,Ci,Co].
// ---------------------------------------------------------------------------

template <typename T>
void deconv2_s2(const Tensor<T>& in, const Tensor<T>& k, const Tensor<T>& b,
                Tensor<T>& out) {
  const int H = in.dim(0), W = in.dim(1), Ci = in.dim(2);
  if (k.dim(0) != 4 || k.dim(1) != 4 || k.dim(2) != Ci)
    throw InternalError("deconv2_s2: kernel shape mismatch");
  const int Co = k.dim(3);
  const int Ho = 2 * H, Wo = 2 * W;
  out = Tensor<T>({Ho, Wo, Co});
  for (int oy = 0; oy < Ho; ++oy)
    for (int ox = 0; ox < Wo; ++ox) {
      T* op = &out.v[(static_cast<size_t>(oy) * Wo + ox) * Co];
      for (int co = 0; co < Co; ++co) op[co] = b.v[co];
    }
  for (int iy = 0; iy < H; ++iy) {
    for (int ix = 0; ix < W; ++ix) {
      const T* ip = &in.v[(static_cast<size_t>(iy) * W + ix) * Ci];
      for (int ky = 0; ky < 4; ++ky) {
        const int oy = 2 * iy + ky - 1;
        if (oy < 0 || oy >= Ho) continue;
        for (int kx = 0; kx < 4; ++kx) {
          const int ox = 2 * ix + kx - 1;
          if (ox < 0 || ox >= Wo) continue;
          T* op = &out.v[(static_cast<size_t>(oy) * Wo + ox) * Co];
          const size_t kbase = (static_cast<size_t>(ky) * 4 + kx) * Ci * Co;
          for (int ci = 0; ci < Ci; ++ci) {
            const T v = ip[ci];
            const T* kr = &k.v[kbase + static_cast<size_t>(ci) * Co];
            for (int co = 0; co < Co; ++co) op[co] += v * kr[co];
          }
        }
      }
    }
  }
}

template <typename T>
void deconv2_s2_backward(const Tensor<T>& in, const Tensor<T>& k,
                         const Tensor<T>& gout, Tensor<T>& gin, Tensor<T>& gk,
                         Tensor<T>& gb) {
  const int H = in.dim(0), W = in.dim(1), Ci = in.dim(2);
  const int Co = k.dim(3);
  const int Ho = 2 * H, Wo = 2 * W;
  for (size_t o = 0; o < gout.size(); ++o) gb.v[o % Co] += gout.v[o];
  for (int iy = 0; iy < H; ++iy) {
    for (int ix = 0; ix < W; ++ix) {
      const size_t ibase = (static_cast<size_t>(iy) * W + ix) * Ci;
      for (int ky = 0; ky < 4; ++ky) {
        const int oy = 2 * iy + ky - 1;
        if (oy < 0 || oy >= Ho) continue;
        for (int kx = 0; kx < 4; ++kx) {
          const int ox = 2 * ix + kx - 1;
          if (ox < 0 || ox >= Wo) continue;
          const T* go = &gout.v[(static_cast<size_t>(oy) * Wo + ox) * Co];
          const size_t kbase = (static_cast<size_t>(ky) * 4 + kx) * Ci * Co;
          for (int ci = 0; ci < Ci; ++ci) {
            const T* kr = &k.v[kbase + static_cast<size_t>(ci) * Co];
            T* gkr = &gk.v[kbase + static_cast<size_t>(ci) * Co];
            const T iv = in.v[ibase + ci];
            T s = 0;
            for (int co = 0; co < Co; ++co) {
              s += kr[co] * go[co];
              gkr[co] += iv * go[co];
            }
            gin.v[ibase + ci] += s;
          }
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Fully connected: W [Out,In], in [In].
// ---------------------------------------------------------------------------

template <typename T>
void fc(const Tensor<T>& in, const Tensor<T>& w, const Tensor<T>& b,
        Tensor<T>& out) {
  const int In = static_cast<int>(in.size());
  const int Out = w.dim(0);
  if (w.dim(1) != In) throw InternalError("fc: shape mismatch");
  out = Tensor<T>({Out});
  for (int o = 0; o < Out; ++o) {
    T s = b.v[o];
    const T* wr = &w.v[static_cast<size_t>(o) * In];
    for (int i = 0; i < In; ++i) s += wr[i] * in.v[i];
    out.v[o] = s;
  }
}

template <typename T>
void fc_backward(const Tensor<T>& in, const Tensor<T>& w, const Tensor<T>& gout,
                 Tensor<T>& gin, Tensor<T>& gw, Tensor<T>& gb) {
  const int In = static_cast<int>(in.size());
  const int Out = w.dim(0);
  for (int o = 0; o < Out; ++o) {
    const T g = gout.v[o];
    gb.v[o] += g;
    const T* wr = &w.v[static_cast<size_t>(o) * In];
    T* gwr = &gw.v[static_cast<size_t>(o) * In];
    for (int i = 0; i < In; ++i) {
      gwr[i] += g * in.v[i];
      gin.v[i] += g * wr[i];
    }
  }
}

// ---------------------------------------------------------------------------
// Softmax + cross-entropy
// ---------------------------------------------------------------------------

template <typename T>
void softmax(const T* in, T* out, int n) {
  T mx = in[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, in[i]);
  T sum = 0;
  for (int i = 0; i < n; ++i) {
    out[i] = std::exp(in[i] - mx);
    sum += out[i];
  }
  for (int i = 0; i < n; ++i) out[i] /= sum;
}

template <typename T>
T cross_entropy(const T* pred, const T* label, int n) {
  T loss = 0;
  for (int i = 0; i < n; ++i)
    if (label[i] > T(0))
      loss -= label[i] * std::log(std::max(pred[i], T(1e-30)));
  return loss;
}

// Gradient of CE(softmax(z), label) w.r.t. logits z is pred - label.
template <typename T>
void ce_softmax_backward(const T* pred, const T* label, T* glogits, int n) {
  for (int i = 0; i < n; ++i) glogits[i] += pred[i] - label[i];
}

// ---------------------------------------------------------------------------
// LSTM cell, gate order (input, forget, cell, output). Weights Wx [4H,In],
// Wh [4H,H], b [4H]. Operates on one location vector.
// ---------------------------------------------------------------------------

template <typename T>
struct LstmCache {
  std::vector<T> i, f, g, o, c, tc;  // post-activation gates, cell, tanh(c)
};

template <typename T>
void lstm_step(const T* x, const T* h_prev, const T* c_prev, const Tensor<T>& wx,
               const Tensor<T>& wh, const Tensor<T>& b, T* h_out, T* c_out,
               LstmCache<T>& cache) {
  const int In = wx.dim(1);
  const int Hd = wh.dim(1);
  if (wx.dim(0) != 4 * Hd || wh.dim(0) != 4 * Hd)
    throw InternalError("lstm_step: shape mismatch");
  std::vector<T> pre(static_cast<size_t>(4) * Hd);
  for (int r = 0; r < 4 * Hd; ++r) {
    T s = b.v[r];
    const T* wxr = &wx.v[static_cast<size_t>(r) * In];
    for (int i = 0; i < In; ++i) s += wxr[i] * x[i];
    const T* whr = &wh.v[static_cast<size_t>(r) * Hd];
    for (int i = 0; i < Hd; ++i) s += whr[i] * h_prev[i];
    pre[r] = s;
  }
  auto sigm = [](T z) { return T(1) / (T(1) + std::exp(-z)); };
  cache.i.resize(Hd);
  cache.f.resize(Hd);
  cache.g.resize(Hd);
  cache.o.resize(Hd);
  cache.c.resize(Hd);
  cache.tc.resize(Hd);
  for (int j = 0; j < Hd; ++j) {
    const T ig = sigm(pre[j]);
    const T fg = sigm(pre[Hd + j]);
    const T gg = std::tanh(pre[2 * Hd + j]);
    const T og = sigm(pre[3 * Hd + j]);
    const T c = fg * c_prev[j] + ig * gg;
    const T tc = std::tanh(c);
    cache.i[j] = ig;
    cache.f[j] = fg;
    cache.g[j] = gg;
    cache.o[j] = og;
    cache.c[j] = c;
    cache.tc[j] = tc;
    c_out[j] = c;
    h_out[j] = og * tc;
  }
}

// dh/dc are incoming gradients w.r.t. this step's outputs; dx, dh_prev and
// dc_prev are accumulated, as are the weight gradients.
template <typename T>
void lstm_step_backward(const T* x, const T* h_prev, const T* c_prev,
                        const Tensor<T>& wx, const Tensor<T>& wh,
                        const LstmCache<T>& cache, const T* dh, const T* dc_in,
                        T* dx, T* dh_prev, T* dc_prev, Tensor<T>& gwx,
                        Tensor<T>& gwh, Tensor<T>& gb) {
  const int In = wx.dim(1);
  const int Hd = wh.dim(1);
  std::vector<T> dpre(static_cast<size_t>(4) * Hd);
  for (int j = 0; j < Hd; ++j) {
    const T ig = cache.i[j], fg = cache.f[j], gg = cache.g[j], og = cache.o[j];
    const T tc = cache.tc[j];
    const T dO = dh[j] * tc;
    const T dC = dc_in[j] + dh[j] * og * (T(1) - tc * tc);
    const T dF = dC * c_prev[j];
    const T dI = dC * gg;
    const T dG = dC * ig;
    dc_prev[j] += dC * fg;
    dpre[j] = dI * ig * (T(1) - ig);
    dpre[Hd + j] = dF * fg * (T(1) - fg);
    dpre[2 * Hd + j] = dG * (T(1) - gg * gg);
    dpre[3 * Hd + j] = dO * og * (T(1) - og);
  }
  for (int r = 0; r < 4 * Hd; ++r) {
    const T g = dpre[r];
    gb.v[r] += g;
    const T* wxr = &wx.v[static_cast<size_t>(r) * In];
    T* gwxr = &gwx.v[static_cast<size_t>(r) * In];
    for (int i = 0; i < In; ++i) {
      gwxr[i] += g * x[i];
      dx[i] += g * wxr[i];
    }
    const T* whr = &wh.v[static_cast<size_t>(r) * Hd];
    T* gwhr = &gwh.v[static_cast<size_t>(r) * Hd];
    for (int i = 0; i < Hd; ++i) {
      gwhr[i] += g * h_prev[i];
      dh_prev[i] += g * whr[i];
    }
  }
}

// ---------------------------------------------------------------------------
// Momentum SGD with L2 weight decay. Returns false (step aborted) if any
// gradient is non-finite; `err` names the offending parameter.
// ---------------------------------------------------------------------------

template <typename T>
bool sgd_update(std::vector<Parameter<T>*>& params, T lr, T momentum,
                T weight_decay, std::string* err = nullptr) {
  if (!(lr > T(0))) throw InternalError("sgd_update: lr must be positive");
  for (Parameter<T>* p : params)
    for (T g : p->grad.v)
      if (!std::isfinite(g)) {
        if (err) *err = "non-finite gradient in " + p->name;
        return false;
      }
  for (Parameter<T>* p : params) {
    for (size_t i = 0; i < p->value.size(); ++i) {
      const T g = p->grad.v[i] + weight_decay * p->value.v[i];
      p->vel.v[i] = momentum * p->vel.v[i] + g;
      p->value.v[i] -= lr * p->vel.v[i];
    }
  }
  return true;
}

template <typename T>
void zero_grads(std::vector<Parameter<T>*>& params) {
  for (Parameter<T>* p : params) p->grad.zero();
}

// ---------------------------------------------------------------------------
// Finite-difference gradient check. `loss_fn` recomputes the loss from the
// current parameter values; analytic gradients must already sit in
// param->grad. Coordinates where the eps and eps/2 central differences
// disagree (a kink or pooling tie was crossed) are skipped.
// ---------------------------------------------------------------------------

struct GradCheckResult {
  double max_rel_err = 0;
  int checked = 0;
  int skipped = 0;
  std::string worst;  // parameter name of the worst coordinate
};

inline GradCheckResult grad_check(const std::function<double()>& loss_fn,
                                  const std::vector<Parameter<double>*>& params,
                                  double eps, int samples_per_param,
                                  std::mt19937_64& rng) {
  GradCheckResult res;
  for (Parameter<double>* p : params) {
    const size_t n = p->value.size();
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), size_t{0});
    if (static_cast<size_t>(samples_per_param) < n) {
      for (size_t i = 0; i < static_cast<size_t>(samples_per_param); ++i) {
        std::uniform_int_distribution<size_t> d(i, n - 1);
        std::swap(idx[i], idx[d(rng)]);
      }
      idx.resize(static_cast<size_t>(samples_per_param));
    }
    for (size_t i : idx) {
      const double v0 = p->value.v[i];
      auto probe = [&](double h) {
        p->value.v[i] = v0 + h;
        const double fp = loss_fn();
        p->value.v[i] = v0 - h;
        const double fm = loss_fn();
        p->value.v[i] = v0;
        return (fp - fm) / (2 * h);
      };
      const double d1 = probe(eps);
      const double d2 = probe(eps / 2);
      if (std::abs(d1 - d2) > 1e-3 * std::max(std::abs(d1), std::abs(d2)) +
                                  1e-9) {
        ++res.skipped;  // non-smooth coordinate
        continue;
      }
      const double a = p->grad.v[i];
      const double num = d2;
      const double rel =
          std::abs(a - num) / std::max({1.0, std::abs(a), std::abs(num)});
      ++res.checked;
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst = p->name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return res;
}

}  // namespace humanoid::nn
