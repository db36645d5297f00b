#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <random>

#include "humanoid/nn.hpp"
#include "humanoid/raster.hpp"
#include "humanoid/ui.hpp"

namespace humanoid {

struct ModelConfig {
  int width = 45, height = 80;  // raster dims
  std::array<int, 5> conv_channels{8, 16, 16, 24, 24};
  std::array<int, 3> reduce_channels{8, 12, 12};  // 1x1 conv outputs
  std::array<int, 3> lstm_hidden{8, 12, 12};      // must equal reduce widths
  std::array<int, 5> decoder_channels{16, 16, 12, 8, 4};
  int deconv_stages = 5;  // must restore input resolution exactly
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double label_variance = 20.0;  // px^2 at 180x320
  int batch_size = 16;
  int epochs = 3;
  int holdout_percent = 10;
  int early_stop_patience = 0;  // 0 disables early stopping
  uint64_t seed = 0;

  void validate() const;
  std::string to_text() const;  // canonical key=value block
  static ModelConfig from_text(const std::string& text);
  bool operator==(const ModelConfig&) const = default;
};

// 7 probabilities indexed by ActionType.
using TypeDistribution = std::array<double, kActionTypeCount>;

// Grid resolutions along the encoder: level k is after k pooling stages.
struct NetDims {
  std::array<int, 6> h{}, w{};
};
NetDims compute_dims(const ModelConfig& cfg);

template <typename T>
struct Acts {
  std::array<nn::Tensor<T>, 4> frame_in;
  std::array<std::array<nn::Tensor<T>, 5>, 4> conv_out, relu_out, pool_out;
  std::array<std::array<std::vector<int>, 5>, 4> argmax;
  std::array<std::array<nn::Tensor<T>, 4>, 3> red_pre, red;  // [level][frame]
  std::array<std::array<nn::Tensor<T>, 4>, 3> lstm_h, lstm_c, post;
  std::array<std::vector<nn::LstmCache<T>>, 3> cache;  // [frame*nloc+loc]
  std::array<nn::Tensor<T>, 5> dec_in, dec_full, dec_crop, dec_relu;
  nn::Tensor<T> head_out;      // [H,W,1] location logits
  nn::Tensor<T> p_loc;         // [H,W]
  nn::Tensor<T> flat;          // type-head input
  nn::Tensor<T> logits_type;   // [7]
  nn::Tensor<T> p_type;        // [7]
};

// The interaction model: a 5-stage conv/pool encoder shared across the 4
// context frames, residual LSTMs over the frame sequence at the last 3
// resolution levels, a deconv decoder with skip concatenation producing the
// location heatmap, and a fully connected type head on the deepest
// post-LSTM features.
template <typename T>
class Net {
 public:
  explicit Net(const ModelConfig& cfg);

  void init_params(std::mt19937_64& rng);
  std::vector<nn::Parameter<T>*> params();
  std::vector<const nn::Parameter<T>*> params() const;

  // Deterministic; safe to call concurrently on a const instance when each
  // caller owns its Acts.
  void forward(const ContextTensor& ctx, Acts<T>& a) const;

  // Accumulates parameter gradients for CE(type) + CE(loc).
  void backward(const Acts<T>& a, const nn::Tensor<T>& type_label,
                const nn::Tensor<T>& loc_label);

  T loss(const Acts<T>& a, const nn::Tensor<T>& type_label,
         const nn::Tensor<T>& loc_label) const;

  const ModelConfig& config() const { return cfg_; }
  const NetDims& dims() const { return dims_; }

  // Parameter storage, fixed order (also the checkpoint blob order).
  std::array<nn::Parameter<T>, 5> conv_w, conv_b;
  std::array<nn::Parameter<T>, 3> red_w, red_b;
  std::array<nn::Parameter<T>, 3> lstm_wx, lstm_wh, lstm_b;
  std::array<nn::Parameter<T>, 5> dec_w, dec_b;
  nn::Parameter<T> head_w, head_b;
  nn::Parameter<T> fc_w, fc_b;

 private:
  ModelConfig cfg_;
  NetDims dims_;
  std::array<int, 5> conv_in_{};   // conv input channels per stage
  std::array<int, 5> dec_in_ch_{};  // deconv input channels per stage
};

// ---------------------------------------------------------------------------
// implementation
// ---------------------------------------------------------------------------

inline NetDims compute_dims(const ModelConfig& cfg) {
  NetDims d;
  d.h[0] = cfg.height;
  d.w[0] = cfg.width;
  for (int k = 0; k < 5; ++k) {
    d.h[k + 1] = (d.h[k] + 1) / 2;
    d.w[k + 1] = (d.w[k] + 1) / 2;
  }
  return d;
}

template <typename T>
Net<T>::Net(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  dims_ = compute_dims(cfg_);
  conv_in_[0] = 3;
  for (int s = 1; s < 5; ++s)
    conv_in_[s] = s >= 3 ? cfg_.reduce_channels[s - 3] : cfg_.conv_channels[s - 1];
  for (int s = 0; s < 5; ++s) {
    conv_w[s] = nn::Parameter<T>("conv" + std::to_string(s) + ".w",
                                 {3, 3, conv_in_[s], cfg_.conv_channels[s]});
    conv_b[s] = nn::Parameter<T>("conv" + std::to_string(s) + ".b",
                                 {cfg_.conv_channels[s]});
  }
  for (int l = 0; l < 3; ++l) {
    const int cin = cfg_.conv_channels[l + 2];
    const int r = cfg_.reduce_channels[l];
    red_w[l] = nn::Parameter<T>("reduce" + std::to_string(l) + ".w",
                                {1, 1, cin, r});
    red_b[l] = nn::Parameter<T>("reduce" + std::to_string(l) + ".b", {r});
    lstm_wx[l] = nn::Parameter<T>("lstm" + std::to_string(l) + ".wx",
                                  {4 * r, r});
    lstm_wh[l] = nn::Parameter<T>("lstm" + std::to_string(l) + ".wh",
                                  {4 * r, r});
    lstm_b[l] = nn::Parameter<T>("lstm" + std::to_string(l) + ".b", {4 * r});
  }
  dec_in_ch_[0] = cfg_.reduce_channels[2];
  dec_in_ch_[1] = cfg_.decoder_channels[0] + cfg_.reduce_channels[1];
  dec_in_ch_[2] = cfg_.decoder_channels[1] + cfg_.reduce_channels[0];
  dec_in_ch_[3] = cfg_.decoder_channels[2];
  dec_in_ch_[4] = cfg_.decoder_channels[3];
  for (int s = 0; s < 5; ++s) {
    dec_w[s] = nn::Parameter<T>("deconv" + std::to_string(s) + ".w",
                                {4, 4, dec_in_ch_[s], cfg_.decoder_channels[s]});
    dec_b[s] = nn::Parameter<T>("deconv" + std::to_string(s) + ".b",
                                {cfg_.decoder_channels[s]});
  }
  head_w = nn::Parameter<T>("head.w", {1, 1, cfg_.decoder_channels[4], 1});
  head_b = nn::Parameter<T>("head.b", {1});
  const int flat = cfg_.reduce_channels[2] * dims_.h[5] * dims_.w[5];
  fc_w = nn::Parameter<T>("fc.w", {kActionTypeCount, flat});
  fc_b = nn::Parameter<T>("fc.b", {kActionTypeCount});
}

template <typename T>
std::vector<nn::Parameter<T>*> Net<T>::params() {
  std::vector<nn::Parameter<T>*> ps;
  for (int s = 0; s < 5; ++s) {
    ps.push_back(&conv_w[s]);
    ps.push_back(&conv_b[s]);
  }
  for (int l = 0; l < 3; ++l) {
    ps.push_back(&red_w[l]);
    ps.push_back(&red_b[l]);
    ps.push_back(&lstm_wx[l]);
    ps.push_back(&lstm_wh[l]);
    ps.push_back(&lstm_b[l]);
  }
  for (int s = 0; s < 5; ++s) {
    ps.push_back(&dec_w[s]);
    ps.push_back(&dec_b[s]);
  }
  ps.push_back(&head_w);
  ps.push_back(&head_b);
  ps.push_back(&fc_w);
  ps.push_back(&fc_b);
  return ps;
}

template <typename T>
std::vector<const nn::Parameter<T>*> Net<T>::params() const {
  auto ps = const_cast<Net<T>*>(this)->params();
  return {ps.begin(), ps.end()};
}

template <typename T>
void Net<T>::init_params(std::mt19937_64& rng) {
  auto fill = [&](nn::Parameter<T>& p, int fan_in) {
    const double s = std::sqrt(1.0 / std::max(fan_in, 1));
    std::uniform_real_distribution<double> d(-s, s);
    for (T& x : p.value.v) x = static_cast<T>(d(rng));
  };
  // Pre-ReLU biases start slightly positive so no unit begins dead (a dead
  // reduce layer would zero out everything downstream) or parked exactly on
  // the ReLU kink.
  auto fill_bias = [&](nn::Parameter<T>& p) {
    std::uniform_real_distribution<double> d(0.01, 0.1);
    for (T& x : p.value.v) x = static_cast<T>(d(rng));
  };
  for (int s = 0; s < 5; ++s) {
    fill(conv_w[s], 9 * conv_in_[s]);
    fill_bias(conv_b[s]);
  }
  for (int l = 0; l < 3; ++l) {
    fill(red_w[l], cfg_.conv_channels[l + 2]);
    fill_bias(red_b[l]);
    const int r = cfg_.reduce_channels[l];
    fill(lstm_wx[l], r);
    fill(lstm_wh[l], r);
    lstm_b[l].value.zero();
    for (int j = 0; j < r; ++j) lstm_b[l].value.v[r + j] = T(1);  // forget bias
  }
  for (int s = 0; s < 5; ++s) {
    fill(dec_w[s], 16 * dec_in_ch_[s]);
    fill_bias(dec_b[s]);
  }
  fill(head_w, cfg_.decoder_channels[4]);
  head_b.value.zero();
  fill(fc_w, fc_w.value.dim(1));
  fc_b.value.zero();
}

namespace detail {

template <typename T>
void crop_to(const nn::Tensor<T>& full, int ht, int wt, nn::Tensor<T>& out) {
  const int W = full.dim(1), C = full.dim(2);
  out = nn::Tensor<T>({ht, wt, C});
  for (int y = 0; y < ht; ++y)
    std::copy_n(&full.v[(static_cast<size_t>(y) * W) * C],
                static_cast<size_t>(wt) * C,
                &out.v[(static_cast<size_t>(y) * wt) * C]);
}

template <typename T>
void crop_backward(const nn::Tensor<T>& gout, int hf, int wf, nn::Tensor<T>& gfull) {
  const int ht = gout.dim(0), wt = gout.dim(1), C = gout.dim(2);
  gfull = nn::Tensor<T>({hf, wf, C});
  for (int y = 0; y < ht; ++y)
    std::copy_n(&gout.v[(static_cast<size_t>(y) * wt) * C],
                static_cast<size_t>(wt) * C,
                &gfull.v[(static_cast<size_t>(y) * wf) * C]);
}

template <typename T>
void concat_channels(const nn::Tensor<T>& a, const nn::Tensor<T>& b,
                     nn::Tensor<T>& out) {
  const int H = a.dim(0), W = a.dim(1), Ca = a.dim(2), Cb = b.dim(2);
  out = nn::Tensor<T>({H, W, Ca + Cb});
  for (size_t p = 0; p < static_cast<size_t>(H) * W; ++p) {
    std::copy_n(&a.v[p * Ca], Ca, &out.v[p * (Ca + Cb)]);
    std::copy_n(&b.v[p * Cb], Cb, &out.v[p * (Ca + Cb) + Ca]);
  }
}

template <typename T>
void split_channels_add(const nn::Tensor<T>& g, int Ca, nn::Tensor<T>& ga,
                        nn::Tensor<T>& gb) {
  const int H = g.dim(0), W = g.dim(1), C = g.dim(2);
  const int Cb = C - Ca;
  for (size_t p = 0; p < static_cast<size_t>(H) * W; ++p) {
    for (int c = 0; c < Ca; ++c) ga.v[p * Ca + c] += g.v[p * C + c];
    for (int c = 0; c < Cb; ++c) gb.v[p * Cb + c] += g.v[p * C + Ca + c];
  }
}

}  // namespace detail

template <typename T>
void Net<T>::forward(const ContextTensor& ctx, Acts<T>& a) const {
  const int H = cfg_.height, W = cfg_.width;
  if (ctx.h != H || ctx.w != W)
    throw InternalError("context tensor dims do not match model config");
  for (int f = 0; f < 4; ++f) {
    a.frame_in[f] = nn::Tensor<T>({H, W, 3});
    const float* src = &ctx.data[static_cast<size_t>(f) * H * W * 3];
    for (size_t i = 0; i < a.frame_in[f].size(); ++i)
      a.frame_in[f].v[i] = static_cast<T>(src[i]);
  }

  std::array<const nn::Tensor<T>*, 4> stage_in;
  for (int f = 0; f < 4; ++f) stage_in[f] = &a.frame_in[f];

  for (int s = 0; s < 5; ++s) {
    for (int f = 0; f < 4; ++f) {
      nn::conv2d_same(*stage_in[f], conv_w[s].value, conv_b[s].value,
                      a.conv_out[f][s]);
      nn::relu(a.conv_out[f][s], a.relu_out[f][s]);
      nn::maxpool2(a.relu_out[f][s], a.pool_out[f][s], a.argmax[f][s]);
    }
    if (s < 2) {
      for (int f = 0; f < 4; ++f) stage_in[f] = &a.pool_out[f][s];
      continue;
    }
    const int l = s - 2;
    const int hd = cfg_.lstm_hidden[l];
    const int hl = dims_.h[s + 1], wl = dims_.w[s + 1];
    const int nloc = hl * wl;
    for (int f = 0; f < 4; ++f) {
      nn::conv2d_same(a.pool_out[f][s], red_w[l].value, red_b[l].value,
                      a.red_pre[l][f]);
      nn::relu(a.red_pre[l][f], a.red[l][f]);
      a.lstm_h[l][f] = nn::Tensor<T>({hl, wl, hd});
      a.lstm_c[l][f] = nn::Tensor<T>({hl, wl, hd});
    }
    a.cache[l].resize(static_cast<size_t>(4) * nloc);
    std::vector<T> zeros(static_cast<size_t>(hd), T(0));
    for (int loc = 0; loc < nloc; ++loc) {
      for (int f = 0; f < 4; ++f) {
        const T* x = &a.red[l][f].v[static_cast<size_t>(loc) * hd];
        const T* hp = f ? &a.lstm_h[l][f - 1].v[static_cast<size_t>(loc) * hd]
                        : zeros.data();
        const T* cp = f ? &a.lstm_c[l][f - 1].v[static_cast<size_t>(loc) * hd]
                        : zeros.data();
        nn::lstm_step(x, hp, cp, lstm_wx[l].value, lstm_wh[l].value,
                      lstm_b[l].value,
                      &a.lstm_h[l][f].v[static_cast<size_t>(loc) * hd],
                      &a.lstm_c[l][f].v[static_cast<size_t>(loc) * hd],
                      a.cache[l][static_cast<size_t>(f) * nloc + loc]);
      }
    }
    for (int f = 0; f < 4; ++f) {
      a.post[l][f] = a.red[l][f];
      for (size_t i = 0; i < a.post[l][f].size(); ++i)
        a.post[l][f].v[i] += a.lstm_h[l][f].v[i];
      stage_in[f] = &a.post[l][f];
    }
  }

  // Decoder over the current (last) frame, skip-concatenating the two
  // shallower post-LSTM levels.
  a.dec_in[0] = a.post[2][3];
  for (int s = 0; s < 5; ++s) {
    nn::deconv2_s2(a.dec_in[s], dec_w[s].value, dec_b[s].value, a.dec_full[s]);
    const int ht = dims_.h[4 - s], wt = dims_.w[4 - s];
    detail::crop_to(a.dec_full[s], ht, wt, a.dec_crop[s]);
    nn::relu(a.dec_crop[s], a.dec_relu[s]);
    if (s == 0)
      detail::concat_channels(a.dec_relu[0], a.post[1][3], a.dec_in[1]);
    else if (s == 1)
      detail::concat_channels(a.dec_relu[1], a.post[0][3], a.dec_in[2]);
    else if (s < 4)
      a.dec_in[s + 1] = a.dec_relu[s];
  }
  nn::conv2d_same(a.dec_relu[4], head_w.value, head_b.value, a.head_out);

  a.p_loc = nn::Tensor<T>({cfg_.height, cfg_.width});
  nn::softmax(a.head_out.data(), a.p_loc.data(),
              static_cast<int>(a.head_out.size()));

  a.flat = nn::Tensor<T>({static_cast<int>(a.post[2][3].size())});
  a.flat.v = a.post[2][3].v;
  nn::fc(a.flat, fc_w.value, fc_b.value, a.logits_type);
  a.p_type = nn::Tensor<T>({kActionTypeCount});
  nn::softmax(a.logits_type.data(), a.p_type.data(), kActionTypeCount);
}

template <typename T>
T Net<T>::loss(const Acts<T>& a, const nn::Tensor<T>& type_label,
               const nn::Tensor<T>& loc_label) const {
  return nn::cross_entropy(a.p_type.data(), type_label.data(),
                           kActionTypeCount) +
         nn::cross_entropy(a.p_loc.data(), loc_label.data(),
                           static_cast<int>(a.p_loc.size()));
}

template <typename T>
void Net<T>::backward(const Acts<T>& a, const nn::Tensor<T>& type_label,
                      const nn::Tensor<T>& loc_label) {
  // Type head.
  nn::Tensor<T> g_logits({kActionTypeCount});
  nn::ce_softmax_backward(a.p_type.data(), type_label.data(), g_logits.data(),
                          kActionTypeCount);
  nn::Tensor<T> g_flat({static_cast<int>(a.flat.size())});
  nn::fc_backward(a.flat, fc_w.value, g_logits, g_flat, fc_w.grad, fc_b.grad);

  // Location head.
  nn::Tensor<T> g_head(a.head_out.shape);
  nn::ce_softmax_backward(a.p_loc.data(), loc_label.data(), g_head.data(),
                          static_cast<int>(g_head.size()));

  // Decoder backward.
  std::array<nn::Tensor<T>, 5> g_dec_relu, g_dec_in;
  for (int s = 0; s < 5; ++s) {
    g_dec_relu[s] = nn::Tensor<T>(a.dec_relu[s].shape);
    g_dec_in[s] = nn::Tensor<T>(a.dec_in[s].shape);
  }
  nn::conv2d_same_backward(a.dec_relu[4], head_w.value, g_head, g_dec_relu[4],
                           head_w.grad, head_b.grad);

  std::array<std::array<nn::Tensor<T>, 4>, 3> g_post;
  for (int l = 0; l < 3; ++l)
    for (int f = 0; f < 4; ++f) g_post[l][f] = nn::Tensor<T>(a.post[l][f].shape);

  for (int s = 4; s >= 0; --s) {
    nn::Tensor<T> g_crop(a.dec_crop[s].shape);
    nn::relu_backward(a.dec_crop[s], g_dec_relu[s], g_crop);
    nn::Tensor<T> g_full;
    detail::crop_backward(g_crop, a.dec_full[s].dim(0), a.dec_full[s].dim(1),
                          g_full);
    nn::deconv2_s2_backward(a.dec_in[s], dec_w[s].value, g_full, g_dec_in[s],
                            dec_w[s].grad, dec_b[s].grad);
    if (s == 2)
      detail::split_channels_add(g_dec_in[2], cfg_.decoder_channels[1],
                                 g_dec_relu[1], g_post[0][3]);
    else if (s == 1)
      detail::split_channels_add(g_dec_in[1], cfg_.decoder_channels[0],
                                 g_dec_relu[0], g_post[1][3]);
    else if (s > 2)
      for (size_t i = 0; i < g_dec_in[s].size(); ++i)
        g_dec_relu[s - 1].v[i] += g_dec_in[s].v[i];
  }
  for (size_t i = 0; i < g_dec_in[0].size(); ++i)
    g_post[2][3].v[i] += g_dec_in[0].v[i];
  for (size_t i = 0; i < g_flat.size(); ++i) g_post[2][3].v[i] += g_flat.v[i];

  // Encoder backward, deepest stage first.
  std::array<nn::Tensor<T>, 4> g_stage_out;  // grad at each frame's stage output
  for (int s = 4; s >= 0; --s) {
    std::array<nn::Tensor<T>, 4> g_pool;
    if (s >= 2) {
      const int l = s - 2;
      const int hd = cfg_.lstm_hidden[l];
      const int nloc = dims_.h[s + 1] * dims_.w[s + 1];
      for (int f = 0; f < 4; ++f)
        if (s < 4)  // higher stages contributed gradient at post[l][f]
          for (size_t i = 0; i < g_post[l][f].size(); ++i)
            g_post[l][f].v[i] += g_stage_out[f].v[i];
      // Residual split: post = red + lstm_h.
      std::array<nn::Tensor<T>, 4> g_red;
      for (int f = 0; f < 4; ++f) g_red[f] = g_post[l][f];
      std::vector<T> zeros(static_cast<size_t>(hd), T(0));
      std::vector<T> dh(static_cast<size_t>(hd)), dc(static_cast<size_t>(hd));
      for (int loc = 0; loc < nloc; ++loc) {
        std::fill(dh.begin(), dh.end(), T(0));
        std::fill(dc.begin(), dc.end(), T(0));
        for (int f = 3; f >= 0; --f) {
          const size_t off = static_cast<size_t>(loc) * hd;
          for (int j = 0; j < hd; ++j) dh[j] += g_post[l][f].v[off + j];
          const T* x = &a.red[l][f].v[off];
          const T* hp = f ? &a.lstm_h[l][f - 1].v[off] : zeros.data();
          const T* cp = f ? &a.lstm_c[l][f - 1].v[off] : zeros.data();
          std::vector<T> dh_prev(static_cast<size_t>(hd), T(0));
          std::vector<T> dc_prev(static_cast<size_t>(hd), T(0));
          nn::lstm_step_backward(
              x, hp, cp, lstm_wx[l].value, lstm_wh[l].value,
              a.cache[l][static_cast<size_t>(f) * nloc + loc], dh.data(),
              dc.data(), &g_red[f].v[off], dh_prev.data(), dc_prev.data(),
              lstm_wx[l].grad, lstm_wh[l].grad, lstm_b[l].grad);
          dh = std::move(dh_prev);
          dc = std::move(dc_prev);
        }
      }
      for (int f = 0; f < 4; ++f) {
        nn::Tensor<T> g_red_pre(a.red_pre[l][f].shape);
        nn::relu_backward(a.red_pre[l][f], g_red[f], g_red_pre);
        g_pool[f] = nn::Tensor<T>(a.pool_out[f][s].shape);
        nn::conv2d_same_backward(a.pool_out[f][s], red_w[l].value, g_red_pre,
                                 g_pool[f], red_w[l].grad, red_b[l].grad);
      }
    } else {
      for (int f = 0; f < 4; ++f) g_pool[f] = std::move(g_stage_out[f]);
    }
    for (int f = 0; f < 4; ++f) {
      nn::Tensor<T> g_relu(a.relu_out[f][s].shape);
      nn::maxpool2_backward(g_pool[f], a.argmax[f][s], g_relu);
      nn::Tensor<T> g_conv(a.conv_out[f][s].shape);
      nn::relu_backward(a.conv_out[f][s], g_relu, g_conv);
      const nn::Tensor<T>& in =
          s == 0 ? a.frame_in[f]
                 : (s <= 2 ? a.pool_out[f][s - 1] : a.post[s - 3][f]);
      g_stage_out[f] = nn::Tensor<T>(in.shape);
      nn::conv2d_same_backward(in, conv_w[s].value, g_conv, g_stage_out[f],
                               conv_w[s].grad, conv_b[s].grad);
    }
  }
  // g_stage_out now holds input-frame gradients; inputs are data, discard.
}

}  // namespace humanoid
