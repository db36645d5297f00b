#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "humanoid/training.hpp"

namespace humanoid {

// ---------------------------------------------------------------------------
// ModelConfig
// ---------------------------------------------------------------------------

void ModelConfig::validate() const {
  if (width <= 0 || height <= 0) throw DataError("model dims must be positive");
  if (lstm_hidden != reduce_channels)
    throw DataError("lstm_hidden must equal reduce_channels (residual add)");
  if (deconv_stages != 5)
    throw DataError("deconv_stages must be 5 to restore input resolution");
  for (int c : conv_channels)
    if (c <= 0) throw DataError("conv channel widths must be positive");
  if (batch_size <= 0 || epochs <= 0) throw DataError("bad batch/epochs");
  if (holdout_percent < 0 || holdout_percent >= 100)
    throw DataError("holdout_percent out of range");
  if (!(learning_rate > 0)) throw DataError("learning rate must be positive");
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <size_t N>
std::string join(const std::array<int, N>& a) {
  std::string s;
  for (size_t i = 0; i < N; ++i) {
    if (i) s += ",";
    s += std::to_string(a[i]);
  }
  return s;
}

template <size_t N>
std::array<int, N> parse_ints(const std::string& s) {
  std::array<int, N> out{};
  std::stringstream ss(s);
  std::string tok;
  size_t i = 0;
  while (std::getline(ss, tok, ',') && i < N) out[i++] = std::stoi(tok);
  if (i != N) throw DataError("bad int list in config: " + s);
  return out;
}

}  // namespace

std::string ModelConfig::to_text() const {
  std::string s;
  s += "width=" + std::to_string(width) + "\n";
  s += "height=" + std::to_string(height) + "\n";
  s += "conv_channels=" + join(conv_channels) + "\n";
  s += "reduce_channels=" + join(reduce_channels) + "\n";
  s += "lstm_hidden=" + join(lstm_hidden) + "\n";
  s += "decoder_channels=" + join(decoder_channels) + "\n";
  s += "deconv_stages=" + std::to_string(deconv_stages) + "\n";
  s += "learning_rate=" + fmt_double(learning_rate) + "\n";
  s += "momentum=" + fmt_double(momentum) + "\n";
  s += "weight_decay=" + fmt_double(weight_decay) + "\n";
  s += "label_variance=" + fmt_double(label_variance) + "\n";
  s += "batch_size=" + std::to_string(batch_size) + "\n";
  s += "epochs=" + std::to_string(epochs) + "\n";
  s += "holdout_percent=" + std::to_string(holdout_percent) + "\n";
  s += "early_stop_patience=" + std::to_string(early_stop_patience) + "\n";
  s += "seed=" + std::to_string(seed) + "\n";
  return s;
}

ModelConfig ModelConfig::from_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("bad config line: " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto need = [&](const std::string& k) -> const std::string& {
    auto it = kv.find(k);
    if (it == kv.end()) throw DataError("missing config key: " + k);
    return it->second;
  };
  ModelConfig c;
  c.width = std::stoi(need("width"));
  c.height = std::stoi(need("height"));
  c.conv_channels = parse_ints<5>(need("conv_channels"));
  c.reduce_channels = parse_ints<3>(need("reduce_channels"));
  c.lstm_hidden = parse_ints<3>(need("lstm_hidden"));
  c.decoder_channels = parse_ints<5>(need("decoder_channels"));
  c.deconv_stages = std::stoi(need("deconv_stages"));
  c.learning_rate = std::stod(need("learning_rate"));
  c.momentum = std::stod(need("momentum"));
  c.weight_decay = std::stod(need("weight_decay"));
  c.label_variance = std::stod(need("label_variance"));
  c.batch_size = std::stoi(need("batch_size"));
  c.epochs = std::stoi(need("epochs"));
  c.holdout_percent = std::stoi(need("holdout_percent"));
  c.early_stop_patience = std::stoi(need("early_stop_patience"));
  c.seed = std::stoull(need("seed"));
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Samples and labels
// ---------------------------------------------------------------------------

UiContext context_at(const InteractionFlow& flow, size_t i) {
  if (i >= flow.states.size()) throw InternalError("context_at: index");
  UiContext ctx;
  ctx.current = flow.states[i];
  const size_t first = i >= 3 ? i - 3 : 0;
  for (size_t j = first; j < i; ++j)
    ctx.history.emplace_back(flow.states[j], flow.actions[j]);
  return ctx;
}

nn::Tensor<float> one_hot_type(ActionType t) {
  nn::Tensor<float> lab({kActionTypeCount});
  lab.v[static_cast<size_t>(t)] = 1.f;
  return lab;
}

nn::Tensor<float> location_label(const Action& a, const UiState& state,
                                 const ModelConfig& cfg) {
  ActionHeatmap hm = render_gaussian_label(
      a, state.screen_w, state.screen_h, {cfg.width, cfg.height},
      cfg.label_variance);
  nn::Tensor<float> lab({cfg.height, cfg.width});
  for (int y = 0; y < cfg.height; ++y)
    for (int x = 0; x < cfg.width; ++x)
      lab.v[static_cast<size_t>(y) * cfg.width + x] = hm.at(x, y);
  return lab;
}

std::vector<double> score_actions(const TypeDistribution& p_type,
                                  const nn::Tensor<float>& p_loc,
                                  const UiState& state,
                                  const std::vector<Action>& actions) {
  const int H = p_loc.dim(0), W = p_loc.dim(1);
  std::vector<double> scores;
  scores.reserve(actions.size());
  for (const Action& a : actions) {
    const UiElement* el = find_element_by_id(state, a.target_element);
    if (!el)
      throw InternalError("score_actions: unknown element " + a.target_element);
    GridBox b = scale_rect(el->bounds, state.screen_w, state.screen_h, {W, H});
    if (b.x0 < 0 || b.y0 < 0 || b.x1 > W || b.y1 > H)
      throw InternalError("score_actions: element box escapes heatmap");
    double mass = 0;
    for (int y = b.y0; y < b.y1; ++y)
      for (int x = b.x0; x < b.x1; ++x)
        mass += p_loc.v[static_cast<size_t>(y) * W + x];
    scores.push_back(p_type[static_cast<size_t>(a.kind)] * mass);
  }
  return scores;
}

ScoredActions model_scores(const Net<float>& net, const UiContext& ctx) {
  const ModelConfig& cfg = net.config();
  ContextTensor t =
      encode_context(ctx, {cfg.width, cfg.height}, cfg.label_variance);
  Acts<float> a;
  net.forward(t, a);
  TypeDistribution pt;
  for (int i = 0; i < kActionTypeCount; ++i) pt[i] = a.p_type.v[i];
  ScoredActions out;
  out.actions = enumerate_actions(ctx.current);
  out.scores = score_actions(pt, a.p_loc, ctx.current, out.actions);
  return out;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

double sample_pass(Net<float>& net, const InteractionFlow& flow, size_t i,
                   Acts<float>& acts, bool backward) {
  const ModelConfig& cfg = net.config();
  UiContext ctx = context_at(flow, i);
  ContextTensor t =
      encode_context(ctx, {cfg.width, cfg.height}, cfg.label_variance);
  net.forward(t, acts);
  nn::Tensor<float> tl = one_hot_type(flow.actions[i].kind);
  nn::Tensor<float> ll = location_label(flow.actions[i], flow.states[i], cfg);
  const double loss = net.loss(acts, tl, ll);
  if (backward) net.backward(acts, tl, ll);
  return loss;
}

}  // namespace

TrainResult train(Net<float>& net, const std::vector<InteractionFlow>& flows,
                  std::ostream* progress) {
  const ModelConfig& cfg = net.config();
  if (flows.empty()) throw DataError("train: empty dataset");
  const size_t n_hold =
      std::min(flows.size() - 1,
               flows.size() * static_cast<size_t>(cfg.holdout_percent) / 100);
  const size_t n_train = flows.size() - n_hold;

  std::vector<std::pair<size_t, size_t>> samples, hold_samples;
  for (size_t fi = 0; fi < flows.size(); ++fi)
    for (size_t i = 0; i < flows[fi].states.size(); ++i)
      (fi < n_train ? samples : hold_samples).emplace_back(fi, i);
  if (samples.empty()) throw DataError("train: no training samples");

  std::mt19937_64 rng(cfg.seed);
  auto params = net.params();
  Acts<float> acts;
  TrainResult res;
  double best_hold = std::numeric_limits<double>::infinity();
  int bad_epochs = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(samples.begin(), samples.end(), rng);
    double epoch_loss = 0;
    size_t done = 0;
    while (done < samples.size()) {
      const size_t bsz =
          std::min(static_cast<size_t>(cfg.batch_size), samples.size() - done);
      nn::zero_grads(params);
      double batch_loss = 0;
      for (size_t k = 0; k < bsz; ++k) {
        const auto& [fi, i] = samples[done + k];
        batch_loss += sample_pass(net, flows[fi], i, acts, true);
      }
      for (auto* p : params)
        for (float& g : p->grad.v) g /= static_cast<float>(bsz);
      std::string err;
      if (nn::sgd_update(params, static_cast<float>(cfg.learning_rate),
                         static_cast<float>(cfg.momentum),
                         static_cast<float>(cfg.weight_decay), &err)) {
        ++res.steps;
      } else {
        ++res.skipped_steps;
        if (progress) *progress << "step aborted: " << err << "\n";
      }
      epoch_loss += batch_loss;
      done += bsz;
    }
    epoch_loss /= static_cast<double>(samples.size());

    double hold_loss = std::numeric_limits<double>::quiet_NaN();
    if (!hold_samples.empty()) {
      hold_loss = 0;
      for (const auto& [fi, i] : hold_samples)
        hold_loss += sample_pass(net, flows[fi], i, acts, false);
      hold_loss /= static_cast<double>(hold_samples.size());
    }
    res.epochs.push_back({epoch, epoch_loss, hold_loss});
    if (progress)
      *progress << "epoch " << epoch << " train_loss " << epoch_loss
                << " holdout_loss " << hold_loss << "\n";
    if (cfg.early_stop_patience > 0 && !hold_samples.empty()) {
      if (hold_loss < best_hold) {
        best_hold = hold_loss;
        bad_epochs = 0;
      } else if (++bad_epochs >= cfg.early_stop_patience) {
        break;
      }
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

int rank_of(const std::vector<double>& scores, size_t truth_index) {
  int rank = 1;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (i == truth_index) continue;
    if (scores[i] > scores[truth_index] ||
        (scores[i] == scores[truth_index] && i < truth_index))
      ++rank;
  }
  return rank;
}

EvalMetrics evaluate(const Net<float>& net,
                     const std::vector<InteractionFlow>& flows) {
  EvalMetrics m;
  std::vector<double> percentiles;
  double total_ms = 0;
  for (const InteractionFlow& flow : flows) {
    for (size_t i = 0; i < flow.states.size(); ++i) {
      UiContext ctx = context_at(flow, i);
      const auto t0 = std::chrono::steady_clock::now();
      ScoredActions sa = model_scores(net, ctx);
      total_ms += std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
      auto it = std::find(sa.actions.begin(), sa.actions.end(), flow.actions[i]);
      if (it == sa.actions.end()) {
        ++m.skipped;
        continue;
      }
      const size_t truth = static_cast<size_t>(it - sa.actions.begin());
      const int k = static_cast<int>(sa.actions.size());
      const int rank = rank_of(sa.scores, truth);
      for (size_t n = 0; n < kTopNs.size(); ++n) {
        if (rank <= kTopNs[n]) m.top_acc[n] += 1;
        m.random_top[n] += static_cast<double>(std::min(kTopNs[n], k)) / k;
      }
      percentiles.push_back(100.0 * rank / k);
      ++m.states;
    }
  }
  if (m.states > 0) {
    for (size_t n = 0; n < kTopNs.size(); ++n) {
      m.top_acc[n] /= m.states;
      m.random_top[n] /= m.states;
    }
    for (double p : percentiles) m.mean_percentile += p;
    m.mean_percentile /= m.states;
    std::sort(percentiles.begin(), percentiles.end());
    m.median_percentile = percentiles[percentiles.size() / 2];
    m.mean_score_ms = total_ms / m.states;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'H', 'M', 'N', 'C'};
constexpr uint32_t kVersion = 1;

void put_u32(std::ostream& o, uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>(v >> (8 * i));
  o.write(b, 4);
}

void put_u64(std::ostream& o, uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>(v >> (8 * i));
  o.write(b, 8);
}

void put_str(std::ostream& o, const std::string& s) {
  put_u64(o, s.size());
  o.write(s.data(), static_cast<std::streamsize>(s.size()));
}

uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

std::string get_str(std::istream& in) {
  const uint64_t n = get_u64(in);
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  return s;
}

static_assert(sizeof(float) == 4);

}  // namespace

void save_checkpoint(const std::string& path, const Net<float>& net,
                     uint64_t step, const std::string& rng_state) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_str(out, net.config().to_text());
  put_u64(out, step);
  put_str(out, rng_state);
  auto ps = net.params();
  put_u32(out, static_cast<uint32_t>(ps.size()));
  for (const auto* p : ps) {
    put_str(out, p->name);
    put_u64(out, p->value.size());
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(p->value.size() * 4));
  }
  if (!out) throw DataError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError(path + ": not a checkpoint file");
  const uint32_t ver = get_u32(in);
  if (ver != kVersion)
    throw DataError(path + ": unsupported checkpoint version " +
                    std::to_string(ver));
  Checkpoint ck;
  ck.config = ModelConfig::from_text(get_str(in));
  ck.step = get_u64(in);
  ck.rng_state = get_str(in);
  ck.net = std::make_unique<Net<float>>(ck.config);
  auto ps = ck.net->params();
  const uint32_t count = get_u32(in);
  if (count != ps.size()) throw DataError(path + ": parameter count mismatch");
  for (auto* p : ps) {
    const std::string name = get_str(in);
    if (name != p->name)
      throw DataError(path + ": unexpected blob '" + name + "'");
    const uint64_t n = get_u64(in);
    if (n != p->value.size())
      throw DataError(path + ": blob size mismatch for " + name);
    in.read(reinterpret_cast<char*>(p->value.data()),
            static_cast<std::streamsize>(n * 4));
  }
  if (!in) throw DataError(path + ": truncated checkpoint");
  return ck;
}

}  // namespace humanoid
