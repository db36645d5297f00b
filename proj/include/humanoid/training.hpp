#pragma once

#include <iosfwd>

#include "humanoid/model.hpp"

namespace humanoid {

// UI context for sample i of a flow: state s_i plus up to 3 preceding
// (state, action) transitions.
UiContext context_at(const InteractionFlow& flow, size_t i);

nn::Tensor<float> one_hot_type(ActionType t);

// Gaussian location label for the action, at the model's raster dims.
nn::Tensor<float> location_label(const Action& a, const UiState& state,
                                 const ModelConfig& cfg);

// p(action) = p_type(kind) * sum of p_loc over the action element's scaled
// bounds. No renormalization. Throws InternalError if an element's scaled
// box escapes the heatmap.
std::vector<double> score_actions(const TypeDistribution& p_type,
                                  const nn::Tensor<float>& p_loc,
                                  const UiState& state,
                                  const std::vector<Action>& actions);

// Convenience: encode + forward + score.
struct ScoredActions {
  std::vector<Action> actions;  // enumeration order of the current state
  std::vector<double> scores;
};
ScoredActions model_scores(const Net<float>& net, const UiContext& ctx);

struct EpochRow {
  int epoch;
  double train_loss;
  double holdout_loss;  // NaN if no holdout
};

struct TrainResult {
  std::vector<EpochRow> epochs;
  uint64_t steps = 0;
  int skipped_steps = 0;  // aborted on non-finite gradients
};

// Momentum-SGD training over all (context_i, a_i) samples. Deterministic
// under cfg.seed. Flows at the tail (holdout_percent) are held out for the
// per-epoch loss and optional early stopping.
TrainResult train(Net<float>& net, const std::vector<InteractionFlow>& flows,
                  std::ostream* progress = nullptr);

struct EvalMetrics {
  // indexed by N in {1,3,5,10}
  std::array<double, 4> top_acc{};
  std::array<double, 4> random_top{};
  double mean_percentile = 0;
  double median_percentile = 0;
  int states = 0;
  int skipped = 0;  // ground truth not enumerable
  double mean_score_ms = 0;
};
inline constexpr std::array<int, 4> kTopNs{1, 3, 5, 10};

EvalMetrics evaluate(const Net<float>& net,
                     const std::vector<InteractionFlow>& flows);

// Per-state rank of the ground-truth action (1-based, descending score,
// ties broken by enumeration index).
int rank_of(const std::vector<double>& scores, size_t truth_index);

// Checkpoint: magic "HMNC", u32 version, canonical config text, step
// counter, RNG state, then named little-endian f32 blobs.
struct Checkpoint {
  ModelConfig config;
  uint64_t step = 0;
  std::string rng_state;
  std::unique_ptr<Net<float>> net;
};

void save_checkpoint(const std::string& path, const Net<float>& net,
                     uint64_t step, const std::string& rng_state);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace humanoid
