#pragma once

#include <map>
#include <random>
#include <set>

#include "humanoid/serialize.hpp"
#include "humanoid/trace.hpp"
#include "humanoid/ui.hpp"

namespace humanoid {

// (state name, element id, action kind) lookup key.
struct SimKey {
  std::string state;
  std::string element;
  ActionType kind;
  auto operator<=>(const SimKey&) const = default;
};

// A deterministic synthetic app: a state machine over UI trees. Unwired
// actions are ineffective (self-loops).
struct SimAppSpec {
  std::string app_id;
  int screen_w = 450, screen_h = 800;
  std::string initial;
  std::map<std::string, UiState> states;
  std::map<SimKey, std::string> transitions;
  std::map<SimKey, double> user_prefs;  // weights; unlisted actions weigh 1
  std::set<std::string> targets;        // gated deep functionality

  void validate() const;
  // Sum over states of enumerate_actions sizes.
  size_t total_actions() const;
};

json sim_spec_to_json(const SimAppSpec& spec);
SimAppSpec sim_spec_from_json(const json& j);

struct SimSession {
  const SimAppSpec* spec = nullptr;
  std::string current;
  uint64_t steps = 0;
  std::mt19937_64 rng;

  SimSession(const SimAppSpec& s, uint64_t seed)
      : spec(&s), current(s.initial), rng(seed) {}

  const UiState& state() const { return spec->states.at(current); }
};

// Applies the action; unmatched (element, kind) pairs leave the state
// unchanged. Rejects actions not enumerable in the current state.
const UiState& sim_step(SimSession& s, const Action& a);

const UiState& sim_reset(SimSession& s);

// Preference-weighted choice among the enumerable actions.
Action scripted_user_step(SimSession& s);

struct RawTrace {
  std::string name;  // "<app_id>__flowN"
  std::vector<MotionEvent> events;
};

struct Corpus {
  std::vector<InteractionFlow> flows;
  StateStore states;
  std::vector<RawTrace> raw;  // empty unless emit_raw
};

Corpus generate_traces(const SimAppSpec& spec, int n_flows, int flow_len,
                       uint64_t seed, bool emit_raw);

enum class SuiteKind { Gated, Uniform, Wide };
std::optional<SuiteKind> suite_kind_from_string(std::string_view s);

// Procedurally generated benchmark apps. Gated apps hide a tagged target
// state behind a short touch sequence on a visually distinctive top bar
// that the scripted user strongly prefers; uniform apps share the topology
// with flat preferences; wide apps average >= 50 actions per state.
std::vector<SimAppSpec> make_benchmark_suite(SuiteKind kind, int count,
                                             uint64_t seed);

// Probability that a uniform-random action walk from the initial state
// reaches a target state within `depth` steps (exact enumeration).
double random_path_probability(const SimAppSpec& spec, int depth);

}  // namespace humanoid
