#pragma once

#include <optional>
#include <random>
#include <set>
#include <tuple>
#include <unordered_map>

#include "humanoid/training.hpp"
#include "humanoid/ui.hpp"

namespace humanoid {

// Directed multigraph of observed (state, action, state) transitions with
// explored/unexplored bookkeeping per node.
class UiTransitionGraph {
 public:
  struct Node {
    uint64_t fp;
    UiState exemplar;
    std::vector<Action> actions;   // enumerate_actions(exemplar), fixed order
    std::vector<bool> explored;    // parallel to `actions`
    int discovery_index;
    int unexplored_count;
  };
  struct Edge {
    int from, to;
    Action action;
  };

  // Registers the state if unseen; returns its node index.
  int ensure_node(const UiState& s);
  bool contains(uint64_t fp) const { return index_.count(fp) > 0; }
  int node_index(uint64_t fp) const;

  // Adds nodes/edge as needed (duplicate edges are idempotent) and marks
  // the action explored at `from`.
  void record_transition(const UiState& from, const Action& a,
                         const UiState& to);

  // Minimal-hop path; among equal-length paths the lexicographically
  // smallest by edge insertion order. nullopt if unreachable; empty path
  // iff from == to.
  std::optional<std::vector<Action>> shortest_path(uint64_t from,
                                                   uint64_t to) const;

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  size_t actions_explored() const;
  size_t actions_total() const;

  std::string to_dot() const;

 private:
  std::unordered_map<uint64_t, int> index_;
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::set<std::tuple<int, int, std::string, int>> edge_keys_;
};

struct ExplorationPolicy {
  enum class Kind { Random, ModelGreedy, ModelWeighted };
  Kind kind = Kind::Random;
  uint64_t seed = 0;
};
std::optional<ExplorationPolicy::Kind> policy_kind_from_string(
    std::string_view s);
const char* to_string(ExplorationPolicy::Kind k);

// Environment under test. Sessions are strictly sequential.
class Env {
 public:
  virtual ~Env() = default;
  virtual UiState reset() = 0;
  virtual UiState perform(const Action& a) = 0;
  virtual std::string app_id() const = 0;
  virtual bool is_target(const UiState&) const { return false; }
};

struct LogRecord {
  int step;
  uint64_t state;
  std::string action_kind;  // "restart" for restart directives
  std::string element;
  std::string purpose;  // explore | navigate | restart
  uint64_t new_state;
  size_t states_seen;
  size_t actions_explored;
  int targets_hit;
};

struct ExplorationLog {
  std::vector<LogRecord> records;
  bool terminated = false;  // everything explored before the budget ran out
  std::string failure;      // nonempty if the env failed mid-run

  void write_csv(std::ostream& out,
                 const std::vector<std::pair<std::string, std::string>>&
                     header = {}) const;
};

struct Decision {
  enum class Type { Explore, Navigate, Restart, Terminate };
  Type type;
  Action action;  // valid for Explore/Navigate
};

// One exploration session: owns the UTG, the policy RNG, and the rolling
// UI context fed to the model.
class Explorer {
 public:
  Explorer(ExplorationPolicy policy, const Net<float>* model = nullptr);

  // Algorithm: explore an unexplored action of the current state if any;
  // otherwise navigate toward the known state with the most unexplored
  // actions; restart if unreachable; terminate when nothing is left.
  Decision next_input(const UiState& current);

  ExplorationLog run(Env& env, int budget);

  UiTransitionGraph& utg() { return utg_; }
  const UiTransitionGraph& utg() const { return utg_; }

 private:
  std::vector<double> explore_weights(const UiTransitionGraph::Node& node);

  ExplorationPolicy policy_;
  const Net<float>* model_;
  UiTransitionGraph utg_;
  std::mt19937_64 rng_;
  std::vector<std::pair<UiState, Action>> history_;  // last 3 transitions
};

}  // namespace humanoid
