#include "humanoid/explorer.hpp"

#include <algorithm>
#include <deque>
#include <ostream>
#include <sstream>

namespace humanoid {

int UiTransitionGraph::ensure_node(const UiState& s) {
  auto it = index_.find(s.fingerprint);
  if (it != index_.end()) return it->second;
  Node n;
  n.fp = s.fingerprint;
  n.exemplar = s;
  n.actions = enumerate_actions(s);
  n.explored.assign(n.actions.size(), false);
  n.discovery_index = static_cast<int>(nodes_.size());
  n.unexplored_count = static_cast<int>(n.actions.size());
  nodes_.push_back(std::move(n));
  index_[s.fingerprint] = n.discovery_index;
  return n.discovery_index;
}

int UiTransitionGraph::node_index(uint64_t fp) const {
  auto it = index_.find(fp);
  if (it == index_.end()) throw InternalError("UTG: unknown state");
  return it->second;
}

void UiTransitionGraph::record_transition(const UiState& from, const Action& a,
                                          const UiState& to) {
  const int fi = ensure_node(from);
  const int ti = ensure_node(to);
  Node& n = nodes_[fi];
  int ai = -1;
  for (size_t i = 0; i < n.actions.size(); ++i)
    if (n.actions[i].target_element == a.target_element &&
        n.actions[i].kind == a.kind) {
      ai = static_cast<int>(i);
      break;
    }
  if (ai < 0)
    throw InternalError("record_transition: action not enumerable in state");
  if (!n.explored[ai]) {
    n.explored[ai] = true;
    --n.unexplored_count;
  }
  auto key = std::make_tuple(fi, ti, a.target_element, static_cast<int>(a.kind));
  if (edge_keys_.insert(key).second) edges_.push_back({fi, ti, n.actions[ai]});
}

std::optional<std::vector<Action>> UiTransitionGraph::shortest_path(
    uint64_t from, uint64_t to) const {
  const int src = node_index(from);
  const int dst = node_index(to);
  if (src == dst) return std::vector<Action>{};
  // Hop counts toward the target, then a greedy forward walk taking the
  // earliest-inserted edge that still decreases the distance; this yields
  // the lexicographically smallest equal-length path.
  const int INF = 1 << 30;
  std::vector<int> dist(nodes_.size(), INF);
  dist[static_cast<size_t>(dst)] = 0;
  std::deque<int> queue{dst};
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (const Edge& e : edges_)
      if (e.to == u && dist[static_cast<size_t>(e.from)] == INF) {
        dist[static_cast<size_t>(e.from)] = dist[static_cast<size_t>(u)] + 1;
        queue.push_back(e.from);
      }
  }
  if (dist[static_cast<size_t>(src)] == INF) return std::nullopt;
  std::vector<Action> path;
  int cur = src;
  while (cur != dst) {
    for (const Edge& e : edges_) {
      if (e.from == cur &&
          dist[static_cast<size_t>(e.to)] == dist[static_cast<size_t>(cur)] - 1) {
        path.push_back(e.action);
        cur = e.to;
        break;
      }
    }
  }
  return path;
}

size_t UiTransitionGraph::actions_explored() const {
  size_t n = 0;
  for (const Node& node : nodes_)
    n += node.actions.size() - static_cast<size_t>(node.unexplored_count);
  return n;
}

size_t UiTransitionGraph::actions_total() const {
  size_t n = 0;
  for (const Node& node : nodes_) n += node.actions.size();
  return n;
}

std::string UiTransitionGraph::to_dot() const {
  std::ostringstream out;
  out << "digraph utg {\n";
  for (const Node& n : nodes_)
    out << "  n" << n.discovery_index << " [label=\"" << hex64(n.fp).substr(0, 8)
        << "\\nunexplored=" << n.unexplored_count << "\"];\n";
  for (const Edge& e : edges_)
    out << "  n" << e.from << " -> n" << e.to << " [label=\""
        << to_string(e.action.kind) << "@" << e.action.target_element
        << "\"];\n";
  out << "}\n";
  return out.str();
}

std::optional<ExplorationPolicy::Kind> policy_kind_from_string(
    std::string_view s) {
  if (s == "random") return ExplorationPolicy::Kind::Random;
  if (s == "model-greedy") return ExplorationPolicy::Kind::ModelGreedy;
  if (s == "model-weighted") return ExplorationPolicy::Kind::ModelWeighted;
  return std::nullopt;
}

const char* to_string(ExplorationPolicy::Kind k) {
  switch (k) {
    case ExplorationPolicy::Kind::Random: return "random";
    case ExplorationPolicy::Kind::ModelGreedy: return "model-greedy";
    case ExplorationPolicy::Kind::ModelWeighted: return "model-weighted";
  }
  return "?";
}

Explorer::Explorer(ExplorationPolicy policy, const Net<float>* model)
    : policy_(policy), model_(model), rng_(policy.seed) {
  if (policy_.kind != ExplorationPolicy::Kind::Random && !model_)
    throw UsageError("model-guided policy requires a checkpoint");
}

std::vector<double> Explorer::explore_weights(
    const UiTransitionGraph::Node& node) {
  if (!model_) return std::vector<double>(node.actions.size(), 1.0);
  UiContext ctx;
  ctx.current = node.exemplar;
  ctx.history = history_;
  ScoredActions sa = model_scores(*model_, ctx);
  return sa.scores;
}

Decision Explorer::next_input(const UiState& current) {
  const int ci = utg_.ensure_node(current);
  const UiTransitionGraph::Node& node = utg_.nodes()[static_cast<size_t>(ci)];
  if (node.unexplored_count > 0) {
    std::vector<size_t> unexplored;
    for (size_t i = 0; i < node.actions.size(); ++i)
      if (!node.explored[i]) unexplored.push_back(i);
    size_t pick = 0;
    if (policy_.kind == ExplorationPolicy::Kind::Random) {
      pick = unexplored[rng_() % unexplored.size()];
    } else {
      const std::vector<double> scores = explore_weights(node);
      if (policy_.kind == ExplorationPolicy::Kind::ModelGreedy) {
        pick = unexplored[0];
        for (size_t i : unexplored)
          if (scores[i] > scores[pick]) pick = i;
      } else {
        double total = 0;
        for (size_t i : unexplored) total += scores[i];
        if (total <= 0) {
          pick = unexplored[rng_() % unexplored.size()];
        } else {
          const double u = (rng_() >> 11) * 0x1.0p-53 * total;
          double acc = 0;
          pick = unexplored.back();
          for (size_t i : unexplored) {
            acc += scores[i];
            if (u < acc) {
              pick = i;
              break;
            }
          }
        }
      }
    }
    return {Decision::Type::Explore, node.actions[pick]};
  }
  // Fully explored here: head for the state with the most unexplored
  // actions (ties: earliest discovery).
  const UiTransitionGraph::Node* target = nullptr;
  for (const auto& n : utg_.nodes())
    if (n.unexplored_count > 0 &&
        (!target || n.unexplored_count > target->unexplored_count))
      target = &n;
  if (!target) return {Decision::Type::Terminate, {}};
  auto path = utg_.shortest_path(current.fingerprint, target->fp);
  if (!path || path->empty()) return {Decision::Type::Restart, {}};
  return {Decision::Type::Navigate, path->front()};
}

ExplorationLog Explorer::run(Env& env, int budget) {
  if (budget < 1) throw UsageError("budget must be >= 1");
  ExplorationLog log;
  UiState s = env.reset();
  int targets_hit = 0;
  for (int step = 1; step <= budget; ++step) {
    utg_.ensure_node(s);
    Decision d = next_input(s);
    if (d.type == Decision::Type::Terminate) {
      log.terminated = true;
      break;
    }
    LogRecord rec;
    rec.step = step;
    rec.state = s.fingerprint;
    UiState s_new;
    if (d.type == Decision::Type::Restart) {
      s_new = env.reset();
      history_.clear();
      rec.action_kind = "restart";
      rec.element = "-";
      rec.purpose = "restart";
    } else {
      try {
        s_new = env.perform(d.action);
      } catch (const std::exception& ex) {
        log.failure = ex.what();
        break;
      }
      utg_.record_transition(s, d.action, s_new);
      history_.emplace_back(s, d.action);
      if (history_.size() > 3) history_.erase(history_.begin());
      rec.action_kind = to_string(d.action.kind);
      rec.element = d.action.target_element;
      rec.purpose = d.type == Decision::Type::Explore ? "explore" : "navigate";
    }
    utg_.ensure_node(s_new);
    if (env.is_target(s_new)) ++targets_hit;
    rec.new_state = s_new.fingerprint;
    rec.states_seen = utg_.nodes().size();
    rec.actions_explored = utg_.actions_explored();
    rec.targets_hit = targets_hit;
    log.records.push_back(std::move(rec));
    s = s_new;
  }
  return log;
}

void ExplorationLog::write_csv(
    std::ostream& out,
    const std::vector<std::pair<std::string, std::string>>& header) const {
  for (const auto& [k, v] : header) out << "# " << k << "=" << v << "\n";
  out << "step,state,action_kind,element,purpose,new_state,states_seen,"
         "actions_explored,targets_hit\n";
  for (const LogRecord& r : records)
    out << r.step << "," << hex64(r.state) << "," << r.action_kind << ","
        << r.element << "," << r.purpose << "," << hex64(r.new_state) << ","
        << r.states_seen << "," << r.actions_explored << "," << r.targets_hit
        << "\n";
}

}  // namespace humanoid
