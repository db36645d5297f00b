#include "humanoid/sim.hpp"

#include <algorithm>

namespace humanoid {

void SimAppSpec::validate() const {
  if (!states.count(initial)) throw DataError("initial state missing: " + initial);
  for (const auto& [name, st] : states) {
    if (st.screen_w != screen_w || st.screen_h != screen_h)
      throw DataError("state '" + name + "': screen dims differ from app");
  }
  auto check_key = [&](const SimKey& k, const char* what) {
    auto it = states.find(k.state);
    if (it == states.end())
      throw DataError(std::string(what) + ": unknown state " + k.state);
    const UiElement* el = find_element_by_id(it->second, k.element);
    bool ok = false;
    if (el)
      for (const Action& a : enumerate_actions(it->second))
        if (a.target_element == k.element && a.kind == k.kind) ok = true;
    if (!ok)
      throw DataError(std::string(what) + ": (" + k.state + "," + k.element +
                      "," + to_string(k.kind) + ") not enumerable");
  };
  for (const auto& [k, to] : transitions) {
    check_key(k, "transition");
    if (!states.count(to)) throw DataError("transition target missing: " + to);
  }
  for (const auto& [k, w] : user_prefs) {
    check_key(k, "pref");
    if (!(w > 0)) throw DataError("pref weight must be positive");
  }
  for (const auto& t : targets)
    if (!states.count(t)) throw DataError("target state missing: " + t);
}

size_t SimAppSpec::total_actions() const {
  size_t n = 0;
  for (const auto& [name, st] : states) n += enumerate_actions(st).size();
  return n;
}

json sim_spec_to_json(const SimAppSpec& spec) {
  json j;
  j["app_id"] = spec.app_id;
  j["screen"] = {{"w", spec.screen_w}, {"h", spec.screen_h}};
  j["initial"] = spec.initial;
  json states = json::object();
  for (const auto& [name, st] : spec.states) states[name] = state_to_json(st);
  j["states"] = std::move(states);
  json trs = json::array();
  for (const auto& [k, to] : spec.transitions)
    trs.push_back({{"from", k.state},
                   {"element", k.element},
                   {"kind", to_string(k.kind)},
                   {"to", to}});
  j["transitions"] = std::move(trs);
  json prefs = json::array();
  for (const auto& [k, w] : spec.user_prefs)
    prefs.push_back({{"state", k.state},
                     {"element", k.element},
                     {"kind", to_string(k.kind)},
                     {"w", w}});
  j["prefs"] = std::move(prefs);
  j["targets"] = json(std::vector<std::string>(spec.targets.begin(),
                                               spec.targets.end()));
  return j;
}

SimAppSpec sim_spec_from_json(const json& j) {
  SimAppSpec spec;
  try {
    spec.app_id = j.at("app_id").get<std::string>();
    spec.screen_w = j.at("screen").at("w").get<int>();
    spec.screen_h = j.at("screen").at("h").get<int>();
    spec.initial = j.at("initial").get<std::string>();
    for (const auto& [name, sj] : j.at("states").items())
      spec.states.emplace(name, state_from_json(sj));
    auto parse_key = [](const json& e, const char* state_key) {
      auto k = action_type_from_string(e.at("kind").get<std::string>());
      if (!k) throw DataError("unknown action kind in sim spec");
      return SimKey{e.at(state_key).get<std::string>(),
                    e.at("element").get<std::string>(), *k};
    };
    for (const auto& e : j.at("transitions"))
      spec.transitions[parse_key(e, "from")] = e.at("to").get<std::string>();
    for (const auto& e : j.at("prefs"))
      spec.user_prefs[parse_key(e, "state")] = e.at("w").get<double>();
    for (const auto& t : j.at("targets"))
      spec.targets.insert(t.get<std::string>());
  } catch (const json::exception& ex) {
    throw DataError(std::string("bad sim spec json: ") + ex.what());
  }
  spec.validate();
  return spec;
}

const UiState& sim_step(SimSession& s, const Action& a) {
  const UiState& st = s.state();
  bool enumerable = false;
  for (const Action& cand : enumerate_actions(st))
    if (cand.target_element == a.target_element && cand.kind == a.kind) {
      enumerable = true;
      break;
    }
  if (!enumerable)
    throw DataError("action (" + a.target_element + "," + to_string(a.kind) +
                    ") not enumerable in state " + s.current);
  auto it = s.spec->transitions.find({s.current, a.target_element, a.kind});
  if (it != s.spec->transitions.end()) s.current = it->second;
  ++s.steps;
  return s.state();
}

const UiState& sim_reset(SimSession& s) {
  s.current = s.spec->initial;
  return s.state();
}

Action scripted_user_step(SimSession& s) {
  const std::vector<Action> actions = enumerate_actions(s.state());
  if (actions.empty())
    throw DataError("state " + s.current + " has no enumerable actions");
  std::vector<double> w(actions.size(), 1.0);
  double total = 0;
  for (size_t i = 0; i < actions.size(); ++i) {
    auto it = s.spec->user_prefs.find(
        {s.current, actions[i].target_element, actions[i].kind});
    if (it != s.spec->user_prefs.end()) w[i] = it->second;
    total += w[i];
  }
  const double u = (s.rng() >> 11) * 0x1.0p-53 * total;
  double acc = 0;
  for (size_t i = 0; i < actions.size(); ++i) {
    acc += w[i];
    if (u < acc) return actions[i];
  }
  return actions.back();
}

// ---------------------------------------------------------------------------
// trace generation
// ---------------------------------------------------------------------------

namespace {

int64_t emit_session(std::vector<MotionEvent>& ev, int64_t t, int x0, int y0,
                     int x1, int y1, int64_t dur, bool kbd,
                     const std::optional<std::string>& edit,
                     const std::string& ref) {
  MotionEvent e;
  e.keyboard_shown = kbd;
  e.focused_editable = edit;
  e.state_ref = ref;
  e.t = t;
  e.phase = MotionEvent::Phase::Enter;
  e.x = x0;
  e.y = y0;
  ev.push_back(e);
  e.t = t + dur / 2;
  e.phase = MotionEvent::Phase::Move;
  e.x = (x0 + x1) / 2;
  e.y = (y0 + y1) / 2;
  ev.push_back(e);
  e.t = t + dur;
  e.phase = MotionEvent::Phase::Leave;
  e.x = x1;
  e.y = y1;
  ev.push_back(e);
  return t + dur;
}

// Realizes one action as cursor geometry comfortably inside the Table 1
// rule regions (>= 5 px / >= 50 ms from every threshold).
int64_t emit_action(std::vector<MotionEvent>& ev, int64_t t, const Action& a,
                    const std::string& ref) {
  switch (a.kind) {
    case ActionType::Touch:
      return emit_session(ev, t, a.x, a.y, a.x + 10, a.y, 200, false,
                          std::nullopt, ref);
    case ActionType::LongTouch:
      return emit_session(ev, t, a.x, a.y, a.x, a.y + 5, 700, false,
                          std::nullopt, ref);
    case ActionType::SwipeUp:
      return emit_session(ev, t, a.x, a.y, a.x, a.y - 60, 250, false,
                          std::nullopt, ref);
    case ActionType::SwipeDown:
      return emit_session(ev, t, a.x, a.y, a.x, a.y + 60, 250, false,
                          std::nullopt, ref);
    case ActionType::SwipeLeft:
      return emit_session(ev, t, a.x, a.y, a.x - 60, a.y, 250, false,
                          std::nullopt, ref);
    case ActionType::SwipeRight:
      return emit_session(ev, t, a.x, a.y, a.x + 60, a.y, 250, false,
                          std::nullopt, ref);
    case ActionType::InputText: {
      t = emit_session(ev, t, a.x, a.y, a.x + 5, a.y, 100, true,
                       a.target_element, ref);
      return emit_session(ev, t + 50, a.x, a.y, a.x - 5, a.y, 100, true,
                          a.target_element, ref);
    }
  }
  return t;
}

}  // namespace

Corpus generate_traces(const SimAppSpec& spec, int n_flows, int flow_len,
                       uint64_t seed, bool emit_raw) {
  if (n_flows < 1 || flow_len < 1)
    throw DataError("generate_traces: n_flows and flow_len must be >= 1");
  spec.validate();
  Corpus corpus;
  for (int fi = 0; fi < n_flows; ++fi) {
    SimSession sess(spec, seed * 6364136223846793005ULL +
                              static_cast<uint64_t>(fi) + 1);
    InteractionFlow flow;
    flow.app_id = spec.app_id;
    RawTrace raw;
    raw.name = spec.app_id + "__flow" + std::to_string(fi);
    int64_t t = 1000;
    for (int step = 0; step < flow_len; ++step) {
      const UiState st = sess.state();
      Action a = scripted_user_step(sess);
      // Back-to-back text input on the same field would be merged into one
      // action by trace-prep; pick something else to keep raw streams
      // round-trippable.
      if (!flow.actions.empty() && a.kind == ActionType::InputText &&
          flow.actions.back() == a &&
          flow.states.back().fingerprint == st.fingerprint) {
        for (int tries = 0; tries < 16 && a.kind == ActionType::InputText &&
                            a == flow.actions.back();
             ++tries)
          a = scripted_user_step(sess);
        if (a.kind == ActionType::InputText && a == flow.actions.back()) {
          const auto acts = enumerate_actions(st);
          for (const Action& cand : acts)
            if (!(cand == a)) {
              a = cand;
              break;
            }
        }
      }
      corpus.states.put(st);
      flow.states.push_back(st);
      flow.actions.push_back(a);
      if (emit_raw)
        t = emit_action(raw.events, t, a, hex64(st.fingerprint)) + 300;
      sim_step(sess, a);
    }
    corpus.flows.push_back(std::move(flow));
    if (emit_raw) corpus.raw.push_back(std::move(raw));
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// benchmark suite
// ---------------------------------------------------------------------------

std::optional<SuiteKind> suite_kind_from_string(std::string_view s) {
  if (s == "gated") return SuiteKind::Gated;
  if (s == "uniform") return SuiteKind::Uniform;
  if (s == "wide") return SuiteKind::Wide;
  return std::nullopt;
}

namespace {

UiElement container(std::string id, Rect r) {
  UiElement e;
  e.id = std::move(id);
  e.bounds = r;
  return e;
}

UiElement button(std::string id, Rect r) {
  UiElement e = container(std::move(id), r);
  e.clickable = true;
  return e;
}

UiElement label(std::string id, Rect r, std::string text) {
  UiElement e = container(std::move(id), r);
  e.is_text = true;
  e.text = std::move(text);
  return e;
}

constexpr int kScreenW = 450, kScreenH = 800;

// Shared visual signature for the "go on" affordance: a full-width bar at
// the top of the screen. The learnable pattern is "touch the top bar".
UiElement adv_bar() { return button("adv", {20, 30, 430, 120}); }

UiState gate_state(const std::string& title, int n_buttons, int jitter,
                   bool with_list) {
  UiElement root = container("root", {0, 0, kScreenW, kScreenH});
  root.children.push_back(adv_bar());
  root.children.push_back(label("title", {20, 140, 430, 190}, title));
  for (int j = 0; j < n_buttons; ++j) {
    const int c = j % 2, r = j / 2;
    root.children.push_back(button(
        "b" + std::to_string(j), {30 + 210 * c, 220 + jitter + 90 * r,
                                  210 + 210 * c, 280 + jitter + 90 * r}));
  }
  if (with_list) {
    UiElement list = container("list", {30, 550, 420, 740});
    list.scrollable = true;
    root.children.push_back(std::move(list));
  }
  return make_state(std::move(root), kScreenW, kScreenH);
}

SimAppSpec gated_app(int index, uint64_t seed, bool gated_prefs) {
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL +
                      static_cast<uint64_t>(index));
  const int m = 4 + static_cast<int>(rng() % 3);       // distractor buttons
  const int jitter = 10 * static_cast<int>(rng() % 3);  // grid offset, px
  SimAppSpec spec;
  spec.app_id = (gated_prefs ? std::string("gated_") : std::string("uniform_")) +
                std::to_string(index);
  spec.screen_w = kScreenW;
  spec.screen_h = kScreenH;
  spec.initial = "gate0";
  const std::string id = std::to_string(index);
  for (int k = 0; k < 3; ++k) {
    const std::string g = "gate" + std::to_string(k);
    spec.states.emplace(g, gate_state(g + "/" + id, m, jitter, true));
    const std::string next = k == 2 ? "target" : "gate" + std::to_string(k + 1);
    spec.transitions[{g, "adv", ActionType::Touch}] = next;
    for (int j = 0; j < m; j += 2) {
      const std::string d = "d" + std::to_string(k) + "_" + std::to_string(j);
      spec.states.emplace(d, gate_state(d + "/" + id, 2, jitter, false));
      spec.transitions[{g, "b" + std::to_string(j), ActionType::Touch}] = d;
      spec.transitions[{d, "adv", ActionType::Touch}] = g;
    }
  }
  spec.states.emplace("target", gate_state("target/" + id, 1, jitter, false));
  spec.transitions[{"target", "adv", ActionType::Touch}] = "gate0";
  spec.targets.insert("target");
  if (gated_prefs)
    for (const auto& [name, st] : spec.states)
      spec.user_prefs[{name, "adv", ActionType::Touch}] = 15.0;
  spec.validate();
  return spec;
}

SimAppSpec wide_app(int index, uint64_t seed) {
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 7919 +
                      static_cast<uint64_t>(index));
  const int jitter = 5 * static_cast<int>(rng() % 3);
  SimAppSpec spec;
  spec.app_id = "wide_" + std::to_string(index);
  spec.screen_w = kScreenW;
  spec.screen_h = kScreenH;
  spec.initial = "s0";
  for (int k = 0; k < 4; ++k) {
    UiElement root = container("root", {0, 0, kScreenW, kScreenH});
    root.children.push_back(
        label("title", {10, 5, 440, 25}, "s" + std::to_string(k)));
    for (int j = 0; j < 21; ++j) {
      const int c = j % 3, r = j / 3;
      UiElement b = button("b" + std::to_string(j),
                           {10 + 150 * c, 30 + jitter + 90 * r,
                            140 + 150 * c, 90 + jitter + 90 * r});
      b.long_clickable = true;
      root.children.push_back(std::move(b));
    }
    for (int j = 0; j < 2; ++j) {
      UiElement strip =
          container("list" + std::to_string(j), {20, 670 + 40 * j, 430, 700 + 40 * j});
      strip.scrollable = true;
      root.children.push_back(std::move(strip));
    }
    UiElement f0 = container("f0", {20, 755, 215, 795});
    f0.editable = true;
    UiElement f1 = container("f1", {235, 755, 440, 795});
    f1.editable = true;
    root.children.push_back(std::move(f0));
    root.children.push_back(std::move(f1));
    spec.states.emplace("s" + std::to_string(k),
                        make_state(std::move(root), kScreenW, kScreenH));
    spec.transitions[{"s" + std::to_string(k), "b0", ActionType::Touch}] =
        "s" + std::to_string((k + 1) % 4);
  }
  spec.validate();
  return spec;
}

}  // namespace

std::vector<SimAppSpec> make_benchmark_suite(SuiteKind kind, int count,
                                             uint64_t seed) {
  if (count < 1) throw DataError("suite count must be >= 1");
  std::vector<SimAppSpec> suite;
  for (int i = 0; i < count; ++i) {
    switch (kind) {
      case SuiteKind::Gated: suite.push_back(gated_app(i, seed, true)); break;
      case SuiteKind::Uniform:
        suite.push_back(gated_app(i, seed, false));
        break;
      case SuiteKind::Wide: suite.push_back(wide_app(i, seed)); break;
    }
  }
  return suite;
}

double random_path_probability(const SimAppSpec& spec, int depth) {
  std::map<std::pair<std::string, int>, double> memo;
  std::function<double(const std::string&, int)> go =
      [&](const std::string& state, int d) -> double {
    if (spec.targets.count(state)) return 1.0;
    if (d == 0) return 0.0;
    auto key = std::make_pair(state, d);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    const auto actions = enumerate_actions(spec.states.at(state));
    double p = 0;
    for (const Action& a : actions) {
      auto tr = spec.transitions.find({state, a.target_element, a.kind});
      const std::string& next =
          tr == spec.transitions.end() ? state : tr->second;
      p += go(next, d - 1) / static_cast<double>(actions.size());
    }
    memo[key] = p;
    return p;
  };
  return go(spec.initial, depth);
}

}  // namespace humanoid
