#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "humanoid/sim.hpp"
#include "humanoid/trace.hpp"

using namespace humanoid;

namespace {

UiElement elem(const std::string& id, Rect r) {
  UiElement e;
  e.id = id;
  e.bounds = r;
  return e;
}

UiElement button(const std::string& id, Rect r) {
  UiElement e = elem(id, r);
  e.clickable = true;
  return e;
}

// Two-screen app: home has "go" (to detail) and "noop"; detail has "back".
SimAppSpec two_screen_app() {
  SimAppSpec spec;
  spec.app_id = "two";
  spec.initial = "home";
  UiElement home = elem("root", {0, 0, 450, 800});
  home.children.push_back(button("go", {50, 100, 400, 200}));
  home.children.push_back(button("noop", {50, 300, 400, 400}));
  spec.states.emplace("home", make_state(std::move(home), 450, 800));
  UiElement detail = elem("root", {0, 0, 450, 800});
  detail.children.push_back(button("back", {50, 100, 400, 200}));
  spec.states.emplace("detail", make_state(std::move(detail), 450, 800));
  spec.transitions[{"home", "go", ActionType::Touch}] = "detail";
  spec.transitions[{"detail", "back", ActionType::Touch}] = "home";
  spec.validate();
  return spec;
}

Action touch(const UiState& s, const std::string& id) {
  for (const Action& a : enumerate_actions(s))
    if (a.target_element == id && a.kind == ActionType::Touch) return a;
  throw std::runtime_error("no touch action on " + id);
}

}  // namespace

TEST_CASE("sim_step follows transitions, self-loops on unwired actions") {
  SimAppSpec spec = two_screen_app();
  SimSession s(spec, 1);
  CHECK(s.current == "home");
  sim_step(s, touch(s.state(), "noop"));  // unwired -> self loop
  CHECK(s.current == "home");
  sim_step(s, touch(s.state(), "go"));
  CHECK(s.current == "detail");
  sim_step(s, touch(s.state(), "back"));
  CHECK(s.current == "home");
  CHECK(s.steps == 3);
  sim_step(s, touch(s.state(), "go"));
  sim_reset(s);
  CHECK(s.current == "home");

  SUBCASE("non-enumerable actions are rejected") {
    Action bogus;
    bogus.kind = ActionType::SwipeUp;
    bogus.target_element = "go";
    CHECK_THROWS_AS(sim_step(s, bogus), DataError);
  }
}

TEST_CASE("spec validation rejects dangling wiring") {
  SimAppSpec spec = two_screen_app();
  SUBCASE("unknown destination state") {
    spec.transitions[{"home", "go", ActionType::Touch}] = "nowhere";
    CHECK_THROWS_AS(spec.validate(), DataError);
  }
  SUBCASE("transition on a non-enumerable action") {
    spec.transitions[{"home", "go", ActionType::SwipeUp}] = "detail";
    CHECK_THROWS_AS(spec.validate(), DataError);
  }
  SUBCASE("preference on a non-enumerable action") {
    spec.user_prefs[{"home", "missing", ActionType::Touch}] = 5.0;
    CHECK_THROWS_AS(spec.validate(), DataError);
  }
}

TEST_CASE("spec JSON round trips") {
  SimAppSpec spec = two_screen_app();
  spec.user_prefs[{"home", "go", ActionType::Touch}] = 3.5;
  spec.targets.insert("detail");
  SimAppSpec back = sim_spec_from_json(sim_spec_to_json(spec));
  CHECK(back.app_id == spec.app_id);
  CHECK(back.initial == spec.initial);
  CHECK(back.transitions == spec.transitions);
  CHECK(back.user_prefs == spec.user_prefs);
  CHECK(back.targets == spec.targets);
  CHECK(back.states.at("home") == spec.states.at("home"));
}

TEST_CASE("scripted user matches a 9:1 binomial over 1000 draws") {
  SimAppSpec spec = two_screen_app();
  spec.user_prefs[{"home", "go", ActionType::Touch}] = 9.0;
  spec.validate();
  SimSession s(spec, 12345);
  int go_count = 0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    if (scripted_user_step(s).target_element == "go") ++go_count;
  }
  // p = 0.9; 99% CI half-width 2.576 * sqrt(p(1-p)/n) = 0.0244
  const double frac = double(go_count) / n;
  CHECK(frac > 0.9 - 0.0244);
  CHECK(frac < 0.9 + 0.0244);
}

TEST_CASE("scripted user is uniform without preferences (chi-square)") {
  // home+detail merged would change counts; use a 4-action single screen
  SimAppSpec spec;
  spec.app_id = "four";
  spec.initial = "only";
  UiElement root = elem("root", {0, 0, 450, 800});
  for (int i = 0; i < 4; ++i)
    root.children.push_back(
        button("b" + std::to_string(i), {50, 100 + 120 * i, 400, 180 + 120 * i}));
  spec.states.emplace("only", make_state(std::move(root), 450, 800));
  spec.validate();
  SimSession s(spec, 999);
  std::array<int, 4> counts{};
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const Action a = scripted_user_step(s);
    counts[size_t(a.target_element[1] - '0')]++;
  }
  double chi2 = 0;
  for (int c : counts) {
    const double e = n / 4.0;
    chi2 += (c - e) * (c - e) / e;
  }
  CHECK(chi2 < 11.345);  // df=3 critical value at the 1% level
}

TEST_CASE("generate_traces: shape, determinism, raw round trip") {
  SimAppSpec spec = two_screen_app();
  Corpus c1 = generate_traces(spec, 3, 10, 77, true);
  REQUIRE(c1.flows.size() == 3);
  REQUIRE(c1.raw.size() == 3);
  for (const auto& f : c1.flows) {
    CHECK(f.states.size() == 10);
    CHECK(f.actions.size() == 10);
    validate_flow(f);
  }

  SUBCASE("same seed, byte-identical flows") {
    Corpus c2 = generate_traces(spec, 3, 10, 77, true);
    for (size_t i = 0; i < 3; ++i) {
      CHECK(flow_to_json(c1.flows[i]).dump() ==
            flow_to_json(c2.flows[i]).dump());
      REQUIRE(c1.raw[i].events.size() == c2.raw[i].events.size());
      for (size_t j = 0; j < c1.raw[i].events.size(); ++j)
        CHECK(motion_event_to_jsonl(c1.raw[i].events[j]) ==
              motion_event_to_jsonl(c2.raw[i].events[j]));
    }
  }
  SUBCASE("different seeds diverge") {
    Corpus c2 = generate_traces(spec, 3, 10, 78, false);
    bool any_diff = false;
    for (size_t i = 0; i < 3; ++i)
      any_diff = any_diff || !(c1.flows[i] == c2.flows[i]);
    CHECK(any_diff);
  }
  SUBCASE("raw events reproduce the flow through trace prep") {
    for (size_t i = 0; i < 3; ++i) {
      PrepResult r = prep_trace(c1.raw[i].events, c1.states, spec.app_id);
      CHECK(r.diagnostics.empty());
      REQUIRE(r.flow.actions.size() == c1.flows[i].actions.size());
      for (size_t j = 0; j < r.flow.actions.size(); ++j) {
        CHECK(r.flow.actions[j] == c1.flows[i].actions[j]);
        CHECK(r.flow.states[j].fingerprint == c1.flows[i].states[j].fingerprint);
      }
    }
  }
}

TEST_CASE("gated suite: topology, preferences, and exact path probability") {
  auto suite = make_benchmark_suite(SuiteKind::Gated, 5, 42);
  REQUIRE(suite.size() == 5);
  for (const SimAppSpec& spec : suite) {
    CHECK(spec.targets.size() == 1);
    CHECK(spec.initial == "gate0");
    // advancing three times from gate0 reaches the target
    SimSession s(spec, 0);
    for (int k = 0; k < 3; ++k) sim_step(s, touch(s.state(), "adv"));
    CHECK(spec.targets.count(s.current) == 1);
    // the adv bar is preferred everywhere
    for (const auto& [state, st] : spec.states) {
      auto it = spec.user_prefs.find({state, "adv", ActionType::Touch});
      REQUIRE(it != spec.user_prefs.end());
      CHECK(it->second == 15.0);
    }
    // exact 3-step probability: (1/k)^3 with k actions per gate screen,
    // since the only length-3 route is adv,adv,adv
    const size_t k = enumerate_actions(spec.states.at("gate0")).size();
    CHECK(random_path_probability(spec, 3) ==
          doctest::Approx(1.0 / std::pow(double(k), 3)).epsilon(1e-12));
    CHECK(random_path_probability(spec, 2) == 0.0);
    CHECK(random_path_probability(spec, 0) == 0.0);
  }
}

TEST_CASE("uniform suite shares the topology but has no preferences") {
  auto gated = make_benchmark_suite(SuiteKind::Gated, 3, 42);
  auto uniform = make_benchmark_suite(SuiteKind::Uniform, 3, 42);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(uniform[i].user_prefs.empty());
    CHECK(uniform[i].transitions.size() == gated[i].transitions.size());
    CHECK(uniform[i].states.size() == gated[i].states.size());
  }
}

TEST_CASE("wide suite averages at least 50 actions per state") {
  auto suite = make_benchmark_suite(SuiteKind::Wide, 3, 42);
  for (const SimAppSpec& spec : suite) {
    const double mean =
        double(spec.total_actions()) / double(spec.states.size());
    CHECK(mean >= 50.0);
    CHECK(spec.states.size() >= 2);
  }
}

TEST_CASE("random_path_probability on a hand-solvable chain") {
  // home -> detail(target): from home, 2 actions, one reaches the target.
  SimAppSpec spec = two_screen_app();
  spec.targets.insert("detail");
  // depth 1: P = 1/2. depth 2: 1/2 + 1/2 * 1/2 = 3/4.
  CHECK(random_path_probability(spec, 1) == doctest::Approx(0.5));
  CHECK(random_path_probability(spec, 2) == doctest::Approx(0.75));
}
