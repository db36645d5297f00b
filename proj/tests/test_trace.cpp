#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "humanoid/trace.hpp"

using namespace humanoid;

namespace {

MotionEvent ev(int64_t t, MotionEvent::Phase ph, int x, int y,
               const std::string& state = "s0", bool kbd = false,
               std::optional<std::string> edit = std::nullopt) {
  MotionEvent e;
  e.t = t;
  e.phase = ph;
  e.x = x;
  e.y = y;
  e.keyboard_shown = kbd;
  e.focused_editable = std::move(edit);
  e.state_ref = state;
  return e;
}

constexpr auto kEnter = MotionEvent::Phase::Enter;
constexpr auto kMove = MotionEvent::Phase::Move;
constexpr auto kLeave = MotionEvent::Phase::Leave;

InteractionSession session(int64_t t0, int64_t t1, int x0, int y0, int x1,
                           int y1) {
  InteractionSession s;
  s.time_start = t0;
  s.time_end = t1;
  s.start_x = x0;
  s.start_y = y0;
  s.end_x = x1;
  s.end_y = y1;
  s.state_ref = "s0";
  return s;
}

UiElement elem(const std::string& id, Rect r) {
  UiElement e;
  e.id = id;
  e.bounds = r;
  return e;
}

// Screen with a button, a scrollable list, and an editable field.
UiState demo_state() {
  UiElement root = elem("root", {0, 0, 450, 800});
  UiElement btn = elem("btn", {50, 50, 250, 150});
  btn.clickable = true;
  btn.long_clickable = true;
  UiElement list = elem("list", {0, 200, 450, 600});
  list.scrollable = true;
  UiElement field = elem("field", {50, 650, 400, 750});
  field.editable = true;
  root.children = {btn, list, field};
  return make_state(std::move(root), 450, 800);
}

}  // namespace

TEST_CASE("sessionize: 40-event stream with an independently counted oracle") {
  // 7 complete spans with interleaved moves, plus a stray leave and a
  // dangling enter; oracle counts derived by hand while writing the stream.
  std::vector<MotionEvent> events;
  events.push_back(ev(5, kLeave, 0, 0));  // stray leave -> warning
  int64_t t = 10;
  for (int span = 0; span < 7; ++span) {
    events.push_back(ev(t, kEnter, 100 + span, 200));
    for (int m = 0; m < 3; ++m)
      events.push_back(ev(t + 10 + m, kMove, 100 + span + m, 200 + m));
    events.push_back(ev(t + 50, kLeave, 100 + span + 3, 203));
    t += 100;
  }
  events.push_back(ev(t, kEnter, 1, 1));  // dangling -> warning
  events.push_back(ev(t + 1, kMove, 2, 2));
  events.push_back(ev(t + 2, kMove, 3, 3));
  events.push_back(ev(t + 3, kMove, 4, 4));
  REQUIRE(events.size() == 40);

  SessionizeResult r = sessionize(events);
  CHECK(r.sessions.size() == 7);
  CHECK(r.warnings.size() == 2);
  for (int span = 0; span < 7; ++span) {
    const auto& s = r.sessions[size_t(span)];
    CHECK(s.time_start == 10 + 100 * span);
    CHECK(s.time_end == 60 + 100 * span);
    CHECK(s.start_x == 100 + span);
    CHECK(s.end_x == 103 + span);
    CHECK(s.end_y == 203);
  }
}

TEST_CASE("sessionize: hard error on decreasing timestamps") {
  std::vector<MotionEvent> events{ev(100, kEnter, 0, 0), ev(90, kLeave, 0, 0)};
  CHECK_THROWS_AS(sessionize(events), DataError);
}

TEST_CASE("sessionize: re-enter drops the open span with a warning") {
  std::vector<MotionEvent> events{ev(10, kEnter, 5, 5), ev(20, kEnter, 6, 6),
                                  ev(30, kLeave, 7, 7)};
  SessionizeResult r = sessionize(events);
  REQUIRE(r.sessions.size() == 1);
  CHECK(r.sessions[0].start_x == 6);
  CHECK(r.warnings.size() == 1);
}

TEST_CASE("classify_session covers the rule-table boundaries") {
  // distance boundary: displacement (d,0); time boundary at 500 ms
  CHECK(classify_session(session(0, 499, 100, 100, 149, 100)).kind ==
        ActionType::Touch);  // d=49, dt=499
  CHECK(classify_session(session(0, 500, 100, 100, 149, 100)).kind ==
        ActionType::LongTouch);  // d=49, dt=500
  CHECK(classify_session(session(0, 499, 100, 100, 150, 100)).kind ==
        ActionType::SwipeRight);  // d=50 exactly -> swipe
  CHECK(classify_session(session(0, 900, 100, 100, 151, 100)).kind ==
        ActionType::SwipeRight);  // d=51, long dt still a swipe
  CHECK(classify_session(session(0, 100, 100, 100, 40, 100)).kind ==
        ActionType::SwipeLeft);
  CHECK(classify_session(session(0, 100, 100, 100, 100, 170)).kind ==
        ActionType::SwipeDown);
  CHECK(classify_session(session(0, 100, 100, 400, 100, 330)).kind ==
        ActionType::SwipeUp);
  // |dx| == |dy| resolves to the horizontal axis
  CHECK(classify_session(session(0, 100, 100, 100, 160, 160)).kind ==
        ActionType::SwipeRight);
  CHECK(classify_session(session(0, 100, 200, 200, 140, 260)).kind ==
        ActionType::SwipeLeft);

  SUBCASE("location is always the session start") {
    ClassifiedAction c = classify_session(session(0, 100, 123, 456, 300, 456));
    CHECK(c.x == 123);
    CHECK(c.y == 456);
  }
}

TEST_CASE("merge_text_sessions collapses keyboard runs per field and state") {
  UiState st = demo_state();
  StateStore store;
  const std::string ref = store.put(st);

  auto text_session = [&](int64_t t0, const std::string& field,
                          const std::string& state_ref) {
    InteractionSession s = session(t0, t0 + 50, 100, 700, 105, 700);
    s.keyboard_shown = true;
    s.focused_editable = field;
    s.state_ref = state_ref;
    return s;
  };

  // 12 sessions: tap, 3-key run on "field", tap, 2-key run, run split by a
  // state change, then a keyboard session without focus.
  std::vector<InteractionSession> sessions;
  sessions.push_back(session(0, 100, 100, 100, 102, 100));        // touch
  sessions.push_back(text_session(200, "field", ref));            // run 1
  sessions.push_back(text_session(300, "field", ref));
  sessions.push_back(text_session(400, "field", ref));
  sessions.push_back(session(600, 700, 100, 100, 100, 102));      // touch
  sessions.push_back(text_session(800, "field", ref));            // run 2
  sessions.push_back(text_session(900, "field", ref));
  sessions.push_back(text_session(1000, "field", ref));           // run 3a
  sessions.push_back(text_session(1100, "field", "other_state")); // run 3b
  sessions.push_back(text_session(1200, "field", "other_state"));
  InteractionSession nofocus = session(1300, 1350, 10, 10, 12, 10);
  nofocus.keyboard_shown = true;
  sessions.push_back(nofocus);                                     // warning
  sessions.push_back(session(1400, 1500, 300, 300, 302, 300));    // touch
  REQUIRE(sessions.size() == 12);

  MergeResult r = merge_text_sessions(sessions, store);
  // oracle: two-pointer scan over the same list
  // touch, input_text(run 1), touch, input_text(sessions at 800/900/1000
  // form one maximal run), run in the unknown state -> 2 individual
  // classifications, classified nofocus, final touch
  REQUIRE(r.actions.size() == 8);
  CHECK(r.actions[0].kind == ActionType::Touch);
  CHECK(r.actions[1].kind == ActionType::InputText);
  CHECK(r.actions[1].element == std::string("field"));
  CHECK(r.actions[1].x == 225);  // center of field
  CHECK(r.actions[1].y == 700);
  CHECK(r.actions[1].t == 250);  // first session's end time
  CHECK(r.actions[2].kind == ActionType::Touch);
  CHECK(r.actions[3].kind == ActionType::InputText);
  CHECK(r.actions[3].t == 850);
  // run in "other_state" cannot resolve the element
  CHECK(r.actions[4].kind == ActionType::Touch);
  CHECK(r.actions[5].kind == ActionType::Touch);
  CHECK(r.actions[6].kind == ActionType::Touch);  // nofocus fallback
  CHECK(r.actions[7].kind == ActionType::Touch);
  CHECK(r.warnings.size() == 2);

  SUBCASE("every input session is accounted for exactly once") {
    // partition property: merged input_text actions plus individually
    // classified sessions must cover all 12 sessions
    size_t covered = 0;
    covered += 1;      // action 0
    covered += 3;      // run 1
    covered += 1;      // action 2
    covered += 3;      // maximal run at 800/900/1000
    covered += 2;      // unknown-state run fallback
    covered += 1;      // nofocus
    covered += 1;      // final touch
    CHECK(covered == sessions.size());
  }
}

TEST_CASE("align_flow pairs actions with the latest earlier state and snaps") {
  UiState st = demo_state();
  std::vector<TimedState> stream{{1000, st}};

  std::vector<ExtractedAction> actions;
  ExtractedAction a;
  a.kind = ActionType::Touch;
  a.x = 60;  // inside btn
  a.y = 60;
  a.t = 1500;
  actions.push_back(a);
  ExtractedAction b;
  b.kind = ActionType::SwipeUp;
  b.x = 200;
  b.y = 400;  // inside list
  b.t = 2000;
  actions.push_back(b);
  ExtractedAction c;  // precedes all states -> dropped
  c.kind = ActionType::Touch;
  c.x = 60;
  c.y = 60;
  c.t = 500;
  actions.push_back(c);
  ExtractedAction d;  // no interactive element there -> dropped
  d.kind = ActionType::Touch;
  d.x = 10;
  d.y = 790;
  d.t = 2500;
  actions.push_back(d);

  AlignResult r = align_flow(actions, stream, "app");
  REQUIRE(r.flow.states.size() == 2);
  CHECK(r.flow.actions[0].target_element == "btn");
  CHECK(r.flow.actions[0].x == 150);  // snapped to element center
  CHECK(r.flow.actions[0].y == 100);
  CHECK(r.flow.actions[1].target_element == "list");
  CHECK(r.diagnostics.size() == 2);
  validate_flow(r.flow);

  SUBCASE("state at exactly t(action) is not eligible") {
    std::vector<TimedState> tie_stream{{1500, st}};
    ExtractedAction e = a;  // t = 1500
    AlignResult rr = align_flow({e}, tie_stream, "app");
    CHECK(rr.flow.states.empty());
    CHECK(rr.diagnostics.size() == 1);
  }
}

TEST_CASE("motion event JSONL round trips") {
  MotionEvent e = ev(12345, kMove, 17, 42, "deadbeef00112233", true, "field");
  MotionEvent back = motion_event_from_jsonl(motion_event_to_jsonl(e));
  CHECK(back.t == e.t);
  CHECK(back.phase == e.phase);
  CHECK(back.x == e.x);
  CHECK(back.y == e.y);
  CHECK(back.keyboard_shown == e.keyboard_shown);
  CHECK(back.focused_editable == e.focused_editable);
  CHECK(back.state_ref == e.state_ref);

  CHECK_THROWS_AS(motion_event_from_jsonl("{\"t\":1}"), DataError);
  CHECK_THROWS_AS(motion_event_from_jsonl("not json"), DataError);
}

TEST_CASE("prep_trace end to end: touch, swipe, and text entry") {
  UiState st = demo_state();
  StateStore store;
  const std::string ref = store.put(st);

  std::vector<MotionEvent> events;
  // touch on btn
  events.push_back(ev(1000, kEnter, 100, 100, ref));
  events.push_back(ev(1100, kLeave, 103, 101, ref));
  // swipe up in list
  events.push_back(ev(2000, kEnter, 200, 500, ref));
  events.push_back(ev(2100, kMove, 200, 450, ref));
  events.push_back(ev(2250, kLeave, 200, 380, ref));
  // two keyboard sessions on the field -> one input_text
  events.push_back(ev(3000, kEnter, 100, 700, ref, true, "field"));
  events.push_back(ev(3050, kLeave, 102, 700, ref, true, "field"));
  events.push_back(ev(3200, kEnter, 120, 700, ref, true, "field"));
  events.push_back(ev(3250, kLeave, 121, 700, ref, true, "field"));

  PrepResult r = prep_trace(events, store, "demo_app");
  REQUIRE(r.flow.actions.size() == 3);
  CHECK(r.flow.app_id == "demo_app");
  CHECK(r.flow.actions[0].kind == ActionType::Touch);
  CHECK(r.flow.actions[0].target_element == "btn");
  CHECK(r.flow.actions[1].kind == ActionType::SwipeUp);
  CHECK(r.flow.actions[1].target_element == "list");
  CHECK(r.flow.actions[2].kind == ActionType::InputText);
  CHECK(r.flow.actions[2].target_element == "field");
  CHECK(r.flow.actions[2].text_payload == std::string("text"));
  validate_flow(r.flow);
}
