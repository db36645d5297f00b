#include "humanoid/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace humanoid {

SessionizeResult sessionize(const std::vector<MotionEvent>& events) {
  SessionizeResult res;
  bool open = false;
  InteractionSession cur;
  int64_t prev_t = INT64_MIN;
  for (size_t i = 0; i < events.size(); ++i) {
    const MotionEvent& e = events[i];
    if (e.t < prev_t)
      throw DataError("out-of-order timestamp at event index " +
                      std::to_string(i));
    prev_t = e.t;
    switch (e.phase) {
      case MotionEvent::Phase::Enter:
        if (open) {
          res.warnings.push_back("enter at index " + std::to_string(i) +
                                 " while a span is open; open span dropped");
        }
        cur = InteractionSession{};
        cur.time_start = e.t;
        cur.start_x = e.x;
        cur.start_y = e.y;
        cur.keyboard_shown = e.keyboard_shown;
        cur.focused_editable = e.focused_editable;
        cur.state_ref = e.state_ref;
        open = true;
        break;
      case MotionEvent::Phase::Move:
        break;  // intermediate samples do not affect Table 1 inputs
      case MotionEvent::Phase::Leave:
        if (!open) {
          res.warnings.push_back("leave at index " + std::to_string(i) +
                                 " without open span; ignored");
          break;
        }
        cur.time_end = e.t;
        cur.end_x = e.x;
        cur.end_y = e.y;
        res.sessions.push_back(cur);
        open = false;
        break;
    }
  }
  if (open)
    res.warnings.push_back("dangling enter at stream end; span dropped");
  return res;
}

ClassifiedAction classify_session(const InteractionSession& s,
                                  const TraceConfig& cfg) {
  const double dx = s.end_x - s.start_x;
  const double dy = s.end_y - s.start_y;
  const double d = std::hypot(dx, dy);
  const int64_t dt = s.time_end - s.time_start;
  if (d < cfg.dist_threshold_px) {
    return {dt < cfg.time_threshold_ms ? ActionType::Touch
                                       : ActionType::LongTouch,
            s.start_x, s.start_y};
  }
  // Dominant axis; |dx| == |dy| resolves horizontal.
  ActionType kind;
  if (std::abs(dx) >= std::abs(dy))
    kind = dx > 0 ? ActionType::SwipeRight : ActionType::SwipeLeft;
  else
    kind = dy > 0 ? ActionType::SwipeDown : ActionType::SwipeUp;
  return {kind, s.start_x, s.start_y};
}

namespace {

bool is_text_session(const InteractionSession& s) {
  return s.keyboard_shown && s.focused_editable.has_value();
}

ExtractedAction classify_to_extracted(const InteractionSession& s,
                                      const TraceConfig& cfg) {
  ClassifiedAction c = classify_session(s, cfg);
  ExtractedAction a;
  a.kind = c.kind;
  a.x = c.x;
  a.y = c.y;
  a.t = s.time_end;
  a.state_ref = s.state_ref;
  return a;
}

}  // namespace

MergeResult merge_text_sessions(const std::vector<InteractionSession>& sessions,
                                const StateStore& states,
                                const TraceConfig& cfg) {
  MergeResult res;
  size_t i = 0;
  while (i < sessions.size()) {
    const InteractionSession& s = sessions[i];
    if (s.keyboard_shown && !s.focused_editable) {
      res.warnings.push_back("keyboard shown without focused editable at session " +
                             std::to_string(i) + "; classified individually");
      res.actions.push_back(classify_to_extracted(s, cfg));
      ++i;
      continue;
    }
    if (!is_text_session(s)) {
      res.actions.push_back(classify_to_extracted(s, cfg));
      ++i;
      continue;
    }
    // Maximal run on the same field in the same state.
    size_t j = i + 1;
    while (j < sessions.size() && is_text_session(sessions[j]) &&
           sessions[j].focused_editable == s.focused_editable &&
           sessions[j].state_ref == s.state_ref)
      ++j;
    const UiState* st = states.find(s.state_ref);
    const UiElement* el =
        st ? find_element_by_id(*st, *s.focused_editable) : nullptr;
    if (!el) {
      res.warnings.push_back("cannot resolve focused editable '" +
                             *s.focused_editable + "' at session " +
                             std::to_string(i) + "; run classified individually");
      for (size_t k = i; k < j; ++k)
        res.actions.push_back(classify_to_extracted(sessions[k], cfg));
      i = j;
      continue;
    }
    ExtractedAction a;
    a.kind = ActionType::InputText;
    a.element = *s.focused_editable;
    a.x = el->bounds.center_x();
    a.y = el->bounds.center_y();
    a.text_payload = cfg.text_placeholder;
    a.t = s.time_end;
    a.state_ref = s.state_ref;
    res.actions.push_back(std::move(a));
    i = j;
  }
  return res;
}

AlignResult align_flow(const std::vector<ExtractedAction>& actions,
                       const std::vector<TimedState>& state_stream,
                       const std::string& app_id, const TraceConfig& cfg) {
  if (state_stream.empty()) throw DataError("empty state stream");
  AlignResult res;
  res.flow.app_id = app_id;
  for (size_t i = 0; i < actions.size(); ++i) {
    const ExtractedAction& ea = actions[i];
    // Latest state strictly before t(a_i).
    const UiState* st = nullptr;
    for (const auto& ts : state_stream) {
      if (ts.t < ea.t) st = &ts.state;
      else break;
    }
    if (!st) {
      res.diagnostics.push_back("action " + std::to_string(i) +
                                " precedes all states; dropped");
      continue;
    }
    const UiElement* el = nullptr;
    if (ea.element) {
      el = find_element_by_id(*st, *ea.element);
      if (el && !el->editable) el = nullptr;
    } else {
      el = find_target_element(*st, ea.x, ea.y, ea.kind);
    }
    if (!el) {
      res.diagnostics.push_back("action " + std::to_string(i) + " (" +
                                to_string(ea.kind) +
                                ") has no matching interactive element; dropped");
      continue;
    }
    Action a;
    a.kind = ea.kind;
    a.target_element = el->id;
    a.x = el->bounds.center_x();
    a.y = el->bounds.center_y();
    if (a.kind == ActionType::InputText) a.text_payload = cfg.text_placeholder;
    res.flow.states.push_back(*st);
    res.flow.actions.push_back(std::move(a));
  }
  return res;
}

std::string motion_event_to_jsonl(const MotionEvent& e) {
  json j;
  j["t"] = e.t;
  j["phase"] = e.phase == MotionEvent::Phase::Enter   ? "enter"
               : e.phase == MotionEvent::Phase::Move ? "move"
                                                      : "leave";
  j["x"] = e.x;
  j["y"] = e.y;
  j["kbd"] = e.keyboard_shown;
  j["edit"] = e.focused_editable ? json(*e.focused_editable) : json(nullptr);
  j["state"] = e.state_ref;
  return j.dump();
}

MotionEvent motion_event_from_jsonl(const std::string& line) {
  MotionEvent e;
  try {
    json j = json::parse(line);
    e.t = j.at("t").get<int64_t>();
    std::string p = j.at("phase").get<std::string>();
    if (p == "enter") e.phase = MotionEvent::Phase::Enter;
    else if (p == "move") e.phase = MotionEvent::Phase::Move;
    else if (p == "leave") e.phase = MotionEvent::Phase::Leave;
    else throw DataError("unknown phase '" + p + "'");
    e.x = j.at("x").get<int>();
    e.y = j.at("y").get<int>();
    e.keyboard_shown = j.at("kbd").get<bool>();
    if (!j.at("edit").is_null()) e.focused_editable = j.at("edit").get<std::string>();
    e.state_ref = j.at("state").get<std::string>();
  } catch (const json::exception& ex) {
    throw DataError(std::string("bad motion event: ") + ex.what());
  }
  return e;
}

std::vector<MotionEvent> read_trace_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  std::vector<MotionEvent> events;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    events.push_back(motion_event_from_jsonl(line));
  }
  return events;
}

void write_trace_jsonl(const std::string& path,
                       const std::vector<MotionEvent>& events) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  for (const auto& e : events) out << motion_event_to_jsonl(e) << "\n";
}

PrepResult prep_trace(const std::vector<MotionEvent>& events,
                      const StateStore& states, const std::string& app_id,
                      const TraceConfig& cfg) {
  PrepResult res;
  SessionizeResult sr = sessionize(events);
  res.diagnostics = sr.warnings;
  MergeResult mr = merge_text_sessions(sr.sessions, states, cfg);
  for (auto& w : mr.warnings) res.diagnostics.push_back(std::move(w));

  std::vector<TimedState> stream;
  std::string last_ref;
  for (const auto& e : events) {
    if (e.phase != MotionEvent::Phase::Enter) continue;
    if (e.state_ref == last_ref) continue;
    const UiState* st = states.find(e.state_ref);
    if (!st) {
      res.diagnostics.push_back("unresolved state ref '" + e.state_ref + "'");
      continue;
    }
    stream.push_back({e.t, *st});
    last_ref = e.state_ref;
  }
  AlignResult ar = align_flow(mr.actions, stream, app_id, cfg);
  for (auto& d : ar.diagnostics) res.diagnostics.push_back(std::move(d));
  res.flow = std::move(ar.flow);
  return res;
}

}  // namespace humanoid
