#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "humanoid/serialize.hpp"
#include "humanoid/ui.hpp"

namespace humanoid {

struct MotionEvent {
  enum class Phase { Enter, Move, Leave };
  int64_t t = 0;  // ms
  Phase phase = Phase::Enter;
  int x = 0, y = 0;
  bool keyboard_shown = false;
  std::optional<std::string> focused_editable;
  std::string state_ref;  // UI state captured at this instant
};

struct InteractionSession {
  int64_t time_start = 0, time_end = 0;
  int start_x = 0, start_y = 0;
  int end_x = 0, end_y = 0;
  bool keyboard_shown = false;
  std::optional<std::string> focused_editable;
  std::string state_ref;  // state right before the session
};

// Table 1 thresholds; defaults match the Android-oriented heuristics.
struct TraceConfig {
  double dist_threshold_px = 50.0;
  int64_t time_threshold_ms = 500;
  std::string text_placeholder = kTextPlaceholder;
};

struct SessionizeResult {
  std::vector<InteractionSession> sessions;
  std::vector<std::string> warnings;
};

// One session per enter..leave span. Dangling enter at stream end is
// dropped with a warning; decreasing timestamps are a hard error naming
// the offending event index.
SessionizeResult sessionize(const std::vector<MotionEvent>& events);

// Rule-table classification: d < 50 px and dt < 500 ms -> touch,
// d < 50 px and dt >= 500 ms -> long_touch, d >= 50 px -> swipe toward
// the dominant displacement axis (ties go horizontal). Location is
// always loc_start.
struct ClassifiedAction {
  ActionType kind;
  int x, y;
};
ClassifiedAction classify_session(const InteractionSession& s,
                                  const TraceConfig& cfg = {});

// An action extracted from sessions, timestamped for state alignment.
struct ExtractedAction {
  ActionType kind;
  int x = 0, y = 0;
  std::optional<std::string> element;  // resolved for input_text only
  std::optional<std::string> text_payload;
  int64_t t = 0;          // completion time of the (first) session
  std::string state_ref;  // state of the (first) session
};

struct MergeResult {
  std::vector<ExtractedAction> actions;
  std::vector<std::string> warnings;
};

// Maximal runs of consecutive keyboard sessions on the same focused
// editable (and same state) collapse into one input_text at the center of
// that element; everything else goes through classify_session.
MergeResult merge_text_sessions(const std::vector<InteractionSession>& sessions,
                                const StateStore& states,
                                const TraceConfig& cfg = {});

struct TimedState {
  int64_t t;
  UiState state;
};

struct AlignResult {
  InteractionFlow flow;
  std::vector<std::string> diagnostics;  // dropped actions etc.
};

// Pairs each action with the latest state strictly before its timestamp
// and snaps it to the smallest enclosing interactive element; unmatched
// actions are dropped with a diagnostic.
AlignResult align_flow(const std::vector<ExtractedAction>& actions,
                       const std::vector<TimedState>& state_stream,
                       const std::string& app_id,
                       const TraceConfig& cfg = {});

// Raw trace JSONL, one MotionEvent per line.
std::string motion_event_to_jsonl(const MotionEvent& e);
MotionEvent motion_event_from_jsonl(const std::string& line);
std::vector<MotionEvent> read_trace_jsonl(const std::string& path);
void write_trace_jsonl(const std::string& path,
                       const std::vector<MotionEvent>& events);

// Full pipeline for one raw stream: sessionize, merge, align.
struct PrepResult {
  InteractionFlow flow;
  std::vector<std::string> diagnostics;
};
PrepResult prep_trace(const std::vector<MotionEvent>& events,
                      const StateStore& states, const std::string& app_id,
                      const TraceConfig& cfg = {});

}  // namespace humanoid
