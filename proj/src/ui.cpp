#include "humanoid/ui.hpp"

#include <algorithm>
#include <unordered_set>

namespace humanoid {

std::string hex64(uint64_t v) {
  static const char* d = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = d[v & 0xf];
    v >>= 4;
  }
  return s;
}

const char* to_string(ActionType t) {
  switch (t) {
    case ActionType::Touch: return "touch";
    case ActionType::LongTouch: return "long_touch";
    case ActionType::SwipeUp: return "swipe_up";
    case ActionType::SwipeDown: return "swipe_down";
    case ActionType::SwipeLeft: return "swipe_left";
    case ActionType::SwipeRight: return "swipe_right";
    case ActionType::InputText: return "input_text";
  }
  return "?";
}

std::optional<ActionType> action_type_from_string(std::string_view s) {
  for (int i = 0; i < kActionTypeCount; ++i) {
    auto t = static_cast<ActionType>(i);
    if (s == to_string(t)) return t;
  }
  return std::nullopt;
}

namespace {

void validate_element(const UiElement& e, const Rect& screen,
                      std::unordered_set<std::string>& ids) {
  if (e.bounds.left >= e.bounds.right || e.bounds.top >= e.bounds.bottom)
    throw DataError("element '" + e.id + "': degenerate bounds");
  if (!screen.contains(e.bounds))
    throw DataError("element '" + e.id + "': bounds outside screen");
  if (!ids.insert(e.id).second)
    throw DataError("duplicate element id '" + e.id + "'");
  for (const auto& c : e.children) {
    if (!e.bounds.contains(c.bounds))
      throw DataError("element '" + c.id + "': bounds escape parent '" +
                      e.id + "'");
    validate_element(c, screen, ids);
  }
}

void hash_element(const UiElement& e, Fnv1a64& h) {
  h.feed_byte(e.is_text ? 1 : 0);
  uint8_t flags = (e.clickable ? 1 : 0) | (e.long_clickable ? 2 : 0) |
                  (e.scrollable ? 4 : 0) | (e.editable ? 8 : 0);
  h.feed_byte(flags);
  // 10 px grid quantization absorbs rendering jitter.
  h.feed_i32(e.bounds.left / 10);
  h.feed_i32(e.bounds.top / 10);
  h.feed_i32(e.bounds.right / 10);
  h.feed_i32(e.bounds.bottom / 10);
  h.feed_str(e.text ? *e.text : std::string_view{});
  h.feed_u32(static_cast<uint32_t>(e.children.size()));
  for (const auto& c : e.children) hash_element(c, h);
}

}  // namespace

uint64_t fingerprint_state(const UiElement& root, int screen_w,
                           int screen_h) {
  Fnv1a64 h;
  h.feed_i32(screen_w);
  h.feed_i32(screen_h);
  hash_element(root, h);
  return h.value();
}

UiState make_state(UiElement root, int screen_w, int screen_h) {
  if (screen_w <= 0 || screen_h <= 0) throw DataError("non-positive screen");
  Rect screen{0, 0, screen_w, screen_h};
  std::unordered_set<std::string> ids;
  validate_element(root, screen, ids);
  UiState s;
  s.screen_w = screen_w;
  s.screen_h = screen_h;
  s.fingerprint = fingerprint_state(root, screen_w, screen_h);
  s.root = std::move(root);
  return s;
}

namespace {

void enumerate_element(const UiElement& e, std::vector<Action>& out) {
  const int cx = e.bounds.center_x();
  const int cy = e.bounds.center_y();
  auto add = [&](ActionType k) {
    Action a;
    a.kind = k;
    a.target_element = e.id;
    a.x = cx;
    a.y = cy;
    if (k == ActionType::InputText) a.text_payload = kTextPlaceholder;
    out.push_back(std::move(a));
  };
  if (e.clickable) add(ActionType::Touch);
  if (e.long_clickable) add(ActionType::LongTouch);
  if (e.scrollable) {
    add(ActionType::SwipeUp);
    add(ActionType::SwipeDown);
    add(ActionType::SwipeLeft);
    add(ActionType::SwipeRight);
  }
  if (e.editable) add(ActionType::InputText);
  for (const auto& c : e.children) enumerate_element(c, out);
}

bool affords(const UiElement& e, ActionType k) {
  switch (k) {
    case ActionType::Touch: return e.clickable;
    case ActionType::LongTouch: return e.long_clickable;
    case ActionType::SwipeUp:
    case ActionType::SwipeDown:
    case ActionType::SwipeLeft:
    case ActionType::SwipeRight: return e.scrollable;
    case ActionType::InputText: return e.editable;
  }
  return false;
}

void find_target_rec(const UiElement& e, int x, int y, ActionType kind,
                     const UiElement** best) {
  if (!e.bounds.contains(x, y)) return;
  if (affords(e, kind) && (!*best || e.bounds.area() <= (*best)->bounds.area()))
    *best = &e;
  for (const auto& c : e.children) find_target_rec(c, x, y, kind, best);
}

const UiElement* find_by_id_rec(const UiElement& e, const std::string& id) {
  if (e.id == id) return &e;
  for (const auto& c : e.children)
    if (const UiElement* r = find_by_id_rec(c, id)) return r;
  return nullptr;
}

}  // namespace

std::vector<Action> enumerate_actions(const UiState& state) {
  std::vector<Action> out;
  enumerate_element(state.root, out);
  return out;
}

const UiElement* find_target_element(const UiState& state, int x, int y,
                                     ActionType kind) {
  const UiElement* best = nullptr;
  find_target_rec(state.root, x, y, kind, &best);
  return best;
}

const UiElement* find_element_by_id(const UiState& state,
                                    const std::string& id) {
  return find_by_id_rec(state.root, id);
}

void validate_flow(const InteractionFlow& flow) {
  if (flow.states.size() != flow.actions.size())
    throw DataError("flow '" + flow.app_id + "': states/actions length mismatch");
  for (size_t i = 0; i < flow.states.size(); ++i) {
    auto acts = enumerate_actions(flow.states[i]);
    if (std::find(acts.begin(), acts.end(), flow.actions[i]) == acts.end())
      throw DataError("flow '" + flow.app_id + "': action " +
                      std::to_string(i) + " not enumerable in its state");
  }
}

}  // namespace humanoid
