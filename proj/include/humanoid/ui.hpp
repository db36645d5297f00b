#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "humanoid/common.hpp"

namespace humanoid {

struct Rect {
  int left = 0, top = 0, right = 0, bottom = 0;
  int width() const { return right - left; }
  int height() const { return bottom - top; }
  long long area() const { return 1LL * width() * height(); }
  bool contains(int x, int y) const {
    return x >= left && x < right && y >= top && y < bottom;
  }
  bool contains(const Rect& r) const {
    return r.left >= left && r.top >= top && r.right <= right &&
           r.bottom <= bottom;
  }
  int center_x() const { return (left + right) / 2; }
  int center_y() const { return (top + bottom) / 2; }
  bool operator==(const Rect&) const = default;
};

enum class ActionType {
  Touch = 0,
  LongTouch,
  SwipeUp,
  SwipeDown,
  SwipeLeft,
  SwipeRight,
  InputText,
};
inline constexpr int kActionTypeCount = 7;

const char* to_string(ActionType t);
std::optional<ActionType> action_type_from_string(std::string_view s);

// Placeholder payload attached to input_text actions; the model does not
// predict text content.
inline constexpr const char* kTextPlaceholder = "text";

struct UiElement {
  std::string id;
  Rect bounds;
  bool is_text = false;
  std::optional<std::string> text;
  bool clickable = false;
  bool long_clickable = false;
  bool scrollable = false;
  bool editable = false;
  std::vector<UiElement> children;

  bool interactive() const {
    return clickable || long_clickable || scrollable || editable;
  }
  bool operator==(const UiElement&) const = default;
};

struct UiState {
  UiElement root;
  int screen_w = 0;
  int screen_h = 0;
  uint64_t fingerprint = 0;  // computed at construction

  bool operator==(const UiState& o) const {
    return screen_w == o.screen_w && screen_h == o.screen_h && root == o.root;
  }
};

// Validates invariants (bounds in screen, left<right, children contained,
// unique ids) and caches the fingerprint. Throws DataError on violation.
UiState make_state(UiElement root, int screen_w, int screen_h);

// Structural hash: pre-order over (role, capability flags, bounds quantized
// to a 10 px grid, text content), plus screen dims.
uint64_t fingerprint_state(const UiElement& root, int screen_w, int screen_h);

struct Action {
  ActionType kind = ActionType::Touch;
  std::string target_element;
  int x = 0, y = 0;
  std::optional<std::string> text_payload;  // present iff kind == InputText

  bool operator==(const Action&) const = default;
};

// All actions afforded by a state, in pre-order element order with a fixed
// per-element kind order. Locations are element centers.
std::vector<Action> enumerate_actions(const UiState& state);

// Smallest interactive element containing (x, y) that affords `kind`,
// or nullptr. Ties on area go to the later (deeper) element in pre-order.
const UiElement* find_target_element(const UiState& state, int x, int y,
                                     ActionType kind);

const UiElement* find_element_by_id(const UiState& state,
                                    const std::string& id);

struct InteractionFlow {
  std::string app_id;
  std::vector<UiState> states;
  std::vector<Action> actions;

  bool operator==(const InteractionFlow&) const = default;
};

// Checks lengths match and each a_i is a member of enumerate_actions(s_i).
void validate_flow(const InteractionFlow& flow);

}  // namespace humanoid
