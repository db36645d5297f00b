#pragma once

#include <map>
#include <string>

#include <json.hpp>

#include "humanoid/ui.hpp"

namespace humanoid {

using json = nlohmann::json;

json element_to_json(const UiElement& e);
UiElement element_from_json(const json& j);

// `{"screen":{"w":..,"h":..},"root":{...}}`
json state_to_json(const UiState& s);
UiState state_from_json(const json& j);

json action_to_json(const Action& a);
Action action_from_json(const json& j);

// States referenced by fingerprint hex string.
struct StateStore {
  std::map<std::string, UiState> by_ref;

  std::string put(const UiState& s) {
    std::string ref = hex64(s.fingerprint);
    by_ref.emplace(ref, s);
    return ref;
  }
  const UiState* find(const std::string& ref) const {
    auto it = by_ref.find(ref);
    return it == by_ref.end() ? nullptr : &it->second;
  }

  void save_dir(const std::string& dir) const;
  void load_dir(const std::string& dir);
};

// Flow JSON: parallel `states` (fingerprint refs) and `actions` arrays.
json flow_to_json(const InteractionFlow& f);
InteractionFlow flow_from_json(const json& j, const StateStore& store);

void write_json_file(const std::string& path, const json& j);
json read_json_file(const std::string& path);

}  // namespace humanoid
