#include "humanoid/serialize.hpp"

#include <filesystem>
#include <fstream>

namespace humanoid {

namespace fs = std::filesystem;

json element_to_json(const UiElement& e) {
  json j;
  j["id"] = e.id;
  j["bounds"] = {e.bounds.left, e.bounds.top, e.bounds.right, e.bounds.bottom};
  j["is_text"] = e.is_text;
  j["text"] = e.text ? json(*e.text) : json(nullptr);
  j["clickable"] = e.clickable;
  j["long_clickable"] = e.long_clickable;
  j["scrollable"] = e.scrollable;
  j["editable"] = e.editable;
  json kids = json::array();
  for (const auto& c : e.children) kids.push_back(element_to_json(c));
  j["children"] = std::move(kids);
  return j;
}

UiElement element_from_json(const json& j) {
  UiElement e;
  try {
    e.id = j.at("id").get<std::string>();
    const auto& b = j.at("bounds");
    e.bounds = Rect{b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(),
                    b.at(3).get<int>()};
    e.is_text = j.at("is_text").get<bool>();
    if (!j.at("text").is_null()) e.text = j.at("text").get<std::string>();
    e.clickable = j.at("clickable").get<bool>();
    e.long_clickable = j.at("long_clickable").get<bool>();
    e.scrollable = j.at("scrollable").get<bool>();
    e.editable = j.at("editable").get<bool>();
    for (const auto& c : j.at("children")) e.children.push_back(element_from_json(c));
  } catch (const json::exception& ex) {
    throw DataError(std::string("bad element json: ") + ex.what());
  }
  return e;
}

json state_to_json(const UiState& s) {
  json j;
  j["screen"] = {{"w", s.screen_w}, {"h", s.screen_h}};
  j["root"] = element_to_json(s.root);
  return j;
}

UiState state_from_json(const json& j) {
  try {
    int w = j.at("screen").at("w").get<int>();
    int h = j.at("screen").at("h").get<int>();
    return make_state(element_from_json(j.at("root")), w, h);
  } catch (const json::exception& ex) {
    throw DataError(std::string("bad state json: ") + ex.what());
  }
}

json action_to_json(const Action& a) {
  json j;
  j["kind"] = to_string(a.kind);
  j["element"] = a.target_element;
  j["x"] = a.x;
  j["y"] = a.y;
  if (a.text_payload) j["text"] = *a.text_payload;
  return j;
}

Action action_from_json(const json& j) {
  Action a;
  try {
    auto k = action_type_from_string(j.at("kind").get<std::string>());
    if (!k) throw DataError("unknown action kind");
    a.kind = *k;
    a.target_element = j.at("element").get<std::string>();
    a.x = j.at("x").get<int>();
    a.y = j.at("y").get<int>();
    if (j.contains("text")) a.text_payload = j.at("text").get<std::string>();
  } catch (const json::exception& ex) {
    throw DataError(std::string("bad action json: ") + ex.what());
  }
  return a;
}

void StateStore::save_dir(const std::string& dir) const {
  fs::create_directories(dir);
  for (const auto& [ref, state] : by_ref)
    write_json_file(dir + "/" + ref + ".json", state_to_json(state));
}

void StateStore::load_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir);
  for (const auto& ent : fs::directory_iterator(dir)) {
    if (ent.path().extension() != ".json") continue;
    by_ref.emplace(ent.path().stem().string(),
                   state_from_json(read_json_file(ent.path().string())));
  }
}

json flow_to_json(const InteractionFlow& f) {
  json j;
  j["app_id"] = f.app_id;
  json states = json::array();
  for (const auto& s : f.states) states.push_back(hex64(s.fingerprint));
  j["states"] = std::move(states);
  json actions = json::array();
  for (const auto& a : f.actions) actions.push_back(action_to_json(a));
  j["actions"] = std::move(actions);
  return j;
}

InteractionFlow flow_from_json(const json& j, const StateStore& store) {
  InteractionFlow f;
  try {
    f.app_id = j.at("app_id").get<std::string>();
    for (const auto& ref : j.at("states")) {
      const UiState* s = store.find(ref.get<std::string>());
      if (!s) throw DataError("unresolved state ref " + ref.get<std::string>());
      f.states.push_back(*s);
    }
    for (const auto& a : j.at("actions")) f.actions.push_back(action_from_json(a));
  } catch (const json::exception& ex) {
    throw DataError(std::string("bad flow json: ") + ex.what());
  }
  return f;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(1) << "\n";
}

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& ex) {
    throw DataError("malformed json in " + path + ": " + ex.what());
  }
}

}  // namespace humanoid
