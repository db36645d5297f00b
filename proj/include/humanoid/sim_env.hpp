#pragma once

#include "humanoid/explorer.hpp"
#include "humanoid/sim.hpp"

namespace humanoid {

// Exploration environment backed by a synthetic app.
class SimEnv : public Env {
 public:
  explicit SimEnv(const SimAppSpec& spec) : session_(spec, 0) {
    for (const std::string& t : spec.targets)
      target_fps_.insert(spec.states.at(t).fingerprint);
  }

  UiState reset() override { return sim_reset(session_); }
  UiState perform(const Action& a) override { return sim_step(session_, a); }
  std::string app_id() const override { return session_.spec->app_id; }
  bool is_target(const UiState& s) const override {
    return target_fps_.count(s.fingerprint) > 0;
  }
  uint64_t steps() const { return session_.steps; }

 private:
  SimSession session_;
  std::set<uint64_t> target_fps_;
};

}  // namespace humanoid
