#pragma once

#include <string>

#include "motionlm/core/types.hpp"
#include "motionlm/model/config.hpp"

namespace fixtures {

// Two vehicles driving along +x at `speed`, 10 m apart laterally, with three
// past states and a constant-velocity future of `horizon` steps.
inline motionlm::Scenario straight_scene(const std::string& id = "scene", double speed = 5.0,
                                         int horizon = 16) {
  using namespace motionlm;
  Scenario s;
  s.id = id;
  s.horizon = horizon;
  s.agent_types = {AgentType::vehicle, AgentType::vehicle};
  const double ys[2] = {0.0, 10.0};
  for (int a = 0; a < 2; ++a) {
    std::vector<AgentState> track;
    for (int h = -3; h <= 0; ++h) {
      AgentState st;
      st.position = {speed * 0.5 * h, ys[a]};
      st.vx = speed;
      track.push_back(st);
    }
    s.history.push_back(track);
    std::vector<Waypoint> fut;
    for (int t = 1; t <= horizon; ++t) fut.push_back({speed * 0.5 * t, ys[a]});
    s.future.push_back(fut);
  }
  s.roadgraph = {{RoadType::lane, {{-20, 0}, {0, 0}, {20, 0}}},
                 {RoadType::edge, {{-20, 5}, {20, 5}}}};
  s.modeled_agents = {0, 1};
  return s;
}

inline motionlm::ModelConfig tiny_model(int hidden = 16, int layers = 2) {
  motionlm::ModelConfig c;
  c.encoder.hidden = hidden;
  c.encoder.ffn = 2 * hidden;
  c.encoder.layers = layers;
  c.encoder.latent_queries = 4;
  c.decoder.hidden = hidden;
  c.decoder.ffn = 2 * hidden;
  c.decoder.layers = layers;
  return c;
}

}  // namespace fixtures
