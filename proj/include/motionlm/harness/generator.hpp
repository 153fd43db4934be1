#pragma once

// Synthetic two-agent scenarios with scripted interactions.
//
// In every family modeled agent 0 makes a discrete choice at t=0 (its latent
// mode) and modeled agent 1 reacts to it after a per-scene lag drawn from
// [reaction_lag, reaction_lag_max] seconds. The reacting agent's choice is not
// visible from the history, so predicting it requires seeing agent 0's future.
//
//   lead_follow        0 leads on a lane and brakes ("brake") or cruises;
//                      1 follows and brakes one lag after the lead, or
//                      earlier on its own with `independent_stop_prob`.
//   intersection_cross 0 reaches a crossing first and passes or yields; 1 does
//                      the opposite.
//   lane_change        0 merges into 1's lane ("change") or keeps its lane;
//                      1 slows when 0 merges.
//   pedestrian_cross   pedestrian 0 crosses or waits at the curb; vehicle 1
//                      stops when the pedestrian crosses.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "motionlm/core/types.hpp"

namespace motionlm {

enum class ScenarioFamily { lead_follow, intersection_cross, lane_change, pedestrian_cross };

const char* to_string(ScenarioFamily family);
ScenarioFamily scenario_family_from_string(const std::string& name);
// Label of the two latent modes of agent 0: {first, second}.
std::pair<std::string, std::string> latent_labels(ScenarioFamily family);

struct GeneratorConfig {
  std::vector<ScenarioFamily> families = {ScenarioFamily::lead_follow};  // scene i uses i mod size
  std::size_t count = 1000;
  std::vector<double> mode_weights = {0.5, 0.5};  // agent 0: first vs second latent label
  int history_steps = 3;                           // past states before t=0
  double history_dt = 0.5;
  int horizon = 16;
  double step_dt = 0.5;
  double reaction_lag = 0.25;     // s, per-scene lag ~ U(reaction_lag, reaction_lag_max)
  double reaction_lag_max = 1.25;
  double independent_stop_prob = 0.2;  // lead_follow only
  double lateral_noise = 0.15;         // amplitude (m) of the slow lateral sway
  double speed_noise = 1.0;            // std (m/s) of the initial speed
  bool random_transform = true;
  std::uint64_t seed = 1;

  void validate() const;
};

nlohmann::json to_json(const GeneratorConfig& config);
GeneratorConfig generator_config_from_json(const nlohmann::json& j);

// Script behind one scenario; times in seconds from t=0.
struct ScenarioScript {
  ScenarioFamily family = ScenarioFamily::lead_follow;
  bool first_mode = true;  // agent 0 took latent_labels(family).first
  // Start of the deceleration (or of the manoeuvre) per modeled agent; +inf if none.
  std::vector<double> onset = {std::numeric_limits<double>::infinity(),
                               std::numeric_limits<double>::infinity()};
};

struct GeneratedScenario {
  Scenario scenario;
  ScenarioScript script;
};

std::vector<GeneratedScenario> generate_detailed(const GeneratorConfig& config);
ScenarioSet generate(const GeneratorConfig& config);

}  // namespace motionlm
