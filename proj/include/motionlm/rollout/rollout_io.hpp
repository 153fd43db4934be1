#pragma once

// Rollout files: a header line {"schema_version", "kind": "rollouts",
// "config_digest"} followed by one JSON record per sampled joint future.
// Records of one scenario are contiguous and ordered by rollout index.

#include <string>
#include <vector>

#include "json.hpp"
#include "motionlm/rollout/rollout.hpp"

namespace motionlm {

inline constexpr int kRolloutSchemaVersion = 1;

struct RolloutFile {
  std::string config_digest;
  std::vector<RolloutSet> sets;
};

nlohmann::json sample_to_json(const RolloutSet& set, std::size_t index);
void save_rollouts(const RolloutFile& file, const std::string& path);
RolloutFile load_rollouts(const std::string& path);

// Shared helpers for waypoint arrays [[x, y], ...].
nlohmann::json waypoints_to_json(const std::vector<std::vector<Waypoint>>& per_agent);
std::vector<std::vector<Waypoint>> waypoints_from_json(const nlohmann::json& j);

}  // namespace motionlm
