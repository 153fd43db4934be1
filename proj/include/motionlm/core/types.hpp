#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace motionlm {

struct Waypoint {
  double x = 0.0;  // meters
  double y = 0.0;

  friend bool operator==(const Waypoint&, const Waypoint&) = default;
};

enum class AgentType { vehicle, pedestrian, cyclist };
enum class RoadType { lane, edge };

const char* to_string(AgentType type);
const char* to_string(RoadType type);
AgentType agent_type_from_string(const std::string& name);
RoadType road_type_from_string(const std::string& name);

struct AgentState {
  Waypoint position;
  double heading = 0.0;  // radians in (-pi, pi]
  double vx = 0.0;       // m/s
  double vy = 0.0;
  double length = 4.5;  // m
  double width = 2.0;
  bool valid = true;

  friend bool operator==(const AgentState&, const AgentState&) = default;
};

struct Polyline {
  RoadType type = RoadType::lane;
  std::vector<Waypoint> points;

  friend bool operator==(const Polyline&, const Polyline&) = default;
};

// One scene: every agent's observed history up to t=0 (last entry), the road
// layout, the jointly modeled agents and, when known, their T future waypoints
// in world coordinates.
struct Scenario {
  std::string id;
  double history_dt = 0.5;  // seconds between history entries
  int horizon = 16;         // T
  std::vector<AgentType> agent_types;
  std::vector<std::vector<AgentState>> history;  // [agent][step]
  std::vector<Polyline> roadgraph;
  std::vector<int> modeled_agents;
  std::vector<std::vector<Waypoint>> future;  // [modeled index][T]; empty at inference
  // Generator provenance; empty for external data.
  std::string family;
  std::string latent_mode;

  bool has_future() const { return !future.empty(); }
  std::size_t num_modeled() const { return modeled_agents.size(); }
  const AgentState& current_state(std::size_t modeled_index) const {
    return history.at(modeled_agents.at(modeled_index)).back();
  }
  AgentType modeled_type(std::size_t modeled_index) const {
    return agent_types.at(modeled_agents.at(modeled_index));
  }

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

using ScenarioSet = std::vector<Scenario>;

// A scenario violates its structural invariants.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An expected input file is absent.
class MissingFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A record cannot be parsed; carries the 1-based line and offending field.
class FormatError : public std::runtime_error {
 public:
  FormatError(std::size_t line, std::string field, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ", field '" + field + "': " + message),
        line_(line),
        field_(std::move(field)) {}
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

// Throws SchemaError when the scenario breaks an invariant.
void validate(const Scenario& scenario);

}  // namespace motionlm
