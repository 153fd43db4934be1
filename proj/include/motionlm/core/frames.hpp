#pragma once

#include <span>
#include <vector>

#include "motionlm/core/types.hpp"

namespace motionlm {

// Agent-centric frame: origin at the agent's t=0 position, x axis along its
// t=0 heading.
struct AgentFrame {
  Waypoint origin;
  double rotation = 0.0;

  static AgentFrame of(const AgentState& state) { return {state.position, state.heading}; }
};

// Wraps an angle into (-pi, pi].
double wrap_angle(double radians);

// R(-rotation) * (p - origin)
Waypoint to_agent_frame(const Waypoint& point, const AgentFrame& frame);
Waypoint from_agent_frame(const Waypoint& point, const AgentFrame& frame);
std::vector<Waypoint> to_agent_frame(std::span<const Waypoint> points, const AgentFrame& frame);
std::vector<Waypoint> from_agent_frame(std::span<const Waypoint> points, const AgentFrame& frame);

// Rotates a vector (no translation) into the frame.
Waypoint rotate_into(const Waypoint& v, const AgentFrame& frame);

// Segment headings along a trajectory; heading[0] = initial_heading and short
// segments (< kHeadingMinSegment) carry the previous heading forward.
inline constexpr double kHeadingMinSegment = 0.05;
std::vector<double> infer_headings(std::span<const Waypoint> trajectory, double initial_heading);

}  // namespace motionlm
