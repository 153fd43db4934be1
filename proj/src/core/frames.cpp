#include "motionlm/core/frames.hpp"

#include <cmath>
#include <numbers>

namespace motionlm {

double wrap_angle(double radians) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double a = std::fmod(radians, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

Waypoint rotate_into(const Waypoint& v, const AgentFrame& frame) {
  const double c = std::cos(frame.rotation), s = std::sin(frame.rotation);
  return {c * v.x + s * v.y, -s * v.x + c * v.y};
}

Waypoint to_agent_frame(const Waypoint& point, const AgentFrame& frame) {
  return rotate_into({point.x - frame.origin.x, point.y - frame.origin.y}, frame);
}

Waypoint from_agent_frame(const Waypoint& point, const AgentFrame& frame) {
  const double c = std::cos(frame.rotation), s = std::sin(frame.rotation);
  return {c * point.x - s * point.y + frame.origin.x, s * point.x + c * point.y + frame.origin.y};
}

std::vector<Waypoint> to_agent_frame(std::span<const Waypoint> points, const AgentFrame& frame) {
  std::vector<Waypoint> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(to_agent_frame(p, frame));
  return out;
}

std::vector<Waypoint> from_agent_frame(std::span<const Waypoint> points, const AgentFrame& frame) {
  std::vector<Waypoint> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(from_agent_frame(p, frame));
  return out;
}

std::vector<double> infer_headings(std::span<const Waypoint> trajectory, double initial_heading) {
  std::vector<double> headings(trajectory.size());
  if (trajectory.empty()) return headings;
  headings[0] = wrap_angle(initial_heading);
  for (std::size_t t = 1; t < trajectory.size(); ++t) {
    const double dx = trajectory[t].x - trajectory[t - 1].x;
    const double dy = trajectory[t].y - trajectory[t - 1].y;
    headings[t] = std::hypot(dx, dy) < kHeadingMinSegment ? headings[t - 1]
                                                          : wrap_angle(std::atan2(dy, dx));
  }
  return headings;
}

}  // namespace motionlm
