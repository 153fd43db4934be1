#pragma once

#include <array>

#include "motionlm/core/types.hpp"

namespace motionlm {

struct OrientedBox {
  Waypoint center;
  double heading = 0.0;
  double length = 4.5;
  double width = 2.0;

  std::array<Waypoint, 4> corners() const;
};

// Separating-axis test on the four edge normals; touching boxes overlap.
bool boxes_overlap(const OrientedBox& a, const OrientedBox& b);

}  // namespace motionlm
