#pragma once

#include <string>
#include <vector>

#include "splatfuse/geometry/pose.hpp"

namespace splatfuse {

struct TimedPose {
  double timestamp = 0.0;
  Pose pose;
};

// Text trajectory: one `timestamp tx ty tz qx qy qz qw` line per pose,
// '#' starts a comment. Malformed lines raise DomainError.
std::vector<TimedPose> read_trajectory(const std::string& path);
void write_trajectory(const std::string& path,
                      const std::vector<TimedPose>& trajectory);

}  // namespace splatfuse
