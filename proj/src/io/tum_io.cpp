#include "splatfuse/io/tum_io.hpp"

#include <Eigen/Geometry>

#include <fstream>
#include <iomanip>
#include <sstream>

#include "splatfuse/core/error.hpp"

namespace splatfuse {

std::vector<TimedPose> read_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open trajectory: " + path);
  std::vector<TimedPose> trajectory;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string::size_type hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream fields(line);
    double ts, tx, ty, tz, qx, qy, qz, qw;
    if (!(fields >> ts)) continue;  // blank or comment-only line
    if (!(fields >> tx >> ty >> tz >> qx >> qy >> qz >> qw))
      throw DomainError("malformed trajectory line " + std::to_string(line_no) +
                        " in " + path);
    std::string trailing;
    if (fields >> trailing)
      throw DomainError("trailing fields on trajectory line " +
                        std::to_string(line_no) + " in " + path);
    Eigen::Quaterniond q(qw, qx, qy, qz);
    if (q.norm() < 1e-12)
      throw DomainError("zero quaternion on trajectory line " +
                        std::to_string(line_no) + " in " + path);
    q.normalize();
    TimedPose tp;
    tp.timestamp = ts;
    tp.pose.rotation = q.toRotationMatrix();
    tp.pose.translation = Vec3(tx, ty, tz);
    trajectory.push_back(tp);
  }
  return trajectory;
}

void write_trajectory(const std::string& path,
                      const std::vector<TimedPose>& trajectory) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot open trajectory for writing: " + path);
  out << "# timestamp tx ty tz qx qy qz qw\n";
  out << std::setprecision(9) << std::fixed;
  for (const TimedPose& tp : trajectory) {
    Eigen::Quaterniond q(tp.pose.rotation);
    q.normalize();
    if (q.w() < 0.0) q.coeffs() *= -1.0;  // canonical sign for stable diffs
    out << tp.timestamp << ' ' << tp.pose.translation.x() << ' '
        << tp.pose.translation.y() << ' ' << tp.pose.translation.z() << ' '
        << q.x() << ' ' << q.y() << ' ' << q.z() << ' ' << q.w() << '\n';
  }
  if (!out) throw DomainError("trajectory write failed: " + path);
}

}  // namespace splatfuse
