#include "splatfuse/geometry/pose.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <vector>

#include "splatfuse/core/error.hpp"

namespace splatfuse {

Mat3 skew(const Vec3& v) {
  Mat3 s;
  // clang-format off
  s <<    0, -v.z(),  v.y(),
       v.z(),     0, -v.x(),
      -v.y(),  v.x(),     0;
  // clang-format on
  return s;
}

namespace {

constexpr double kSmallAngle = 1e-10;

// Left Jacobian of SO(3): translation part of the SE(3) exponential.
Mat3 so3_left_jacobian(const Vec3& omega) {
  const double theta = omega.norm();
  if (theta < kSmallAngle) return Mat3::Identity() + 0.5 * skew(omega);
  const Mat3 hat = skew(omega / theta);
  const double c1 = (1.0 - std::cos(theta)) / theta;
  const double c2 = (theta - std::sin(theta)) / theta;
  return Mat3::Identity() + c1 * hat + c2 * hat * hat;
}

Mat3 so3_left_jacobian_inverse(const Vec3& omega) {
  const double theta = omega.norm();
  if (theta < kSmallAngle) return Mat3::Identity() - 0.5 * skew(omega);
  const Mat3 hat = skew(omega / theta);
  const double half = 0.5 * theta;
  const double c =
      1.0 - half * std::cos(half) / std::sin(half);
  return Mat3::Identity() - half * hat + c * hat * hat;
}

}  // namespace

Mat3 so3_exp(const Vec3& omega) {
  const double theta = omega.norm();
  if (theta < kSmallAngle) {
    const Mat3 hat = skew(omega);
    return Mat3::Identity() + hat + 0.5 * hat * hat;
  }
  return Eigen::AngleAxisd(theta, omega / theta).toRotationMatrix();
}

Vec3 so3_log(const Mat3& rotation) {
  Eigen::AngleAxisd aa(rotation);
  if (aa.angle() < kSmallAngle) return Vec3::Zero();
  return aa.angle() * aa.axis();
}

Pose se3_exp(const Vec6& twist) {
  const Vec3 v = twist.head<3>();
  const Vec3 omega = twist.tail<3>();
  Pose out;
  out.rotation = so3_exp(omega);
  out.translation = so3_left_jacobian(omega) * v;
  return out;
}

Vec6 se3_log(const Pose& pose) {
  Eigen::AngleAxisd aa(pose.rotation);
  if (aa.angle() >= M_PI - 1e-6)
    throw DomainError("se3_log: near-cut-locus rotation (angle >= pi - 1e-6)");
  const Vec3 omega = aa.angle() < kSmallAngle
                         ? Vec3::Zero()
                         : Vec3(aa.angle() * aa.axis());
  Vec6 twist;
  twist.head<3>() = so3_left_jacobian_inverse(omega) * pose.translation;
  twist.tail<3>() = omega;
  return twist;
}

Mat3 orthonormalize(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0) {
    Mat3 flip = Mat3::Identity();
    flip(2, 2) = -1.0;
    r = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return r;
}

Similarity umeyama_align(const std::vector<Vec3>& from,
                         const std::vector<Vec3>& to, bool with_scale) {
  if (from.size() != to.size())
    throw DomainError("umeyama_align: size mismatch");
  const std::size_t n = from.size();
  if (n < 3) throw DomainError("umeyama_align: need >= 3 positions");

  Vec3 mean_from = Vec3::Zero();
  Vec3 mean_to = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    mean_from += from[i];
    mean_to += to[i];
  }
  mean_from /= static_cast<double>(n);
  mean_to /= static_cast<double>(n);

  Mat3 cov = Mat3::Zero();
  double var_from = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 a = from[i] - mean_from;
    const Vec3 b = to[i] - mean_to;
    cov += b * a.transpose();
    var_from += a.squaredNorm();
  }
  cov /= static_cast<double>(n);
  var_from /= static_cast<double>(n);

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  // Collinear or coincident point sets leave the rotation underdetermined.
  if (sv(1) < 1e-12 * std::max(sv(0), 1e-300) || sv(0) < 1e-300)
    throw DomainError("umeyama_align: rank deficient point configuration");

  Mat3 s = Mat3::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0)
    s(2, 2) = -1.0;

  Similarity out;
  out.rotation = svd.matrixU() * s * svd.matrixV().transpose();
  out.scale =
      with_scale ? (sv(0) + sv(1) + s(2, 2) * sv(2)) / var_from : 1.0;
  out.translation = mean_to - out.scale * (out.rotation * mean_from);
  return out;
}

Similarity umeyama_align(const std::vector<Pose>& traj_a,
                         const std::vector<Pose>& traj_b, bool with_scale) {
  std::vector<Vec3> a, b;
  a.reserve(traj_a.size());
  b.reserve(traj_b.size());
  for (const auto& p : traj_a) a.push_back(p.translation);
  for (const auto& p : traj_b) b.push_back(p.translation);
  return umeyama_align(a, b, with_scale);
}

}  // namespace splatfuse
