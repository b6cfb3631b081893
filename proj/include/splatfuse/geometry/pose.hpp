#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace splatfuse {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat23 = Eigen::Matrix<double, 2, 3>;
using Mat26 = Eigen::Matrix<double, 2, 6>;
using Mat36 = Eigen::Matrix<double, 3, 6>;

// Rigid transform mapping camera frame to world frame. Rotation is stored
// as an orthonormal matrix with det +1; quaternions appear only at I/O
// boundaries.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return Pose{}; }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  Pose inverse() const {
    Pose out;
    out.rotation = rotation.transpose();
    out.translation = -(out.rotation * translation);
    return out;
  }

  Pose compose(const Pose& rhs) const {
    Pose out;
    out.rotation = rotation * rhs.rotation;
    out.translation = rotation * rhs.translation + translation;
    return out;
  }

  bool operator==(const Pose& rhs) const {
    return rotation == rhs.rotation && translation == rhs.translation;
  }
};

inline Pose operator*(const Pose& a, const Pose& b) { return a.compose(b); }

inline Vec3 transform(const Pose& pose, const Vec3& point) {
  return pose.apply(point);
}

Mat3 skew(const Vec3& v);

Mat3 so3_exp(const Vec3& omega);
Vec3 so3_log(const Mat3& rotation);

// Twist ordering is (v, omega): translation first. Right-multiplicative
// perturbations everywhere: P_new = P * se3_exp(xi).
Pose se3_exp(const Vec6& twist);
// Throws DomainError for rotation angles at or beyond pi - 1e-6.
Vec6 se3_log(const Pose& pose);

// Re-project a near-orthonormal matrix back onto SO(3).
Mat3 orthonormalize(const Mat3& m);

// Least-squares similarity s*R*a + t ~ b over paired positions.
struct Similarity {
  double scale = 1.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const {
    return scale * (rotation * p) + translation;
  }
};

// Umeyama alignment of trajectory positions. Requires >= 3 non-collinear
// points; throws DomainError("rank deficient ...") on degenerate input.
// with_scale = false constrains scale to 1 (rigid alignment).
Similarity umeyama_align(const std::vector<Vec3>& from,
                         const std::vector<Vec3>& to, bool with_scale = true);

Similarity umeyama_align(const std::vector<Pose>& traj_a,
                         const std::vector<Pose>& traj_b,
                         bool with_scale = true);

}  // namespace splatfuse
