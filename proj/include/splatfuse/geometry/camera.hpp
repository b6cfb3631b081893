#pragma once

#include "splatfuse/core/error.hpp"
#include "splatfuse/geometry/pose.hpp"

namespace splatfuse {

// Pinhole intrinsics. Pixel coordinates are continuous with integer pixel
// centers; (cx, cy) is the principal point in that convention.
struct Camera {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  void validate() const {
    if (fx <= 0.0 || fy <= 0.0)
      throw DomainError("Camera: focal lengths must be positive");
    if (width < 1 || height < 1)
      throw DomainError("Camera: image size must be >= 1");
  }

  // Projects a camera-frame point with z > 0 to pixel coordinates.
  Vec2 project(const Vec3& point) const {
    if (point.z() <= 0.0) throw DomainError("project: point behind camera");
    const double inv_z = 1.0 / point.z();
    return {fx * point.x() * inv_z + cx, fy * point.y() * inv_z + cy};
  }

  bool in_front(const Vec3& point) const { return point.z() > 0.0; }

  // d(project)/d(point), valid for z > 0.
  Mat23 project_jacobian(const Vec3& point) const {
    const double inv_z = 1.0 / point.z();
    const double inv_z2 = inv_z * inv_z;
    Mat23 j;
    // clang-format off
    j << fx * inv_z, 0.0,        -fx * point.x() * inv_z2,
         0.0,        fy * inv_z, -fy * point.y() * inv_z2;
    // clang-format on
    return j;
  }

  // Camera-frame point at the given pixel and inverse depth (1/m).
  Vec3 unproject(const Vec2& pixel, double inverse_depth) const {
    if (inverse_depth <= 0.0)
      throw DomainError("unproject: invalid inverse depth");
    const double z = 1.0 / inverse_depth;
    return {(pixel.x() - cx) / fx * z, (pixel.y() - cy) / fy * z, z};
  }

  // Camera-frame point at metric depth z > 0.
  Vec3 unproject_depth(const Vec2& pixel, double depth) const {
    if (depth <= 0.0) throw DomainError("unproject_depth: depth must be > 0");
    return {(pixel.x() - cx) / fx * depth, (pixel.y() - cy) / fy * depth,
            depth};
  }

  // Unit-less ray direction through a pixel (z component 1).
  Vec3 ray(const Vec2& pixel) const {
    return {(pixel.x() - cx) / fx, (pixel.y() - cy) / fy, 1.0};
  }

  bool contains(const Vec2& pixel) const {
    return pixel.x() >= 0.0 && pixel.x() <= width - 1.0 && pixel.y() >= 0.0 &&
           pixel.y() <= height - 1.0;
  }
};

}  // namespace splatfuse
