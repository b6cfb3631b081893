#include "splatfuse/harness/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "splatfuse/core/error.hpp"

namespace splatfuse {
namespace {

constexpr double kMinRayT = 1e-9;

double intersect_plane(const Plane& plane, const Vec3& o, const Vec3& d) {
  const double denom = plane.normal.dot(d);
  if (std::abs(denom) < 1e-12) return -1.0;
  const double t = plane.normal.dot(plane.point - o) / denom;
  return t > kMinRayT ? t : -1.0;
}

double intersect_sphere(const Sphere& sphere, const Vec3& o, const Vec3& d) {
  const Vec3 oc = o - sphere.center;
  const double a = d.squaredNorm();
  const double b = 2.0 * oc.dot(d);
  const double c = oc.squaredNorm() - sphere.radius * sphere.radius;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return -1.0;
  const double sq = std::sqrt(disc);
  const double t0 = (-b - sq) / (2.0 * a);
  if (t0 > kMinRayT) return t0;
  const double t1 = (-b + sq) / (2.0 * a);
  return t1 > kMinRayT ? t1 : -1.0;
}

double wave(double x) { return 0.5 + 0.5 * std::sin(x); }

}  // namespace

RayHit raycast(const SyntheticScene& scene, const Vec3& origin,
               const Vec3& dir) {
  RayHit best;
  double best_t = std::numeric_limits<double>::infinity();
  for (const Plane& plane : scene.planes) {
    const double t = intersect_plane(plane, origin, dir);
    if (t > 0.0 && t < best_t) {
      best_t = t;
      best = {true, t, plane.material};
    }
  }
  for (const Sphere& sphere : scene.spheres) {
    const double t = intersect_sphere(sphere, origin, dir);
    if (t > 0.0 && t < best_t) {
      best_t = t;
      best = {true, t, sphere.material};
    }
  }
  return best;
}

Vec3 scene_texture(int material, const Vec3& p) {
  static const Vec3 palette[] = {
      {0.85, 0.55, 0.35}, {0.40, 0.65, 0.85}, {0.55, 0.80, 0.45},
      {0.80, 0.75, 0.40}, {0.70, 0.45, 0.75}, {0.50, 0.70, 0.70},
  };
  constexpr int kPaletteSize = static_cast<int>(std::size(palette));
  const Vec3& base = palette[((material % kPaletteSize) + kPaletteSize) %
                             kPaletteSize];
  // Two sine octaves; low-frequency hue drift plus mid-frequency detail.
  const double u =
      wave(2.1 * p.x() + 1.3 * p.y() - 0.7 * p.z() + 0.31 * material);
  const double v =
      wave(1.1 * p.y() + 2.7 * p.z() + 0.5 * p.x() - 0.17 * material);
  const double w = wave(9.0 * p.x() + 7.5 * p.y() + 8.2 * p.z());
  Vec3 c = base.cwiseProduct(
      Vec3(0.55 + 0.35 * u + 0.10 * w, 0.55 + 0.35 * v + 0.10 * w,
           0.55 + 0.20 * u + 0.15 * v + 0.10 * w));
  return c.cwiseMax(0.02).cwiseMin(0.98);
}

RenderedView render_view(const SyntheticScene& scene, const Camera& camera,
                         const Pose& pose) {
  camera.validate();
  RenderedView view;
  view.image = GridV3(camera.width, camera.height, Vec3::Zero());
  view.depth = GridD(camera.width, camera.height, 0.0);
  const Vec3 origin = pose.translation;
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      // Camera-frame direction with unit z, so the ray parameter is the
      // camera z-depth.
      const Vec3 dir = pose.rotation * camera.ray(Vec2(x, y));
      const RayHit hit = raycast(scene, origin, dir);
      if (hit.hit) {
        view.depth.at(x, y) = hit.t;
        view.image.at(x, y) = scene_texture(hit.material, origin + hit.t * dir);
      } else if (scene.background_depth > 0.0) {
        view.depth.at(x, y) = scene.background_depth;
        view.image.at(x, y) = scene.background_color;
      } else {
        throw DomainError("render_view: ray escaped closed scene at pixel (" +
                          std::to_string(x) + ", " + std::to_string(y) + ")");
      }
    }
  }
  return view;
}

SyntheticScene make_smoke_scene() {
  SyntheticScene scene;
  scene.planes.push_back({{0.0, 0.0, 4.5}, {0.0, 0.0, -1.0}, 0});   // back
  scene.planes.push_back({{0.0, 0.9, 0.0}, {0.0, -1.0, 0.0}, 1});   // floor
  scene.planes.push_back({{-1.6, 0.0, 0.0}, {1.0, 0.0, -0.3}, 2});  // slant
  return scene;
}

SyntheticScene make_loop_scene() {
  SyntheticScene scene;
  scene.planes.push_back({{4.0, 0.0, 0.0}, {-1.0, 0.0, 0.0}, 0});
  scene.planes.push_back({{-4.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, 1});
  scene.planes.push_back({{0.0, 0.0, 4.0}, {0.0, 0.0, -1.0}, 2});
  scene.planes.push_back({{0.0, 0.0, -4.0}, {0.0, 0.0, 1.0}, 3});
  scene.planes.push_back({{0.0, 0.9, 0.0}, {0.0, -1.0, 0.0}, 4});   // floor
  scene.planes.push_back({{0.0, -0.9, 0.0}, {0.0, 1.0, 0.0}, 5});   // ceiling
  // Near objects between the camera ring and the walls; the close/far depth
  // contrast anchors structure that distant planes alone cannot.
  for (int j = 0; j < 16; ++j) {
    const double ang = 2.0 * M_PI * (j + 0.5) / 16.0;
    const double y = (j % 2 == 0) ? 0.3 : -0.3;
    scene.spheres.push_back(
        {{2.2 * std::cos(ang), y, 2.2 * std::sin(ang)}, 0.25, j % 6});
  }
  return scene;
}

}  // namespace splatfuse
