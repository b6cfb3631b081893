#pragma once

#include <vector>

#include "splatfuse/core/pixel_grid.hpp"
#include "splatfuse/geometry/camera.hpp"
#include "splatfuse/geometry/pose.hpp"

namespace splatfuse {

// Infinite textured plane. The normal need not be unit length.
struct Plane {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  int material = 0;
};

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
  int material = 0;
};

// Ray-cast world made of analytic primitives with a smooth procedural
// texture. If background_depth > 0 it backstops escaping rays; otherwise
// the surfaces must enclose every camera ray and an escape is an error.
struct SyntheticScene {
  std::vector<Plane> planes;
  std::vector<Sphere> spheres;
  double background_depth = -1.0;
  Vec3 background_color = Vec3(0.25, 0.25, 0.3);
};

struct RayHit {
  bool hit = false;
  double t = 0.0;  // ray parameter; equals z-depth when dir has unit camera z
  int material = 0;
};

RayHit raycast(const SyntheticScene& scene, const Vec3& origin,
               const Vec3& dir);

// Smooth sinusoidal albedo in [0,1], distinct per material.
Vec3 scene_texture(int material, const Vec3& world_point);

struct RenderedView {
  GridV3 image;
  GridD depth;  // camera z-depth, meters
};

// Casts one ray per pixel center. Throws DomainError if a ray escapes a
// scene with no background depth.
RenderedView render_view(const SyntheticScene& scene, const Camera& camera,
                         const Pose& pose);

// Built-in worlds used by the CLI and the test suite.
SyntheticScene make_smoke_scene();  // three-wall room, lateral sweep
SyntheticScene make_loop_scene();   // closed box with a ring of spheres

}  // namespace splatfuse
