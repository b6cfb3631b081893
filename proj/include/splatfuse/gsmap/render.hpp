#pragma once

#include "splatfuse/gsmap/gaussian_map.hpp"

namespace splatfuse {

// Screen-space footprint of one visible Gaussian. The 2D covariance is the
// first-order projective image J W Sigma3 W^T J^T of the 3D covariance; the
// pixel bbox conservatively covers the 3-sigma Mahalanobis cutoff.
struct Projected {
  std::size_t index = 0;  // into map.gaussians
  Vec2 center = Vec2::Zero();
  Mat2 cov2d = Mat2::Zero();
  Mat2 inv_cov2d = Mat2::Zero();
  double z = 0.0;  // camera-frame depth of the mean
  double opacity = 0.0;
  Vec3 color = Vec3::Zero();
  int x0 = 0, x1 = -1, y0 = 0, y1 = -1;
};

// Projects the visible Gaussians (mean in front of the camera, invertible
// footprint) and sorts them front to back; ties broken by index so the
// order is deterministic.
std::vector<Projected> project_gaussians(const GaussianMap& map,
                                         const Camera& camera,
                                         const Pose& pose);

struct RenderResult {
  GridV3 color;
  GridD depth;  // composited with the same per-Gaussian weights as color
  GridD alpha;
};

// Exact per-pixel alpha compositing, front to back. A Gaussian contributes
// alpha = opacity * exp(-q/2) at pixels where the squared Mahalanobis
// distance q <= 9 and nothing beyond; there is no minimum-alpha skip, no
// saturation clamp, and no early termination.
RenderResult render(const GaussianMap& map, const Camera& camera,
                    const Pose& pose);

struct MapGradients {
  std::vector<Vec3> mean;
  std::vector<Vec3> rotation;  // tangent of R <- R * exp(hat(t))
  std::vector<Vec3> log_scales;
  std::vector<double> opacity_logit;
  std::vector<Vec3> color;

  explicit MapGradients(std::size_t n = 0) { resize(n); }
  void resize(std::size_t n) {
    mean.assign(n, Vec3::Zero());
    rotation.assign(n, Vec3::Zero());
    log_scales.assign(n, Vec3::Zero());
    opacity_logit.assign(n, 0.0);
    color.assign(n, Vec3::Zero());
  }
};

// Backpropagates per-pixel gradients of the rendered color / depth / alpha
// images to every Gaussian parameter.
MapGradients render_backward(const GaussianMap& map, const Camera& camera,
                             const Pose& pose, const GridV3& d_color,
                             const GridD& d_depth, const GridD& d_alpha);

}  // namespace splatfuse
