#pragma once

#include <map>
#include <string>
#include <vector>

#include "splatfuse/fusion/proxy_depth.hpp"

namespace splatfuse {

// One splat primitive. Covariance is rotation * diag(exp(log_scales))^2 *
// rotation^T; opacity is the logistic of opacity_logit; color is a single
// RGB albedo.
struct Gaussian {
  Vec3 mean = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();
  Vec3 log_scales = Vec3::Zero();
  double opacity_logit = 0.0;
  Vec3 color = Vec3::Zero();
  int anchor_kf = -1;

  Vec3 scales() const { return log_scales.array().exp(); }
  double opacity() const { return 1.0 / (1.0 + std::exp(-opacity_logit)); }
  Mat3 covariance() const {
    const Vec3 s2 = (2.0 * log_scales).array().exp();
    return rotation * s2.asDiagonal() * rotation.transpose();
  }
};

struct GaussianMap {
  std::vector<Gaussian> gaussians;
  // anchor keyframe id -> indices of the Gaussians it anchors
  std::map<int, std::vector<std::size_t>> anchor_index;

  void rebuild_anchor_index() {
    anchor_index.clear();
    for (std::size_t i = 0; i < gaussians.size(); ++i)
      anchor_index[gaussians[i].anchor_kf].push_back(i);
  }
  void append(std::vector<Gaussian> batch) {
    for (Gaussian& g : batch) {
      anchor_index[g.anchor_kf].push_back(gaussians.size());
      gaussians.push_back(std::move(g));
    }
  }
};

// One Gaussian per sampled pixel on a stride grid: mean unprojected through
// the keyframe pose and proxy depth, color copied from the image, isotropic
// scale set by the pixel footprint at that depth, opacity 0.5, identity
// rotation. Pixels with non-positive or non-finite proxy depth are skipped.
std::vector<Gaussian> init_gaussians(const Keyframe& kf,
                                     const ProxyDepth& proxy,
                                     const Camera& camera, int stride);

// Rigidly re-anchors Gaussians after pose corrections: for anchor i with
// update (old, new), applies new * old^-1 to means and left-multiplies
// rotations. Gaussians whose anchor has no update are untouched.
void deform_map(GaussianMap& map,
                const std::map<int, std::pair<Pose, Pose>>& pose_updates);

// Versioned little-endian binary snapshot of all Gaussians (rotation stored
// as a unit quaternion, fields in f32).
void save_map(const GaussianMap& map, const std::string& path);
GaussianMap load_map(const std::string& path);

// Plain-text export, one "x y z r g b" line per Gaussian.
void save_point_cloud(const GaussianMap& map, const std::string& path);

}  // namespace splatfuse
