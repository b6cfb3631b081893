#pragma once

#include <map>
#include <vector>

#include "splatfuse/core/pixel_grid.hpp"
#include "splatfuse/geometry/camera.hpp"
#include "splatfuse/geometry/pose.hpp"

namespace splatfuse {

enum class ErrorClass : std::uint8_t { High = 0, Low = 1 };

// One graph vertex: image, multi-view inverse depth, monocular prior and
// its alignment parameters, pose.
struct Keyframe {
  int id = -1;
  Pose pose;                     // camera -> world
  GridV3 image;                  // RGB in [0,1]
  GridD inv_depth;               // 1/m, > 0
  GridD mono_prior;              // m, > 0
  double scale = 1.0;            // theta
  double shift = 0.0;            // gamma (1/m)
  PixelGrid<ErrorClass> error_class;

  GridD depth() const {
    GridD d(inv_depth.width(), inv_depth.height());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = 1.0 / inv_depth[i];
    return d;
  }
};

// Dense flow constraint between two keyframes with per-pixel 2x2 SPD
// covariances. The flow target grid stores absolute destination pixels.
struct FlowEdge {
  int src = -1;
  int dst = -1;
  GridV2 flow_target;  // p~_ij, absolute pixels in dst
  GridM2 covariance;   // Sigma_ij per pixel

  void validate() const {
    if (flow_target.width() != covariance.width() ||
        flow_target.height() != covariance.height())
      throw DomainError("FlowEdge: grid size mismatch");
    for (std::size_t i = 0; i < covariance.size(); ++i) {
      const Mat2& c = covariance[i];
      const double asym = std::abs(c(0, 1) - c(1, 0));
      // SPD check via trace/det; eigenvalues must exceed 1e-12.
      const double tr = c(0, 0) + c(1, 1);
      const double det = c(0, 0) * c(1, 1) - c(0, 1) * c(1, 0);
      const double disc = std::sqrt(std::max(tr * tr / 4.0 - det, 0.0));
      const double lambda_min = tr / 2.0 - disc;
      if (asym > 1e-9 || lambda_min <= 1e-12)
        throw DomainError("FlowEdge: covariance not SPD");
    }
  }
};

struct TrackingConfig {
  double kf_flow_threshold = 2.0;   // tau, pixels
  int consistency_threshold = 2;    // tau_consistency
  double alpha1 = 0.05;             // prior weight on high-error depths
  double alpha2 = 1.0;              // prior weight constraining (theta, gamma)
  int window_size = 8;
  int gn_iters = 8;
  int dspo_rounds = 3;
  double damping = 1e-4;            // initial Levenberg lambda

  void validate() const {
    if (!(alpha2 > alpha1) || !(alpha1 > 0.0))
      throw ConfigError("TrackingConfig: requires alpha2 > alpha1 > 0");
    if (window_size < 2)
      throw ConfigError("TrackingConfig: window_size must be >= 2");
    if (kf_flow_threshold < 0.0 || damping <= 0.0 || gn_iters < 1 ||
        dspo_rounds < 0)
      throw ConfigError("TrackingConfig: invalid value");
  }
};

// Keyframe vertices plus flow-constraint edges. The window is always a
// suffix of the insertion order.
class FactorGraph {
 public:
  Camera camera;

  Keyframe& add_keyframe(Keyframe kf) {
    if (vertices_.count(kf.id))
      throw DomainError("FactorGraph: duplicate keyframe id");
    insertion_order_.push_back(kf.id);
    return vertices_.emplace(kf.id, std::move(kf)).first->second;
  }

  void add_edge(FlowEdge edge) {
    if (!vertices_.count(edge.src) || !vertices_.count(edge.dst))
      throw DomainError("FactorGraph: edge endpoint missing");
    edges_.push_back(std::move(edge));
  }

  bool has_keyframe(int id) const { return vertices_.count(id) != 0; }
  Keyframe& keyframe(int id) {
    auto it = vertices_.find(id);
    if (it == vertices_.end()) throw DomainError("FactorGraph: unknown id");
    return it->second;
  }
  const Keyframe& keyframe(int id) const {
    auto it = vertices_.find(id);
    if (it == vertices_.end()) throw DomainError("FactorGraph: unknown id");
    return it->second;
  }

  std::size_t num_keyframes() const { return vertices_.size(); }
  const std::vector<FlowEdge>& edges() const { return edges_; }
  std::vector<FlowEdge>& edges() { return edges_; }
  const std::vector<int>& insertion_order() const { return insertion_order_; }

  // Last `window_size` keyframes in insertion order.
  std::vector<int> window(int window_size) const {
    const std::size_t n = insertion_order_.size();
    const std::size_t w =
        std::min(static_cast<std::size_t>(window_size), n);
    return {insertion_order_.end() - w, insertion_order_.end()};
  }

  std::map<int, Keyframe>& vertices() { return vertices_; }
  const std::map<int, Keyframe>& vertices() const { return vertices_; }

 private:
  std::map<int, Keyframe> vertices_;
  std::vector<FlowEdge> edges_;
  std::vector<int> insertion_order_;
};

}  // namespace splatfuse
