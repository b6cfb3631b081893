#include "splatfuse/fusion/confidence.hpp"

#include "splatfuse/kernels/kernels.hpp"

namespace splatfuse {

GridI32 consistency_count(const FactorGraph& graph, int kf_id,
                          const std::vector<int>& neighbors,
                          const FusionConfig& config) {
  config.validate();
  const Keyframe& kf = graph.keyframe(kf_id);
  const Camera& cam = graph.camera;
  const int w = kf.inv_depth.width();
  const int h = kf.inv_depth.height();

  GridI32 counts(w, h, 0);
  if (neighbors.empty()) return counts;

  // Tolerance scales with the mean multi-view depth of this keyframe,
  // computed over valid (positive) pixels.
  double depth_sum = 0.0;
  std::size_t depth_n = 0;
  for (std::size_t i = 0; i < kf.inv_depth.size(); ++i) {
    if (kf.inv_depth[i] > 0.0) {
      depth_sum += 1.0 / kf.inv_depth[i];
      ++depth_n;
    }
  }
  if (depth_n == 0) throw DomainError("consistency_count: no valid depths");
  const double tol = config.eta * (depth_sum / static_cast<double>(depth_n));

  struct NeighborView {
    const Keyframe* kf;
    Pose world_to_cam;
  };
  std::vector<NeighborView> views;
  views.reserve(neighbors.size());
  for (int nid : neighbors) {
    if (nid == kf_id) continue;  // a keyframe is not its own neighbor
    const Keyframe& nkf = graph.keyframe(nid);
    views.push_back({&nkf, nkf.pose.inverse()});
  }

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double inv_d = kf.inv_depth.at(x, y);
      if (inv_d <= 0.0) continue;
      const Vec3 point_world = kf.pose.apply(
          cam.unproject(Vec2(static_cast<double>(x), static_cast<double>(y)),
                        inv_d));
      int n = 0;
      for (const NeighborView& view : views) {
        const Vec3 in_neighbor = view.world_to_cam.apply(point_world);
        if (!cam.in_front(in_neighbor)) continue;
        const Vec2 px = cam.project(in_neighbor);
        if (!cam.contains(px)) continue;
        const double neighbor_inv_d =
            config.nearest_neighbor_depth
                ? view.kf->inv_depth.sample_nearest(px.x(), px.y())
                : view.kf->inv_depth.sample(px.x(), px.y());
        if (neighbor_inv_d <= 0.0) continue;
        const Vec3 reconstructed =
            view.kf->pose.apply(cam.unproject(px, neighbor_inv_d));
        if ((point_world - reconstructed).norm() < tol) ++n;
      }
      counts.at(x, y) = n;
    }
  }
  return counts;
}

ConfidenceMap compute_weights(const GridI32& counts,
                              const FusionConfig& config) {
  config.validate();
  ConfidenceMap out;
  out.counts = counts;
  out.w_mv = GridD(counts.width(), counts.height());
  out.w_mono = GridD(counts.width(), counts.height());
  kernels::weights_from_counts(out.w_mv.data(), out.w_mono.data(),
                               counts.data(), 1.0 / config.n_key,
                               counts.size());
  return out;
}

}  // namespace splatfuse
