#include "splatfuse/backend/backend.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "splatfuse/kernels/kernels.hpp"

namespace splatfuse {

double frustum_overlap(const FactorGraph& graph, int src, int dst,
                       int stride) {
  if (stride < 1) throw DomainError("frustum_overlap: stride must be >= 1");
  const Keyframe& a = graph.keyframe(src);
  const Keyframe& b = graph.keyframe(dst);
  const Camera& cam = graph.camera;
  const Pose rel = b.pose.inverse() * a.pose;

  std::size_t total = 0, inside = 0;
  for (int y = 0; y < a.inv_depth.height(); y += stride)
    for (int x = 0; x < a.inv_depth.width(); x += stride) {
      ++total;
      const double inv_d = a.inv_depth.at(x, y);
      if (!(inv_d > 0.0)) continue;
      const Vec3 point = rel.apply(cam.unproject(
          Vec2(static_cast<double>(x), static_cast<double>(y)), inv_d));
      if (!cam.in_front(point)) continue;
      if (cam.contains(cam.project(point))) ++inside;
    }
  return total == 0 ? 0.0
                    : static_cast<double>(inside) / static_cast<double>(total);
}

std::vector<std::pair<int, int>> detect_loop_closures(
    const FactorGraph& graph, const LoopClosureConfig& config) {
  config.validate();
  if (graph.num_keyframes() < 2)
    throw DomainError("detect_loop_closures: needs >= 2 keyframes");
  const std::vector<int>& ids = graph.insertion_order();

  struct Candidate {
    double overlap;
    int a, b;  // canonical a < b
  };
  std::vector<Candidate> kept;
  for (int i : ids) {
    std::vector<Candidate> mine;
    for (int j : ids) {
      if (std::abs(i - j) < config.min_temporal_gap) continue;
      const double overlap = frustum_overlap(graph, i, j);
      if (overlap >= config.covis_overlap_min)
        mine.push_back({overlap, std::min(i, j), std::max(i, j)});
    }
    std::sort(mine.begin(), mine.end(), [](const Candidate& x,
                                           const Candidate& y) {
      return x.overlap != y.overlap ? x.overlap > y.overlap : x.b < y.b;
    });
    if (static_cast<int>(mine.size()) > config.max_candidates_per_kf)
      mine.resize(config.max_candidates_per_kf);
    kept.insert(kept.end(), mine.begin(), mine.end());
  }

  std::sort(kept.begin(), kept.end(), [](const Candidate& x,
                                         const Candidate& y) {
    return x.overlap != y.overlap ? x.overlap > y.overlap
                                  : std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });
  std::vector<std::pair<int, int>> out;
  std::set<std::pair<int, int>> seen;
  for (const Candidate& c : kept)
    if (seen.insert({c.a, c.b}).second) out.emplace_back(c.a, c.b);
  return out;
}

FlowEdge make_loop_edge(const FactorGraph& graph, int src, int dst,
                        double sigma_px) {
  if (sigma_px <= 0.0) throw DomainError("make_loop_edge: sigma_px <= 0");
  const Keyframe& a = graph.keyframe(src);
  const Keyframe& b = graph.keyframe(dst);
  const Camera& cam = graph.camera;
  const Pose rel = b.pose.inverse() * a.pose;

  FlowEdge edge;
  edge.src = src;
  edge.dst = dst;
  const int w = a.inv_depth.width();
  const int h = a.inv_depth.height();
  edge.flow_target = GridV2(w, h, Vec2::Zero());
  edge.covariance =
      GridM2(w, h, (Mat2::Identity() * sigma_px * sigma_px).eval());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Vec3 point = rel.apply(cam.unproject(
          Vec2(static_cast<double>(x), static_cast<double>(y)),
          a.inv_depth.at(x, y)));
      // Out-of-frustum pixels get an out-of-bounds target, which the
      // residual evaluation already excludes.
      edge.flow_target.at(x, y) =
          cam.in_front(point) ? cam.project(point) : Vec2(-1.0, -1.0);
    }
  return edge;
}

OptimizeResult local_ba(FactorGraph& graph, int kf_a, int kf_b, int radius,
                        const TrackingConfig& config) {
  if (radius < 0) throw DomainError("local_ba: radius must be >= 0");
  std::vector<int> keyframes;
  for (int id : graph.insertion_order())
    if (std::abs(id - kf_a) <= radius || std::abs(id - kf_b) <= radius)
      keyframes.push_back(id);
  if (keyframes.size() < 2)
    throw DomainError("local_ba: neighborhood has < 2 keyframes");

  BaOptions opts;
  opts.keyframes = keyframes;  // insertion order; first entry is the gauge
  opts.iterations = config.gn_iters;
  opts.initial_damping = config.damping;
  return ba_optimize(graph, opts);
}

NormalizationState normalize_for_ba(FactorGraph& graph) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& [id, kf] : graph.vertices()) {
    for (std::size_t i = 0; i < kf.inv_depth.size(); ++i)
      if (!(kf.inv_depth[i] > 0.0))
        throw DomainError("normalize_for_ba: non-positive inverse depth");
    total += kernels::sum(kf.inv_depth.data(), kf.inv_depth.size());
    count += kf.inv_depth.size();
  }
  if (count == 0) throw DomainError("normalize_for_ba: no depths");
  const double mean = total / static_cast<double>(count);

  for (auto& [id, kf] : graph.vertices()) {
    const double inv_mean = 1.0 / mean;
    for (std::size_t i = 0; i < kf.inv_depth.size(); ++i)
      kf.inv_depth[i] *= inv_mean;
    kf.pose.translation *= mean;
  }
  return {mean, true};
}

void denormalize(FactorGraph& graph, NormalizationState& state) {
  if (!state.applied) throw DomainError("denormalize: not normalized");
  for (auto& [id, kf] : graph.vertices()) {
    for (std::size_t i = 0; i < kf.inv_depth.size(); ++i)
      kf.inv_depth[i] *= state.mean_inv_depth;
    kf.pose.translation /= state.mean_inv_depth;
  }
  state.applied = false;
}

GlobalBaResult global_ba(FactorGraph& graph, const TrackingConfig& config) {
  if (graph.edges().empty()) throw DomainError("global_ba: no edges");
  const std::vector<int>& keyframes = graph.insertion_order();

  std::map<int, Pose> before;
  for (int id : keyframes) before[id] = graph.keyframe(id).pose;

  BaOptions opts;
  opts.keyframes = keyframes;
  opts.iterations = config.gn_iters;
  opts.initial_damping = config.damping;

  GlobalBaResult result;
  result.optimize = ba_optimize(graph, opts);

  for (int id : keyframes) {
    const Pose& old_pose = before[id];
    const Pose& new_pose = graph.keyframe(id).pose;
    const double angle =
        Eigen::AngleAxisd(old_pose.rotation.transpose() * new_pose.rotation)
            .angle();
    const double shift = (new_pose.translation - old_pose.translation).norm();
    if (std::max(std::abs(angle), shift) > 1e-8)
      result.pose_updates[id] = {old_pose, new_pose};
  }
  return result;
}

}  // namespace splatfuse
