#pragma once

#include <map>
#include <utility>

#include "splatfuse/tracking/optimize.hpp"

namespace splatfuse {

struct LoopClosureConfig {
  double covis_overlap_min = 0.6;  // frustum overlap ratio gate
  int min_temporal_gap = 10;       // keyframe id distance gate
  int max_candidates_per_kf = 2;

  void validate() const {
    if (covis_overlap_min <= 0.0 || covis_overlap_min > 1.0)
      throw ConfigError("LoopClosureConfig: overlap threshold not in (0,1]");
    if (min_temporal_gap < 1)
      throw ConfigError("LoopClosureConfig: min_temporal_gap must be >= 1");
    if (max_candidates_per_kf < 1)
      throw ConfigError("LoopClosureConfig: max_candidates_per_kf must be >= 1");
  }
};

// Fraction of src's sampled pixels that unproject through its inverse depth
// and land inside dst's image with positive depth.
double frustum_overlap(const FactorGraph& graph, int src, int dst,
                       int stride = 4);

// Candidate loop pairs: id gap >= min_temporal_gap and overlap >= threshold,
// at most max_candidates_per_kf per keyframe, canonical (low, high) order,
// sorted by overlap descending.
std::vector<std::pair<int, int>> detect_loop_closures(
    const FactorGraph& graph, const LoopClosureConfig& config);

// Synthesizes a loop constraint by warping src pixels through the current
// geometry into dst; covariance is isotropic sigma_px^2.
FlowEdge make_loop_edge(const FactorGraph& graph, int src, int dst,
                        double sigma_px = 0.1);

// Bundle adjustment over the id-neighborhoods of the two endpoints
// (|id - endpoint| <= radius), gauge at the lowest id.
OptimizeResult local_ba(FactorGraph& graph, int kf_a, int kf_b, int radius,
                        const TrackingConfig& config);

struct NormalizationState {
  double mean_inv_depth = 1.0;
  bool applied = false;
};

// Rescales every inverse depth by 1/mean and every pose translation by the
// mean, so normalized inverse depths average to one. Reprojection residuals
// are invariant under this rescaling.
NormalizationState normalize_for_ba(FactorGraph& graph);

// Inverse of normalize_for_ba. Throws "not normalized" when the state was
// already consumed.
void denormalize(FactorGraph& graph, NormalizationState& state);

struct GlobalBaResult {
  OptimizeResult optimize;
  // Poses whose change exceeded 1e-8 (rotation angle or translation norm),
  // as (before, after) pairs in the graph's current coordinate frame.
  std::map<int, std::pair<Pose, Pose>> pose_updates;
};

// Damped Gauss-Newton over all poses and depths with every edge active;
// the first inserted keyframe is the gauge.
GlobalBaResult global_ba(FactorGraph& graph, const TrackingConfig& config);

}  // namespace splatfuse
