#pragma once

#include <optional>
#include <set>
#include <vector>

#include "splatfuse/tracking/residual.hpp"

namespace splatfuse {

struct OptimizeResult {
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int accepted_steps = 0;
  std::vector<double> cost_trace;  // cost after each accepted step
};

struct BaOptions {
  std::vector<int> keyframes;   // vertex set; first entry is the gauge
  bool optimize_poses = true;
  bool optimize_depths = true;
  int iterations = 8;
  double initial_damping = 1e-4;
  // Poses held fixed in addition to the gauge keyframe.
  std::set<int> extra_fixed_poses;
};

// Whitened Mahalanobis flow cost over all edges whose endpoints both lie
// in `keyframes`.
double reprojection_cost(const FactorGraph& graph,
                         const std::vector<int>& keyframes);

// Damped Gauss-Newton over poses and per-pixel inverse depths of the given
// keyframe set. Depths are eliminated by Schur complement; the first
// keyframe's pose is the gauge and is never touched. Cost is non-increasing
// across accepted steps. Throws OptimizerStalled if the normal equations
// stay unsolvable at maximum damping.
OptimizeResult ba_optimize(FactorGraph& graph, const BaOptions& opts);

// Sliding-window refinement of poses and inverse depths (the geometric
// objective restricted to the current window).
OptimizeResult optimize_window(FactorGraph& graph,
                               const TrackingConfig& config);

}  // namespace splatfuse
