#pragma once

#include "splatfuse/fusion/confidence.hpp"
#include "splatfuse/tracking/optimize.hpp"

namespace splatfuse {

// Per-pixel labels from multi-view consistency counts: a pixel is low-error
// iff its count strictly exceeds the configured threshold.
PixelGrid<ErrorClass> classify_depth_errors(const FactorGraph& graph,
                                            int kf_id,
                                            const ConfidenceMap& consistency,
                                            const TrackingConfig& config);

struct ScaleShiftFit {
  double theta = 1.0;
  double gamma = 0.0;
  bool degenerate = false;
};

// Closed-form least squares aligning the monocular prior to the low-error
// inverse depths: minimizes sum_p (theta/mono(p) + gamma - d(p))^2 over
// low-error pixels. Prior variance below 1e-12 over that set falls back to
// theta = 1 with a mean shift, flagged degenerate.
ScaleShiftFit fit_scale_shift(const Keyframe& kf);

// The refinement objective split into its three summands: whitened flow
// cost, the alpha1 pull of high-error depths toward the aligned prior, and
// the alpha2 tie of (theta, gamma) to the fixed low-error depths.
struct PriorObjective {
  double geom = 0.0;
  double prior_high = 0.0;
  double prior_low = 0.0;
  double total() const { return geom + prior_high + prior_low; }
};

PriorObjective prior_objective(const FactorGraph& graph,
                               const std::vector<int>& keyframes,
                               const TrackingConfig& config);

// Damped Gauss-Newton over high-error inverse depths and per-keyframe
// (theta, gamma), poses fixed. Depth variables are eliminated by Schur
// complement onto the per-keyframe 2x2 alignment block. Objective is
// non-increasing across accepted steps; same stall policy as ba_optimize.
OptimizeResult refine_prior_alignment(FactorGraph& graph,
                                      const std::vector<int>& keyframes,
                                      const TrackingConfig& config);

struct DspoResult {
  PriorObjective before;
  PriorObjective after;
  std::vector<OptimizeResult> geometry_stages;
  std::vector<OptimizeResult> prior_stages;
};

// Alternating refinement over the current window: each round runs gn_iters
// damped Gauss-Newton steps on poses + all depths, then gn_iters steps on
// high-error depths and (theta, gamma) with poses fixed. Error classes must
// already be assigned on every window keyframe.
DspoResult dspo_refine(FactorGraph& graph, const TrackingConfig& config);

}  // namespace splatfuse
