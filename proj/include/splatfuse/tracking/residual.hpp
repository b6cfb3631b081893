#pragma once

#include "splatfuse/tracking/factor_graph.hpp"

namespace splatfuse {

// Whitened flow residual at one pixel of one edge, with Jacobians in the
// right-multiplicative tangent of the two poses and the source inverse
// depth. Whitening multiplies by Sigma^(-1/2) so squared norms accumulate
// Mahalanobis cost.
struct ResidualEval {
  bool valid = false;
  Vec2 raw = Vec2::Zero();       // p~_ij - projection, unwhitened
  Vec2 whitened = Vec2::Zero();
  Mat26 j_pose_src = Mat26::Zero();
  Mat26 j_pose_dst = Mat26::Zero();
  Vec2 j_inv_depth = Vec2::Zero();
};

// Evaluates the flow residual for pixel (px, py) of `edge`. Invalid (and
// excluded from the normal equations) when the transformed point lies
// behind the destination camera, or when either the current reprojection
// or the stored flow target falls outside the destination image.
ResidualEval geometric_residual(const FactorGraph& graph, const FlowEdge& edge,
                                int px, int py, bool with_jacobians = true);

// True iff the mean flow magnitude over the field exceeds the keyframe
// threshold (strict inequality).
bool should_insert_keyframe(const GridV2& flow_field,
                            const TrackingConfig& config);

}  // namespace splatfuse
