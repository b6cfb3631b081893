#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "splatfuse/harness/scene.hpp"
#include "splatfuse/tracking/factor_graph.hpp"

namespace splatfuse {

// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct Rect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  bool empty() const { return x1 <= x0 || y1 <= y0; }
  bool contains(int x, int y) const {
    return x >= x0 && x < x1 && y >= y0 && y < y1;
  }
};

struct SequenceSpec {
  std::vector<Pose> trajectory;       // ground truth camera -> world
  std::vector<Pose> init_trajectory;  // initial estimates; empty = gt
  Camera camera;
  double flow_noise_sigma = 0.0;   // pixels
  double prior_scale = 1.0;        // theta*, true affine corruption
  double prior_shift = 0.0;        // gamma*, 1/m
  double prior_noise_sigma = 0.0;  // 1/m
  Rect corrupt_region;             // texture-poor patch, may be empty
  double corrupt_factor = 1.0;     // multiplies multi-view depth inside
  std::uint64_t seed = 0;
  int edge_predecessors = 3;       // temporal connectivity (both directions)
};

struct Frame {
  int id = -1;
  double timestamp = 0.0;
  Pose gt_pose;
  Pose init_pose;
  GridV3 image;
  GridD gt_depth;      // meters
  GridD mv_inv_depth;  // 1/m; corrupted inside corrupt_region
  GridD mono_prior;    // meters, affine-warped gt depth plus noise
};

struct GeneratedSequence {
  Camera camera;
  std::vector<Frame> frames;
  std::vector<FlowEdge> edges;
};

// Flow measurement src -> dst: per-pixel ground-truth warp of src_depth
// through the two poses plus Gaussian pixel noise. Targets that fall
// behind the destination camera are stored as (-1,-1) (always excluded).
// Covariance is diag(max(sigma,0.1)^2), inflated x100 inside
// `texture_poor` where the injected noise is likewise 10x larger (poor
// texture genuinely degrades flow). Pass rng = nullptr for noise-free
// targets.
FlowEdge make_flow_edge(const Camera& camera, int src_id, int dst_id,
                        const Pose& src_pose, const Pose& dst_pose,
                        const GridD& src_depth, double flow_noise_sigma,
                        const Rect& texture_poor, std::mt19937_64* rng);

// Renders every trajectory pose, derives the multi-view depth init and
// the monocular prior, and connects each frame to its k predecessors in
// both directions. Edges warp through init_trajectory when present (the
// simulated odometry is consistent with the initial estimates), always
// using ground-truth depth.
GeneratedSequence generate_sequence(const SyntheticScene& scene,
                                    const SequenceSpec& spec);

// Graph with one keyframe per frame (initial poses, multi-view inverse
// depth) and all sequence edges. No optimization is run.
FactorGraph build_graph(const GeneratedSequence& seq);

Camera make_default_camera();

// Lateral sweep across the three-wall room; 12 frames, mild noise.
SequenceSpec make_smoke_spec(std::uint64_t seed = 7);
// Smoke plus a texture-poor rectangle whose multi-view depth is x3.
SequenceSpec make_corrupt_spec(std::uint64_t seed = 7);
// Out-and-back lateral scan inside the box with simulated odometry drift;
// the return pass revisits every outbound viewpoint, so (first, last) is a
// ground-truth loop pair.
SequenceSpec make_loop_spec(std::uint64_t seed = 11);

}  // namespace splatfuse
