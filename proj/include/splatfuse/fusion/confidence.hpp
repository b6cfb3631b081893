#pragma once

#include <vector>

#include "splatfuse/tracking/factor_graph.hpp"

namespace splatfuse {

// Per-pixel multi-view consistency counts and the fusion weights derived
// from them. Weights always satisfy w_mv + w_mono = 1 per pixel.
struct ConfidenceMap {
  GridI32 counts;
  GridD w_mv;
  GridD w_mono;
};

struct FusionConfig {
  double eta = 0.01;             // consistency tolerance factor
  int n_key = 30;                // weight normalization count
  bool nearest_neighbor_depth = false;  // nearest instead of bilinear lookup

  void validate() const {
    if (eta <= 0.0) throw ConfigError("FusionConfig: eta must be > 0");
    if (n_key < 1) throw ConfigError("FusionConfig: n_key must be >= 1");
  }
};

// For each pixel of keyframe `kf_id`, counts how many of `neighbors` agree
// geometrically: the pixel's 3D point and the neighbor's reconstruction at
// the reprojected location must lie within eta * mean(depth of kf_id).
// Pixels that reproject out of a neighbor's bounds or behind its camera do
// not count that neighbor. An empty neighbor list yields all-zero counts.
GridI32 consistency_count(const FactorGraph& graph, int kf_id,
                          const std::vector<int>& neighbors,
                          const FusionConfig& config);

// w_mv = min(counts / n_key, 1); w_mono = 1 - w_mv.
ConfidenceMap compute_weights(const GridI32& counts,
                              const FusionConfig& config);

}  // namespace splatfuse
