#pragma once

#include "splatfuse/fusion/confidence.hpp"

namespace splatfuse {

// Confidence-weighted proxy depth for one keyframe. `valid` is 0 where the
// aligned prior was non-positive and the pixel fell back to pure
// multi-view depth.
struct ProxyDepth {
  GridD depth;        // meters
  GridU8 valid;       // prior usable at this pixel
  ConfidenceMap weights;
};

// Converts the monocular prior to an aligned depth via the inverse-depth
// affine map (theta, gamma), then blends per pixel:
//   D(p) = w_mv(p) * mv_depth(p) + w_mono(p) * aligned_prior(p)
// Pixels whose aligned inverse depth is <= 0 take pure multi-view depth
// and are flagged in `valid`.
ProxyDepth fuse_proxy_depth(const GridD& mv_depth, const GridD& mono_prior,
                            double theta, double gamma,
                            const ConfidenceMap& weights);

inline ProxyDepth fuse_proxy_depth(const GridD& mv_depth, const Keyframe& kf,
                                   const ConfidenceMap& weights) {
  return fuse_proxy_depth(mv_depth, kf.mono_prior, kf.scale, kf.shift,
                          weights);
}

}  // namespace splatfuse
