#pragma once

#include <vector>

#include "splatfuse/core/pixel_grid.hpp"
#include "splatfuse/geometry/pose.hpp"

namespace splatfuse {

struct AteResult {
  double rmse = 0.0;
  double mean = 0.0;
  double median = 0.0;
};

enum class AteAlignment {
  kNone,        // compare positions as-is
  kRigid,       // Umeyama with unit scale (metric sequences)
  kSimilarity,  // Umeyama with scale (monocular sequences)
};

// Absolute trajectory error of est vs gt positions after alignment.
// Requires equal lengths >= 3.
AteResult ate_rmse(const std::vector<Pose>& est, const std::vector<Pose>& gt,
                   AteAlignment alignment = AteAlignment::kRigid);

// Mean |est - gt| over pixels where gt is finite, positive and (when
// max_range > 0) gt <= max_range. Throws DomainError("empty mask") when
// nothing qualifies.
double depth_l1(const GridD& est, const GridD& gt, double max_range = -1.0);

// 10*log10(1/MSE) over all pixel channels; +infinity when identical.
double psnr(const GridV3& a, const GridV3& b);

// Mean structural similarity, 11x11 Gaussian window, averaged channels.
double ssim(const GridV3& a, const GridV3& b);

}  // namespace splatfuse
