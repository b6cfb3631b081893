#include "splatfuse/harness/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "splatfuse/core/error.hpp"
#include "splatfuse/core/ssim.hpp"
#include "splatfuse/kernels/kernels.hpp"

namespace splatfuse {

AteResult ate_rmse(const std::vector<Pose>& est, const std::vector<Pose>& gt,
                   AteAlignment alignment) {
  if (est.size() != gt.size())
    throw DomainError("ate_rmse: trajectory length mismatch");
  if (est.size() < 3) throw DomainError("ate_rmse: need at least 3 poses");

  Similarity align;  // identity when alignment is disabled
  if (alignment != AteAlignment::kNone)
    align = umeyama_align(est, gt, alignment == AteAlignment::kSimilarity);

  std::vector<double> errors;
  errors.reserve(est.size());
  double sq_sum = 0.0;
  double sum = 0.0;
  for (size_t i = 0; i < est.size(); ++i) {
    const double e = (align.apply(est[i].translation) - gt[i].translation)
                         .norm();
    errors.push_back(e);
    sq_sum += e * e;
    sum += e;
  }
  std::sort(errors.begin(), errors.end());
  const size_t n = errors.size();
  AteResult result;
  result.rmse = std::sqrt(sq_sum / n);
  result.mean = sum / n;
  result.median = (n % 2 == 1) ? errors[n / 2]
                               : 0.5 * (errors[n / 2 - 1] + errors[n / 2]);
  return result;
}

double depth_l1(const GridD& est, const GridD& gt, double max_range) {
  if (est.width() != gt.width() || est.height() != gt.height())
    throw DomainError("depth_l1: size mismatch");
  GridU8 mask(gt.width(), gt.height(), 0);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const double d = gt[i];
    mask[i] = (std::isfinite(d) && d > 0.0 &&
               (max_range <= 0.0 || d <= max_range))
                  ? 1
                  : 0;
  }
  const kernels::MaskedSum ms =
      kernels::masked_abs_diff_sum(est.data(), gt.data(), mask.data(),
                                   gt.size());
  if (ms.count == 0) throw DomainError("depth_l1: empty mask");
  return ms.sum / static_cast<double>(ms.count);
}

double psnr(const GridV3& a, const GridV3& b) {
  if (a.width() != b.width() || a.height() != b.height())
    throw DomainError("psnr: size mismatch");
  const std::size_t n_ch = a.size() * 3;
  const double mse =
      kernels::squared_diff_sum(reinterpret_cast<const double*>(a.data()),
                                reinterpret_cast<const double*>(b.data()),
                                n_ch) /
      static_cast<double>(n_ch);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const GridV3& a, const GridV3& b) { return ssim_mean(a, b); }

}  // namespace splatfuse
