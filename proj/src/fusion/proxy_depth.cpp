#include "splatfuse/fusion/proxy_depth.hpp"

#include "splatfuse/kernels/kernels.hpp"

namespace splatfuse {

ProxyDepth fuse_proxy_depth(const GridD& mv_depth, const GridD& mono_prior,
                            double theta, double gamma,
                            const ConfidenceMap& weights) {
  if (theta <= 0.0) throw DomainError("fuse_proxy_depth: theta must be > 0");
  if (mv_depth.width() != mono_prior.width() ||
      mv_depth.height() != mono_prior.height() ||
      mv_depth.width() != weights.w_mv.width() ||
      mv_depth.height() != weights.w_mv.height())
    throw DomainError("fuse_proxy_depth: grid size mismatch");

  const std::size_t n = mv_depth.size();
  ProxyDepth out;
  out.weights = weights;
  out.valid = GridU8(mv_depth.width(), mv_depth.height());
  out.depth = GridD(mv_depth.width(), mv_depth.height());

  GridD aligned(mv_depth.width(), mv_depth.height());
  kernels::scaled_prior_depth(aligned.data(), out.valid.data(),
                              mono_prior.data(), theta, gamma, n);
  kernels::blend(out.depth.data(), weights.w_mv.data(), mv_depth.data(),
                 aligned.data(), n);
  // Degenerate prior pixels take pure multi-view depth.
  for (std::size_t i = 0; i < n; ++i)
    if (!out.valid[i]) out.depth[i] = mv_depth[i];
  return out;
}

}  // namespace splatfuse
