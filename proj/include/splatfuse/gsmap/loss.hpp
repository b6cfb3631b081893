#pragma once

#include "splatfuse/gsmap/render.hpp"

namespace splatfuse {

struct MapLossConfig {
  double lambda_ssim = 0.2;
  double lambda_depth = 0.2;
  double lambda_reg = 10.0;
  int ssim_window = 11;

  void validate() const {
    if (lambda_ssim < 0.0 || lambda_ssim > 1.0)
      throw ConfigError("MapLossConfig: lambda_ssim must be in [0,1]");
    if (lambda_depth < 0.0 || lambda_reg < 0.0)
      throw ConfigError("MapLossConfig: negative weight");
    if (ssim_window < 3 || ssim_window % 2 == 0)
      throw ConfigError("MapLossConfig: ssim_window must be odd and >= 3");
  }
};

// One supervising view: observed image from the keyframe, fused proxy depth
// as the depth target.
struct Supervisor {
  const Keyframe* kf = nullptr;
  const ProxyDepth* proxy = nullptr;
};

struct LossBreakdown {
  double photometric = 0.0;  // (1-l)*L1 + l*(1-ssim), mean over views
  double depth = 0.0;        // lambda_depth * mean depth L1
  double regularizer = 0.0;  // lambda_reg * sum of scale-isotropy penalties
  double total = 0.0;
};

// Composite map loss over the supervising views, mean-normalized per view
// so the lambda weights are resolution-independent. When `gradients` is
// non-null it is resized and filled with analytic gradients for every
// Gaussian parameter.
LossBreakdown map_loss(const GaussianMap& map, const Camera& camera,
                       const std::vector<Supervisor>& views,
                       const MapLossConfig& config,
                       MapGradients* gradients = nullptr);

struct MapOptimConfig {
  double lr_mean = 1e-3;
  double lr_rotation = 1e-3;
  double lr_log_scales = 5e-3;
  double lr_opacity = 5e-2;
  double lr_color = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;  // drives the per-iteration view choice
};

struct MapOptimResult {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> batch_losses;
};

// First-order stochastic optimization: each iteration renders one seeded
// random supervising view and takes an Adam step with per-parameter-group
// step sizes. Rotations move in their tangent space and are
// re-orthonormalized. Throws on non-finite loss, naming the offending
// Gaussian.
MapOptimResult optimize_map(GaussianMap& map, const Camera& camera,
                            const std::vector<Supervisor>& views,
                            const MapLossConfig& loss_config,
                            const MapOptimConfig& optim_config, int iters);

}  // namespace splatfuse
