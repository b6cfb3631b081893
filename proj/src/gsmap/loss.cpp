#include "splatfuse/gsmap/loss.hpp"

#include <cmath>

#include "splatfuse/core/ssim.hpp"
#include "splatfuse/kernels/kernels.hpp"

namespace splatfuse {

namespace {

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void accumulate(MapGradients& into, const MapGradients& from) {
  for (std::size_t i = 0; i < into.mean.size(); ++i) {
    into.mean[i] += from.mean[i];
    into.rotation[i] += from.rotation[i];
    into.log_scales[i] += from.log_scales[i];
    into.opacity_logit[i] += from.opacity_logit[i];
    into.color[i] += from.color[i];
  }
}

}  // namespace

LossBreakdown map_loss(const GaussianMap& map, const Camera& camera,
                       const std::vector<Supervisor>& views,
                       const MapLossConfig& config, MapGradients* gradients) {
  if (views.empty()) throw DomainError("map_loss: no supervising views");
  config.validate();
  if (gradients) gradients->resize(map.gaussians.size());

  const double inv_views = 1.0 / static_cast<double>(views.size());
  LossBreakdown out;

  for (const Supervisor& view : views) {
    if (!view.kf || !view.proxy)
      throw DomainError("map_loss: null supervising view");
    const Keyframe& kf = *view.kf;
    if (kf.image.width() != camera.width || kf.image.height() != camera.height)
      throw DomainError("map_loss: image/camera size mismatch");
    if (view.proxy->depth.width() != camera.width ||
        view.proxy->depth.height() != camera.height)
      throw DomainError("map_loss: proxy/camera size mismatch");

    const RenderResult rendered = render(map, camera, kf.pose);
    const std::size_t n_px = rendered.color.size();
    const std::size_t n_ch = 3 * n_px;

    const double l1 =
        kernels::abs_diff_sum(
            reinterpret_cast<const double*>(rendered.color.data()),
            reinterpret_cast<const double*>(kf.image.data()), n_ch) /
        static_cast<double>(n_ch);
    const double depth_l1 =
        kernels::abs_diff_sum(rendered.depth.data(), view.proxy->depth.data(),
                              n_px) /
        static_cast<double>(n_px);

    double ssim_val;
    GridV3 d_ssim;
    if (gradients)
      ssim_val = ssim_with_gradient(rendered.color, kf.image, d_ssim,
                                    config.ssim_window);
    else
      ssim_val = ssim_mean(rendered.color, kf.image, config.ssim_window);

    out.photometric += inv_views * ((1.0 - config.lambda_ssim) * l1 +
                                    config.lambda_ssim * (1.0 - ssim_val));
    out.depth += inv_views * config.lambda_depth * depth_l1;

    if (gradients) {
      GridV3 d_color(camera.width, camera.height, Vec3::Zero());
      GridD d_depth(camera.width, camera.height, 0.0);
      const GridD d_alpha(camera.width, camera.height, 0.0);
      const double w_l1 =
          inv_views * (1.0 - config.lambda_ssim) / static_cast<double>(n_ch);
      const double w_ssim = inv_views * config.lambda_ssim;
      const double w_depth =
          inv_views * config.lambda_depth / static_cast<double>(n_px);
      for (std::size_t i = 0; i < n_px; ++i) {
        for (int c = 0; c < 3; ++c)
          d_color[i](c) =
              w_l1 * sign(rendered.color[i](c) - kf.image[i](c)) -
              w_ssim * d_ssim[i](c);
        d_depth[i] = w_depth * sign(rendered.depth[i] - view.proxy->depth[i]);
      }
      accumulate(*gradients,
                 render_backward(map, camera, kf.pose, d_color, d_depth,
                                 d_alpha));
    }
  }

  // Scale-isotropy penalty per Gaussian: sum of squared deviations of the
  // three scales from their mean.
  double reg = 0.0;
  for (std::size_t j = 0; j < map.gaussians.size(); ++j) {
    const Vec3 s = map.gaussians[j].scales();
    const double mean_s = s.mean();
    const Vec3 dev = s.array() - mean_s;
    reg += dev.squaredNorm();
    if (gradients)
      for (int axis = 0; axis < 3; ++axis)
        gradients->log_scales[j](axis) +=
            config.lambda_reg * 2.0 * dev(axis) * s(axis);
  }
  out.regularizer = config.lambda_reg * reg;
  out.total = out.photometric + out.depth + out.regularizer;
  return out;
}

}  // namespace splatfuse
