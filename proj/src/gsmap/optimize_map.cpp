#include <cmath>
#include <random>
#include <string>

#include "splatfuse/gsmap/loss.hpp"

namespace splatfuse {

namespace {

struct AdamState {
  MapGradients m;
  MapGradients v;
  explicit AdamState(std::size_t n) : m(n), v(n) {}
};

double adam_step(double g, double& m, double& v, double lr, double bc1,
                 double bc2, const MapOptimConfig& cfg) {
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
  v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
  return lr * (m / bc1) / (std::sqrt(v / bc2) + cfg.adam_eps);
}

// Best-effort diagnostic for a non-finite loss: the first Gaussian with a
// non-finite parameter or gradient.
std::string offender(const GaussianMap& map, const MapGradients& grads) {
  for (std::size_t j = 0; j < map.gaussians.size(); ++j) {
    const Gaussian& g = map.gaussians[j];
    const bool param_bad = !g.mean.allFinite() || !g.rotation.allFinite() ||
                           !g.log_scales.allFinite() ||
                           !std::isfinite(g.opacity_logit) ||
                           !g.color.allFinite();
    const bool grad_bad = !grads.mean[j].allFinite() ||
                          !grads.rotation[j].allFinite() ||
                          !grads.log_scales[j].allFinite() ||
                          !std::isfinite(grads.opacity_logit[j]) ||
                          !grads.color[j].allFinite();
    if (param_bad || grad_bad) return "gaussian " + std::to_string(j);
  }
  return "no single gaussian identified";
}

}  // namespace

MapOptimResult optimize_map(GaussianMap& map, const Camera& camera,
                            const std::vector<Supervisor>& views,
                            const MapLossConfig& loss_config,
                            const MapOptimConfig& optim_config, int iters) {
  if (iters < 1) throw DomainError("optimize_map: iters must be >= 1");
  if (views.empty()) throw DomainError("optimize_map: no supervising views");

  MapOptimResult result;
  result.initial_loss = map_loss(map, camera, views, loss_config).total;
  result.batch_losses.reserve(iters);

  const std::size_t n = map.gaussians.size();
  AdamState adam(n);
  MapGradients grads(n);
  std::mt19937_64 rng(optim_config.seed);
  std::uniform_int_distribution<std::size_t> pick(0, views.size() - 1);

  for (int it = 1; it <= iters; ++it) {
    const std::vector<Supervisor> batch{views[pick(rng)]};
    const LossBreakdown loss =
        map_loss(map, camera, batch, loss_config, &grads);
    result.batch_losses.push_back(loss.total);
    if (!std::isfinite(loss.total))
      throw DomainError("optimize_map: non-finite loss at iteration " +
                        std::to_string(it) + " (" + offender(map, grads) +
                        ")");

    const double bc1 = 1.0 - std::pow(optim_config.beta1, it);
    const double bc2 = 1.0 - std::pow(optim_config.beta2, it);
    for (std::size_t j = 0; j < n; ++j) {
      Gaussian& g = map.gaussians[j];
      Vec3 rot_update;
      for (int a = 0; a < 3; ++a) {
        g.mean(a) -= adam_step(grads.mean[j](a), adam.m.mean[j](a),
                               adam.v.mean[j](a), optim_config.lr_mean, bc1,
                               bc2, optim_config);
        rot_update(a) = adam_step(grads.rotation[j](a), adam.m.rotation[j](a),
                                  adam.v.rotation[j](a),
                                  optim_config.lr_rotation, bc1, bc2,
                                  optim_config);
        g.log_scales(a) -=
            adam_step(grads.log_scales[j](a), adam.m.log_scales[j](a),
                      adam.v.log_scales[j](a), optim_config.lr_log_scales,
                      bc1, bc2, optim_config);
        g.color(a) -= adam_step(grads.color[j](a), adam.m.color[j](a),
                                adam.v.color[j](a), optim_config.lr_color,
                                bc1, bc2, optim_config);
      }
      g.opacity_logit -= adam_step(
          grads.opacity_logit[j], adam.m.opacity_logit[j],
          adam.v.opacity_logit[j], optim_config.lr_opacity, bc1, bc2,
          optim_config);
      if (rot_update != Vec3::Zero()) {
        g.rotation = g.rotation * so3_exp(-rot_update);
        g.rotation = orthonormalize(g.rotation);
      }
    }
  }

  result.final_loss = map_loss(map, camera, views, loss_config).total;
  return result;
}

}  // namespace splatfuse
