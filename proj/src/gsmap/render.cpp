#include "splatfuse/gsmap/render.hpp"

#include <algorithm>
#include <cmath>

namespace splatfuse {

namespace {

constexpr double kCutoff = 9.0;  // squared Mahalanobis radius (3 sigma)

// d(project_jacobian)/d(point_k), nonzero entries only.
Mat23 proj_jacobian_derivative(const Camera& cam, const Vec3& p, int k) {
  const double inv_z = 1.0 / p.z();
  const double inv_z2 = inv_z * inv_z;
  Mat23 d = Mat23::Zero();
  if (k == 0) {
    d(0, 2) = -cam.fx * inv_z2;
  } else if (k == 1) {
    d(1, 2) = -cam.fy * inv_z2;
  } else {
    d(0, 0) = -cam.fx * inv_z2;
    d(0, 2) = 2.0 * cam.fx * p.x() * inv_z2 * inv_z;
    d(1, 1) = -cam.fy * inv_z2;
    d(1, 2) = 2.0 * cam.fy * p.y() * inv_z2 * inv_z;
  }
  return d;
}

}  // namespace

std::vector<Projected> project_gaussians(const GaussianMap& map,
                                         const Camera& camera,
                                         const Pose& pose) {
  const Pose world_to_cam = pose.inverse();
  const Mat3& w = world_to_cam.rotation;

  std::vector<Projected> out;
  out.reserve(map.gaussians.size());
  for (std::size_t i = 0; i < map.gaussians.size(); ++i) {
    const Gaussian& g = map.gaussians[i];
    const Vec3 pc = world_to_cam.apply(g.mean);
    if (!(pc.z() > 0.0)) continue;

    Projected p;
    p.index = i;
    p.z = pc.z();
    p.center = camera.project(pc);
    const Mat23 j = camera.project_jacobian(pc);
    const Eigen::Matrix<double, 2, 3> b = j * w;
    p.cov2d = b * g.covariance() * b.transpose();

    const double det =
        p.cov2d(0, 0) * p.cov2d(1, 1) - p.cov2d(0, 1) * p.cov2d(1, 0);
    if (!(det > 1e-300) || !std::isfinite(det)) continue;
    p.inv_cov2d << p.cov2d(1, 1), -p.cov2d(0, 1), -p.cov2d(1, 0), p.cov2d(0, 0);
    p.inv_cov2d /= det;

    // lambda_max of the 2x2 footprint bounds the cutoff radius.
    const double mid = (p.cov2d(0, 0) + p.cov2d(1, 1)) / 2.0;
    const double half = (p.cov2d(0, 0) - p.cov2d(1, 1)) / 2.0;
    const double lmax =
        mid + std::sqrt(half * half + p.cov2d(0, 1) * p.cov2d(0, 1));
    const double radius = 3.0 * std::sqrt(std::max(lmax, 0.0)) + 1e-9;

    p.x0 = std::max(0, static_cast<int>(std::ceil(p.center.x() - radius)));
    p.x1 = std::min(camera.width - 1,
                    static_cast<int>(std::floor(p.center.x() + radius)));
    p.y0 = std::max(0, static_cast<int>(std::ceil(p.center.y() - radius)));
    p.y1 = std::min(camera.height - 1,
                    static_cast<int>(std::floor(p.center.y() + radius)));
    if (p.x0 > p.x1 || p.y0 > p.y1) continue;

    p.opacity = g.opacity();
    p.color = g.color;
    out.push_back(std::move(p));
  }

  std::sort(out.begin(), out.end(), [](const Projected& a, const Projected& b) {
    return a.z != b.z ? a.z < b.z : a.index < b.index;
  });
  return out;
}

RenderResult render(const GaussianMap& map, const Camera& camera,
                    const Pose& pose) {
  camera.validate();
  const std::vector<Projected> proj = project_gaussians(map, camera, pose);

  RenderResult r;
  r.color = GridV3(camera.width, camera.height, Vec3::Zero());
  r.depth = GridD(camera.width, camera.height, 0.0);
  r.alpha = GridD(camera.width, camera.height, 0.0);

  for (int y = 0; y < camera.height; ++y)
    for (int x = 0; x < camera.width; ++x) {
      Vec3 color = Vec3::Zero();
      double depth = 0.0, alpha = 0.0, transmittance = 1.0;
      for (const Projected& p : proj) {
        if (x < p.x0 || x > p.x1 || y < p.y0 || y > p.y1) continue;
        const Vec2 delta(x - p.center.x(), y - p.center.y());
        const double q = delta.dot(p.inv_cov2d * delta);
        if (q > kCutoff) continue;
        const double a = p.opacity * std::exp(-0.5 * q);
        const double weight = a * transmittance;
        color += weight * p.color;
        depth += weight * p.z;
        alpha += weight;
        transmittance *= 1.0 - a;
      }
      r.color.at(x, y) = color;
      r.depth.at(x, y) = depth;
      r.alpha.at(x, y) = alpha;
    }
  return r;
}

MapGradients render_backward(const GaussianMap& map, const Camera& camera,
                             const Pose& pose, const GridV3& d_color,
                             const GridD& d_depth, const GridD& d_alpha) {
  camera.validate();
  if (d_color.width() != camera.width || d_color.height() != camera.height ||
      d_depth.width() != camera.width || d_depth.height() != camera.height ||
      d_alpha.width() != camera.width || d_alpha.height() != camera.height)
    throw DomainError("render_backward: gradient grid size mismatch");

  const std::vector<Projected> proj = project_gaussians(map, camera, pose);
  MapGradients grads(map.gaussians.size());

  // Screen-space accumulators per projected Gaussian.
  std::vector<Vec2> g_center(proj.size(), Vec2::Zero());
  std::vector<Mat2> g_cov(proj.size(), Mat2::Zero());
  std::vector<double> g_z(proj.size(), 0.0);
  std::vector<double> g_opacity(proj.size(), 0.0);

  struct Hit {
    std::size_t pi;  // into proj
    double alpha;
    double gauss;  // exp(-q/2)
    double t;      // transmittance in front of this hit
    Vec2 mdelta;   // inv_cov2d * delta
  };
  std::vector<Hit> hits;

  for (int y = 0; y < camera.height; ++y)
    for (int x = 0; x < camera.width; ++x) {
      hits.clear();
      double transmittance = 1.0;
      for (std::size_t k = 0; k < proj.size(); ++k) {
        const Projected& p = proj[k];
        if (x < p.x0 || x > p.x1 || y < p.y0 || y > p.y1) continue;
        const Vec2 delta(x - p.center.x(), y - p.center.y());
        const Vec2 mdelta = p.inv_cov2d * delta;
        const double q = delta.dot(mdelta);
        if (q > kCutoff) continue;
        const double gauss = std::exp(-0.5 * q);
        const double a = p.opacity * gauss;
        hits.push_back({k, a, gauss, transmittance, mdelta});
        transmittance *= 1.0 - a;
      }
      if (hits.empty()) continue;

      const Vec3& gc = d_color.at(x, y);
      const double gd = d_depth.at(x, y);
      const double ga = d_alpha.at(x, y);

      // Back-to-front recurrences avoid dividing by (1 - alpha).
      Vec3 rec_color = Vec3::Zero();
      double rec_depth = 0.0, rec_alpha = 0.0;
      for (std::size_t h = hits.size(); h-- > 0;) {
        const Hit& hit = hits[h];
        const Projected& p = proj[hit.pi];
        const double w = hit.alpha * hit.t;

        grads.color[p.index] += w * gc;
        g_z[hit.pi] += w * gd;

        const double d_alpha_j = gc.dot(hit.t * (p.color - rec_color)) +
                                 gd * hit.t * (p.z - rec_depth) +
                                 ga * hit.t * (1.0 - rec_alpha);
        g_opacity[hit.pi] += d_alpha_j * hit.gauss;
        const double d_q = d_alpha_j * (-0.5 * hit.alpha);
        g_center[hit.pi] += d_q * (-2.0 * hit.mdelta);
        g_cov[hit.pi] += d_q * (-(hit.mdelta * hit.mdelta.transpose()));

        rec_color = hit.alpha * p.color + (1.0 - hit.alpha) * rec_color;
        rec_depth = hit.alpha * p.z + (1.0 - hit.alpha) * rec_depth;
        rec_alpha = hit.alpha + (1.0 - hit.alpha) * rec_alpha;
      }
    }

  // Chain screen-space gradients to the 3D parameters.
  const Pose world_to_cam = pose.inverse();
  const Mat3& w = world_to_cam.rotation;
  for (std::size_t k = 0; k < proj.size(); ++k) {
    const Projected& p = proj[k];
    const Gaussian& g = map.gaussians[p.index];
    const Vec3 pc = world_to_cam.apply(g.mean);
    const Mat23 j = camera.project_jacobian(pc);
    const Eigen::Matrix<double, 2, 3> b = j * w;
    const Mat3 sigma3 = g.covariance();
    const Mat3 v = w * sigma3 * w.transpose();

    Vec3 d_pc = j.transpose() * g_center[k];
    d_pc.z() += g_z[k];
    for (int axis = 0; axis < 3; ++axis) {
      const Mat23 dj = proj_jacobian_derivative(camera, pc, axis);
      const Mat2 dcov = dj * v * j.transpose();
      d_pc(axis) += 2.0 * (g_cov[k].array() * dcov.array()).sum();
    }
    grads.mean[p.index] += w.transpose() * d_pc;

    const Mat3 p3 = b.transpose() * g_cov[k] * b;
    const Mat3 q = g.rotation.transpose() * p3 * g.rotation;
    const Vec3 s2 = (2.0 * g.log_scales).array().exp();
    for (int axis = 0; axis < 3; ++axis)
      grads.log_scales[p.index](axis) += 2.0 * s2(axis) * q(axis, axis);
    const Mat3 comm = s2.asDiagonal() * q - q * s2.asDiagonal();
    grads.rotation[p.index] +=
        -2.0 * Vec3(comm(2, 1), comm(0, 2), comm(1, 0));

    const double o = p.opacity;
    grads.opacity_logit[p.index] += g_opacity[k] * o * (1.0 - o);
  }
  return grads;
}

}  // namespace splatfuse
