#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "splatfuse/gsmap/loss.hpp"

using namespace splatfuse;

namespace {

Camera tiny_camera() {
  Camera c;
  c.fx = 15.0;
  c.fy = 15.0;
  c.cx = 7.5;
  c.cy = 5.5;
  c.width = 16;
  c.height = 12;
  return c;
}

GaussianMap random_map(std::mt19937_64& rng, int n, double spread = 0.8,
                       double z_lo = 1.2, double z_hi = 2.2) {
  std::uniform_real_distribution<double> ux(-spread, spread);
  std::uniform_real_distribution<double> uz(z_lo, z_hi);
  std::uniform_real_distribution<double> uc(0.1, 0.9);
  std::uniform_real_distribution<double> us(-2.6, -1.8);
  std::uniform_real_distribution<double> uo(-0.5, 1.5);
  std::uniform_real_distribution<double> ut(-0.3, 0.3);
  GaussianMap map;
  for (int i = 0; i < n; ++i) {
    Gaussian g;
    g.mean = Vec3(ux(rng) * 0.4, ux(rng) * 0.3, uz(rng));
    Vec3 axis(ut(rng), ut(rng), ut(rng));
    g.rotation = so3_exp(axis);
    g.log_scales = Vec3(us(rng), us(rng), us(rng));
    g.opacity_logit = uo(rng);
    g.color = Vec3(uc(rng), uc(rng), uc(rng));
    g.anchor_kf = 0;
    map.gaussians.push_back(g);
  }
  map.rebuild_anchor_index();
  return map;
}

// Independent compositing pass over the projected list: every Gaussian is
// tested at every pixel (no bounding boxes), alpha = opacity * exp(-q/2)
// wherever the squared Mahalanobis distance q stays under the 3-sigma
// cutoff.
RenderResult oracle_render(const GaussianMap& map, const Camera& camera,
                           const Pose& pose) {
  const std::vector<Projected> projected =
      project_gaussians(map, camera, pose);
  RenderResult out;
  out.color = GridV3(camera.width, camera.height, Vec3::Zero());
  out.depth = GridD(camera.width, camera.height, 0.0);
  out.alpha = GridD(camera.width, camera.height, 0.0);
  for (int y = 0; y < camera.height; ++y)
    for (int x = 0; x < camera.width; ++x) {
      double transmittance = 1.0;
      Vec3 color = Vec3::Zero();
      double depth = 0.0, alpha = 0.0;
      for (const Projected& p : projected) {
        const Vec2 d = Vec2(x, y) - p.center;
        const double q = d.dot(p.inv_cov2d * d);
        if (q > 9.0) continue;
        const double a = p.opacity * std::exp(-0.5 * q);
        const double w = a * transmittance;
        color += w * p.color;
        depth += w * p.z;
        alpha += w;
        transmittance *= 1.0 - a;
      }
      out.color.at(x, y) = color;
      out.depth.at(x, y) = depth;
      out.alpha.at(x, y) = alpha;
    }
  return out;
}

struct SupervisorData {
  Keyframe kf;
  ProxyDepth proxy;
  Supervisor view() const { return {&kf, &proxy}; }
};

// Supervision target equal to the map's own render, optionally with the
// depth channel shifted.
SupervisorData self_supervisor(const GaussianMap& map, const Camera& camera,
                               double depth_offset = 0.0) {
  SupervisorData data;
  const RenderResult r = render(map, camera, Pose{});
  data.kf.id = 0;
  data.kf.image = r.color;
  data.kf.inv_depth = GridD(camera.width, camera.height, 0.5);
  data.kf.mono_prior = GridD(camera.width, camera.height, 2.0);
  data.proxy.depth = r.depth;
  for (std::size_t i = 0; i < data.proxy.depth.size(); ++i)
    data.proxy.depth[i] += depth_offset;
  data.proxy.valid = GridU8(camera.width, camera.height, 1);
  return data;
}

}  // namespace

TEST_CASE("splats initialize on the unprojected proxy surface") {
  Camera camera;
  camera.fx = 100.0;
  camera.fy = 100.0;
  camera.cx = 50.0;
  camera.cy = 50.0;
  camera.width = 101;
  camera.height = 101;

  Keyframe kf;
  kf.id = 4;
  kf.image = GridV3(101, 101, Vec3(0.2, 0.4, 0.6));
  kf.image.at(50, 50) = Vec3(0.9, 0.1, 0.3);
  ProxyDepth proxy;
  proxy.depth = GridD(101, 101, 1.0);
  proxy.valid = GridU8(101, 101, 1);

  const auto splats = init_gaussians(kf, proxy, camera, 10);
  CHECK(splats.size() == 121);  // 11 x 11 sample grid
  bool found_center = false;
  for (const Gaussian& g : splats) {
    CHECK(g.anchor_kf == 4);
    CHECK(g.opacity() == 0.5);
    // Isotropic footprint of one strided pixel at depth 1.
    CHECK(g.scales().x() == doctest::Approx(10.0 / 100.0).epsilon(1e-12));
    CHECK(g.scales().x() == g.scales().y());
    CHECK(g.scales().y() == g.scales().z());
    if ((g.mean - Vec3(0, 0, 1)).norm() < 1e-12) {
      found_center = true;
      CHECK(g.color == Vec3(0.9, 0.1, 0.3));
    }
  }
  CHECK(found_center);
}

TEST_CASE("splat count follows the stride grid and skips invalid depth") {
  Camera camera;
  camera.fx = 80.0;
  camera.fy = 80.0;
  camera.cx = 49.5;
  camera.cy = 49.5;
  camera.width = 100;
  camera.height = 100;
  Keyframe kf;
  kf.id = 0;
  kf.image = GridV3(100, 100, Vec3(0.5, 0.5, 0.5));
  ProxyDepth proxy;
  proxy.depth = GridD(100, 100, 2.0);
  proxy.valid = GridU8(100, 100, 1);

  CHECK(init_gaussians(kf, proxy, camera, 2).size() == 2500);

  proxy.depth.at(0, 0) = 0.0;    // sampled, invalid
  proxy.depth.at(2, 0) = -1.0;   // sampled, invalid
  proxy.depth.at(1, 0) = -5.0;   // not on the stride grid, irrelevant
  CHECK(init_gaussians(kf, proxy, camera, 2).size() == 2498);
}

TEST_CASE("a single opaque splat renders its own color and depth") {
  GaussianMap map;
  Gaussian g;
  g.mean = Vec3(0.0, 0.0, 2.0);
  g.log_scales = Vec3::Constant(std::log(0.5));
  g.opacity_logit = 20.0;
  g.color = Vec3(0.8, 0.3, 0.1);
  g.anchor_kf = 0;
  map.gaussians.push_back(g);
  map.rebuild_anchor_index();

  const Camera camera = tiny_camera();
  const RenderResult r = render(map, camera, Pose{});
  const int cx = 7, cy = 5;  // nearest pixel to the projected center
  CHECK((r.color.at(cx, cy) - g.color).norm() < 1e-6);
  CHECK(r.depth.at(cx, cy) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(r.alpha.at(cx, cy) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("an opaque front splat occludes the one behind it") {
  GaussianMap map;
  Gaussian front;
  front.mean = Vec3(0.0, 0.0, 1.5);
  front.log_scales = Vec3::Constant(std::log(0.4));
  front.opacity_logit = 20.0;
  front.color = Vec3(1.0, 0.0, 0.0);
  front.anchor_kf = 0;
  Gaussian back = front;
  back.mean = Vec3(0.0, 0.0, 3.0);
  back.color = Vec3(0.0, 0.0, 1.0);
  // Insert back-most first so the renderer has to sort by depth.
  map.gaussians.push_back(back);
  map.gaussians.push_back(front);
  map.rebuild_anchor_index();

  const RenderResult r = render(map, tiny_camera(), Pose{});
  CHECK((r.color.at(7, 5) - Vec3(1.0, 0.0, 0.0)).norm() < 1e-6);
  CHECK(r.depth.at(7, 5) == doctest::Approx(1.5).epsilon(1e-6));
}

TEST_CASE("rendering matches the brute-force compositing oracle") {
  std::mt19937_64 rng(47);
  const Camera camera = tiny_camera();
  for (int trial = 0; trial < 5; ++trial) {
    const GaussianMap map = random_map(rng, 10);
    Pose pose;
    pose.translation = Vec3(0.02 * trial, -0.01 * trial, 0.0);
    const RenderResult got = render(map, camera, pose);
    const RenderResult want = oracle_render(map, camera, pose);
    for (int y = 0; y < camera.height; ++y)
      for (int x = 0; x < camera.width; ++x) {
        CHECK((got.color.at(x, y) - want.color.at(x, y)).norm() < 1e-10);
        CHECK(std::abs(got.depth.at(x, y) - want.depth.at(x, y)) < 1e-10);
        CHECK(std::abs(got.alpha.at(x, y) - want.alpha.at(x, y)) < 1e-10);
      }
  }
}

TEST_CASE("accumulated weights never exceed one and equal alpha") {
  std::mt19937_64 rng(53);
  const Camera camera = tiny_camera();
  const GaussianMap map = random_map(rng, 20);
  const RenderResult r = render(map, camera, Pose{});
  const RenderResult oracle = oracle_render(map, camera, Pose{});
  for (std::size_t i = 0; i < r.alpha.size(); ++i) {
    CHECK(r.alpha[i] >= 0.0);
    CHECK(r.alpha[i] <= 1.0 + 1e-12);
    CHECK(r.alpha[i] == doctest::Approx(oracle.alpha[i]).epsilon(1e-10));
  }
}

TEST_CASE("rendering is equivariant under a world translation") {
  std::mt19937_64 rng(59);
  const Camera camera = tiny_camera();
  const GaussianMap map = random_map(rng, 12);
  const RenderResult base = render(map, camera, Pose{});

  const Vec3 t(3.0, -2.0, 5.0);
  GaussianMap moved = map;
  for (Gaussian& g : moved.gaussians) g.mean += t;
  Pose pose;
  pose.translation = t;
  const RenderResult shifted = render(moved, camera, pose);
  for (int y = 0; y < camera.height; ++y)
    for (int x = 0; x < camera.width; ++x) {
      CHECK((base.color.at(x, y) - shifted.color.at(x, y)).norm() < 1e-9);
      CHECK(std::abs(base.depth.at(x, y) - shifted.depth.at(x, y)) < 1e-9);
    }
}

TEST_CASE("analytic loss gradients match central finite differences") {
  std::mt19937_64 rng(61);
  const Camera camera = tiny_camera();
  GaussianMap map = random_map(rng, 6);
  // Targets differ from the render everywhere so the L1 terms stay away
  // from their non-differentiable zero crossings.
  SupervisorData data = self_supervisor(map, camera, 0.3);
  std::uniform_real_distribution<double> uc(0.05, 0.2);
  for (std::size_t i = 0; i < data.kf.image.size(); ++i)
    data.kf.image[i] += Vec3(uc(rng), uc(rng), uc(rng));
  const std::vector<Supervisor> views{data.view()};

  MapLossConfig config;
  MapGradients grad;
  map_loss(map, camera, views, config, &grad);

  const double h = 1e-5;
  const auto loss_at = [&]() {
    return map_loss(map, camera, views, config).total;
  };
  std::uniform_int_distribution<int> ug(0, 5), uk(0, 2);
  int probes = 0;
  std::mt19937_64 probe_rng(67);
  while (probes < 20) {
    const int gi = ug(probe_rng);
    const int axis = uk(probe_rng);
    const int group = static_cast<int>(probe_rng() % 5);
    Gaussian& g = map.gaussians[gi];
    double analytic = 0.0, fd = 0.0;
    switch (group) {
      case 0: {
        const double save = g.mean[axis];
        g.mean[axis] = save + h;
        const double hi = loss_at();
        g.mean[axis] = save - h;
        const double lo = loss_at();
        g.mean[axis] = save;
        fd = (hi - lo) / (2.0 * h);
        analytic = grad.mean[gi][axis];
        break;
      }
      case 1: {
        const Mat3 save = g.rotation;
        Vec3 step = Vec3::Zero();
        step[axis] = h;
        g.rotation = save * so3_exp(step);
        const double hi = loss_at();
        g.rotation = save * so3_exp(-step);
        const double lo = loss_at();
        g.rotation = save;
        fd = (hi - lo) / (2.0 * h);
        analytic = grad.rotation[gi][axis];
        break;
      }
      case 2: {
        const double save = g.log_scales[axis];
        g.log_scales[axis] = save + h;
        const double hi = loss_at();
        g.log_scales[axis] = save - h;
        const double lo = loss_at();
        g.log_scales[axis] = save;
        fd = (hi - lo) / (2.0 * h);
        analytic = grad.log_scales[gi][axis];
        break;
      }
      case 3: {
        const double save = g.opacity_logit;
        g.opacity_logit = save + h;
        const double hi = loss_at();
        g.opacity_logit = save - h;
        const double lo = loss_at();
        g.opacity_logit = save;
        fd = (hi - lo) / (2.0 * h);
        analytic = grad.opacity_logit[gi];
        break;
      }
      default: {
        const double save = g.color[axis];
        g.color[axis] = save + h;
        const double hi = loss_at();
        g.color[axis] = save - h;
        const double lo = loss_at();
        g.color[axis] = save;
        fd = (hi - lo) / (2.0 * h);
        analytic = grad.color[gi][axis];
        break;
      }
    }
    const double denom = std::max(std::abs(fd), 1e-3);
    CHECK(std::abs(analytic - fd) / denom < 1e-3);
    ++probes;
  }
}

TEST_CASE("perfect reconstruction has zero data loss") {
  std::mt19937_64 rng(71);
  const Camera camera = tiny_camera();
  GaussianMap map = random_map(rng, 8);
  // Isotropic splats: the scale regularizer vanishes too.
  for (Gaussian& g : map.gaussians)
    g.log_scales = Vec3::Constant(g.log_scales.x());
  const SupervisorData data = self_supervisor(map, camera);
  const LossBreakdown loss =
      map_loss(map, camera, {data.view()}, MapLossConfig{});
  CHECK(loss.photometric < 1e-12);
  CHECK(loss.depth < 1e-12);
  CHECK(loss.regularizer < 1e-12);
  CHECK(loss.total < 1e-12);
}

TEST_CASE("a uniform one-meter depth offset costs exactly lambda_depth") {
  std::mt19937_64 rng(73);
  const Camera camera = tiny_camera();
  GaussianMap map = random_map(rng, 8);
  for (Gaussian& g : map.gaussians)
    g.log_scales = Vec3::Constant(g.log_scales.x());
  const SupervisorData data = self_supervisor(map, camera, 1.0);
  const LossBreakdown loss =
      map_loss(map, camera, {data.view()}, MapLossConfig{});
  CHECK(loss.photometric < 1e-12);
  CHECK(loss.depth == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(loss.total == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("anisotropy is penalized through the regularizer") {
  GaussianMap map;
  Gaussian g;
  g.mean = Vec3(0, 0, 100.0);  // far away: photometric and depth stay zero
  g.log_scales = Vec3(std::log(0.1), std::log(0.1), std::log(0.4));
  g.anchor_kf = 0;
  g.opacity_logit = -30.0;
  map.gaussians.push_back(g);
  map.rebuild_anchor_index();
  const Camera camera = tiny_camera();
  const SupervisorData data = self_supervisor(map, camera);

  MapLossConfig config;
  const LossBreakdown loss = map_loss(map, camera, {data.view()}, config);
  // lambda_reg * sum_k (s_k - mean(s))^2 for scales (0.1, 0.1, 0.4).
  const double mean_s = 0.2;
  const double expect =
      config.lambda_reg * (2.0 * (0.1 - mean_s) * (0.1 - mean_s) +
                           (0.4 - mean_s) * (0.4 - mean_s));
  CHECK(loss.regularizer == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("optimization does not regress from a perfect start") {
  std::mt19937_64 rng(79);
  const Camera camera = tiny_camera();
  GaussianMap map = random_map(rng, 8);
  for (Gaussian& g : map.gaussians)
    g.log_scales = Vec3::Constant(g.log_scales.x());
  const SupervisorData data = self_supervisor(map, camera);
  const MapOptimResult result = optimize_map(
      map, camera, {data.view()}, MapLossConfig{}, MapOptimConfig{}, 50);
  CHECK(result.initial_loss < 1e-12);
  CHECK(result.final_loss < 1e-9);
}

TEST_CASE("color-only optimization recovers the target palette") {
  std::mt19937_64 rng(83);
  const Camera camera = tiny_camera();
  GaussianMap map = random_map(rng, 8);
  const SupervisorData target = self_supervisor(map, camera);

  GaussianMap wrong = map;
  std::uniform_real_distribution<double> uc(-0.25, 0.25);
  for (Gaussian& g : wrong.gaussians)
    g.color += Vec3(uc(rng), uc(rng), uc(rng));

  MapOptimConfig optim;
  optim.lr_mean = 0.0;
  optim.lr_rotation = 0.0;
  optim.lr_log_scales = 0.0;
  optim.lr_opacity = 0.0;
  optim.lr_color = 2e-2;
  optimize_map(wrong, camera, {target.view()}, MapLossConfig{}, optim, 200);

  const RenderResult got = render(wrong, camera, Pose{});
  double l1 = 0.0;
  for (std::size_t i = 0; i < got.color.size(); ++i)
    l1 += (got.color[i] - target.kf.image[i]).cwiseAbs().sum() / 3.0;
  l1 /= static_cast<double>(got.color.size());
  CHECK(l1 < 0.01);
}

TEST_CASE("depth supervision pulls the surface to the proxy") {
  std::mt19937_64 rng(89);
  const Camera camera = tiny_camera();
  GaussianMap map = random_map(rng, 10);
  for (Gaussian& g : map.gaussians) {
    g.color = Vec3(0.5, 0.5, 0.5);  // textureless: photometric is blind
    g.opacity_logit = 3.0;
  }
  SupervisorData data = self_supervisor(map, camera, 0.5);

  const auto depth_error = [&](const GaussianMap& m) {
    const RenderResult r = render(m, camera, Pose{});
    double err = 0.0;
    for (std::size_t i = 0; i < r.depth.size(); ++i)
      err += std::abs(r.depth[i] - data.proxy.depth[i]);
    return err / static_cast<double>(r.depth.size());
  };

  MapOptimConfig optim;
  optim.lr_mean = 5e-3;
  optim.lr_rotation = 0.0;
  optim.lr_log_scales = 0.0;
  optim.lr_opacity = 0.0;
  optim.lr_color = 0.0;

  GaussianMap with = map, without = map;
  MapLossConfig on;  // lambda_depth = 0.2
  MapLossConfig off;
  off.lambda_depth = 0.0;
  optimize_map(with, camera, {data.view()}, on, optim, 150);
  optimize_map(without, camera, {data.view()}, off, optim, 150);
  CHECK(depth_error(with) < depth_error(without));
}

TEST_CASE("deformation with no-op updates is bit-identical") {
  std::mt19937_64 rng(97);
  GaussianMap map = random_map(rng, 10);
  const GaussianMap before = map;
  std::map<int, std::pair<Pose, Pose>> updates;
  Pose p;
  p.translation = Vec3(1, 2, 3);
  p.rotation = so3_exp(Vec3(0.1, -0.2, 0.3));
  updates[0] = {p, p};
  deform_map(map, updates);
  for (std::size_t i = 0; i < map.gaussians.size(); ++i) {
    CHECK(map.gaussians[i].mean == before.gaussians[i].mean);
    CHECK(map.gaussians[i].rotation == before.gaussians[i].rotation);
  }
}

TEST_CASE("a pure translation update shifts anchored splats exactly") {
  std::mt19937_64 rng(101);
  GaussianMap map = random_map(rng, 6);
  map.gaussians[3].anchor_kf = 1;  // different anchor: must stay put
  map.rebuild_anchor_index();
  const GaussianMap before = map;

  Pose old_pose;  // identity
  Pose new_pose;
  new_pose.translation = Vec3(0, 0, 1);
  std::map<int, std::pair<Pose, Pose>> updates{{0, {old_pose, new_pose}}};
  deform_map(map, updates);

  for (std::size_t i = 0; i < map.gaussians.size(); ++i) {
    const Vec3 expect = before.gaussians[i].mean +
                        (i == 3 ? Vec3::Zero() : Vec3(0, 0, 1));
    CHECK((map.gaussians[i].mean - expect).norm() == 0.0);
    CHECK(map.gaussians[i].rotation == before.gaussians[i].rotation);
  }
}

TEST_CASE("deformed map re-renders identically from the corrected pose") {
  std::mt19937_64 rng(103);
  const Camera camera = tiny_camera();
  const GaussianMap map = random_map(rng, 12);
  const RenderResult base = render(map, camera, Pose{});

  Pose new_pose;
  new_pose.rotation = so3_exp(Vec3(0.0, 0.0, M_PI / 2.0));
  new_pose.translation = Vec3(0.4, -0.2, 0.1);
  GaussianMap deformed = map;
  deform_map(deformed, {{0, {Pose{}, new_pose}}});

  const RenderResult moved = render(deformed, camera, new_pose);
  for (int y = 0; y < camera.height; ++y)
    for (int x = 0; x < camera.width; ++x) {
      CHECK((base.color.at(x, y) - moved.color.at(x, y)).norm() < 1e-6);
      CHECK(std::abs(base.depth.at(x, y) - moved.depth.at(x, y)) < 1e-6);
    }
}

TEST_CASE("deformation is invertible") {
  std::mt19937_64 rng(107);
  GaussianMap map = random_map(rng, 10);
  const GaussianMap before = map;
  Pose p;
  p.rotation = so3_exp(Vec3(0.2, 0.1, -0.3));
  p.translation = Vec3(0.5, -1.0, 2.0);
  deform_map(map, {{0, {Pose{}, p}}});
  deform_map(map, {{0, {p, Pose{}}}});
  for (std::size_t i = 0; i < map.gaussians.size(); ++i) {
    CHECK((map.gaussians[i].mean - before.gaussians[i].mean).norm() < 1e-12);
    CHECK((map.gaussians[i].rotation - before.gaussians[i].rotation).norm() <
          1e-12);
  }
}

TEST_CASE("unanchored splats cannot be deformed") {
  std::mt19937_64 rng(109);
  GaussianMap map = random_map(rng, 3);
  map.gaussians[1].anchor_kf = -1;
  CHECK_THROWS_WITH_AS(deform_map(map, {{0, {Pose{}, Pose{}}}}),
                       doctest::Contains("dangling anchor"), DomainError);
}

TEST_CASE("map snapshots round-trip through disk") {
  std::mt19937_64 rng(113);
  const GaussianMap map = random_map(rng, 25);
  const auto dir = std::filesystem::temp_directory_path();
  const std::string path_a = (dir / "splatfuse_test_a.cspl").string();
  const std::string path_b = (dir / "splatfuse_test_b.cspl").string();

  save_map(map, path_a);
  const GaussianMap loaded = load_map(path_a);
  REQUIRE(loaded.gaussians.size() == map.gaussians.size());
  for (std::size_t i = 0; i < map.gaussians.size(); ++i) {
    const Gaussian& a = map.gaussians[i];
    const Gaussian& b = loaded.gaussians[i];
    CHECK((a.mean - b.mean).norm() < 1e-5);
    CHECK((a.rotation - b.rotation).norm() < 1e-5);
    CHECK((a.log_scales - b.log_scales).norm() < 1e-5);
    CHECK(std::abs(a.opacity_logit - b.opacity_logit) < 1e-5);
    CHECK((a.color - b.color).norm() < 1e-5);
    CHECK(a.anchor_kf == b.anchor_kf);
  }
  CHECK(loaded.anchor_index.at(0).size() == map.gaussians.size());

  // Header is magic + version (u32) + count (u64); each record is 14 f32
  // fields plus a u32 anchor.
  CHECK(std::filesystem::file_size(path_a) == 16 + 25 * 60);
  std::ifstream fa(path_a, std::ios::binary);
  char magic[4] = {};
  fa.read(magic, 4);
  CHECK(std::string(magic, 4) == "CSPL");

  // Quantization happened in the first save: a second cycle preserves every
  // f32-representable field exactly.
  save_map(loaded, path_b);
  const GaussianMap twice = load_map(path_b);
  for (std::size_t i = 0; i < twice.gaussians.size(); ++i) {
    CHECK(twice.gaussians[i].mean == loaded.gaussians[i].mean);
    CHECK(twice.gaussians[i].log_scales == loaded.gaussians[i].log_scales);
    CHECK(twice.gaussians[i].opacity_logit ==
          loaded.gaussians[i].opacity_logit);
    CHECK(twice.gaussians[i].color == loaded.gaussians[i].color);
    CHECK((twice.gaussians[i].rotation - loaded.gaussians[i].rotation)
              .norm() < 1e-6);
  }

  std::filesystem::remove(path_a);
  std::filesystem::remove(path_b);
}

TEST_CASE("corrupt map files are rejected") {
  const auto path =
      (std::filesystem::temp_directory_path() / "splatfuse_bad.cspl")
          .string();
  std::ofstream(path, std::ios::binary) << "JUNKJUNKJUNKJUNK";
  CHECK_THROWS_WITH_AS(load_map(path), doctest::Contains("bad magic"),
                       DomainError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_map("/nonexistent/none.cspl"), DomainError);
}

TEST_CASE("point cloud export writes one line per splat") {
  std::mt19937_64 rng(127);
  const GaussianMap map = random_map(rng, 17);
  const auto path =
      (std::filesystem::temp_directory_path() / "splatfuse_points.txt")
          .string();
  save_point_cloud(map, path);
  std::ifstream in(path);
  int lines = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++lines;
  CHECK(lines == 17);
  std::filesystem::remove(path);
}
