#include "splatfuse/harness/sequence.hpp"

#include <cmath>

#include "splatfuse/core/error.hpp"

namespace splatfuse {

FlowEdge make_flow_edge(const Camera& camera, int src_id, int dst_id,
                        const Pose& src_pose, const Pose& dst_pose,
                        const GridD& src_depth, double flow_noise_sigma,
                        const Rect& texture_poor, std::mt19937_64* rng) {
  if (src_depth.width() != camera.width ||
      src_depth.height() != camera.height)
    throw DomainError("make_flow_edge: depth size mismatch");
  FlowEdge edge;
  edge.src = src_id;
  edge.dst = dst_id;
  edge.flow_target = GridV2(camera.width, camera.height, Vec2(-1.0, -1.0));
  const double sigma_base = std::max(flow_noise_sigma, 0.1);
  edge.covariance =
      GridM2(camera.width, camera.height,
             Mat2::Identity() * (sigma_base * sigma_base));
  const Pose dst_from_src = dst_pose.inverse() * src_pose;
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      const double depth = src_depth.at(x, y);
      if (!(depth > 0.0) || !std::isfinite(depth)) continue;
      const Vec3 p_dst =
          dst_from_src.apply(camera.unproject_depth(Vec2(x, y), depth));
      // Texture-poor pixels produce genuinely worse flow; the inflated
      // covariance describes the actual noise there.
      const bool poor = texture_poor.contains(x, y);
      if (poor) edge.covariance.at(x, y) *= 100.0;
      if (!camera.in_front(p_dst)) continue;  // target stays (-1,-1)
      Vec2 target = camera.project(p_dst);
      if (rng && flow_noise_sigma > 0.0) {
        const double sigma = poor ? 10.0 * flow_noise_sigma : flow_noise_sigma;
        target.x() += sigma * gauss(*rng);
        target.y() += sigma * gauss(*rng);
      }
      edge.flow_target.at(x, y) = target;
    }
  }
  return edge;
}

GeneratedSequence generate_sequence(const SyntheticScene& scene,
                                    const SequenceSpec& spec) {
  if (spec.trajectory.empty())
    throw DomainError("generate_sequence: empty trajectory");
  spec.camera.validate();
  if (!spec.init_trajectory.empty() &&
      spec.init_trajectory.size() != spec.trajectory.size())
    throw DomainError("generate_sequence: init trajectory length mismatch");
  if (spec.prior_scale <= 0.0)
    throw DomainError("generate_sequence: prior_scale must be positive");
  if (spec.flow_noise_sigma < 0.0 || spec.prior_noise_sigma < 0.0)
    throw DomainError("generate_sequence: negative noise sigma");
  if (spec.corrupt_factor <= 0.0)
    throw DomainError("generate_sequence: corrupt_factor must be positive");
  if (spec.edge_predecessors < 1)
    throw DomainError("generate_sequence: edge_predecessors must be >= 1");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  GeneratedSequence seq;
  seq.camera = spec.camera;
  const int n = static_cast<int>(spec.trajectory.size());
  seq.frames.reserve(n);

  for (int i = 0; i < n; ++i) {
    Frame frame;
    frame.id = i;
    frame.timestamp = static_cast<double>(i);
    frame.gt_pose = spec.trajectory[i];
    frame.init_pose =
        spec.init_trajectory.empty() ? frame.gt_pose : spec.init_trajectory[i];
    RenderedView view = render_view(scene, spec.camera, frame.gt_pose);
    frame.image = std::move(view.image);
    frame.gt_depth = std::move(view.depth);

    frame.mv_inv_depth = GridD(spec.camera.width, spec.camera.height);
    frame.mono_prior = GridD(spec.camera.width, spec.camera.height);
    for (int y = 0; y < spec.camera.height; ++y) {
      for (int x = 0; x < spec.camera.width; ++x) {
        const double inv_gt = 1.0 / frame.gt_depth.at(x, y);
        double inv_mv = inv_gt;
        if (spec.corrupt_region.contains(x, y)) inv_mv /= spec.corrupt_factor;
        frame.mv_inv_depth.at(x, y) = inv_mv;
        // Inverting the true affine map keeps theta* / (prior) + gamma*
        // equal to the ground-truth inverse depth at zero noise.
        double prior_inv = (inv_gt - spec.prior_shift) / spec.prior_scale;
        if (spec.prior_noise_sigma > 0.0)
          prior_inv += spec.prior_noise_sigma * gauss(rng);
        frame.mono_prior.at(x, y) = 1.0 / std::max(prior_inv, 1e-4);
      }
    }
    seq.frames.push_back(std::move(frame));
  }

  const auto warp_pose = [&](int i) -> const Pose& {
    return seq.frames[i].init_pose;
  };
  for (int i = 0; i < n; ++i) {
    for (int gap = 1; gap <= spec.edge_predecessors; ++gap) {
      const int j = i - gap;
      if (j < 0) continue;
      seq.edges.push_back(make_flow_edge(
          spec.camera, i, j, warp_pose(i), warp_pose(j),
          seq.frames[i].gt_depth, spec.flow_noise_sigma, spec.corrupt_region,
          &rng));
      seq.edges.push_back(make_flow_edge(
          spec.camera, j, i, warp_pose(j), warp_pose(i),
          seq.frames[j].gt_depth, spec.flow_noise_sigma, spec.corrupt_region,
          &rng));
    }
  }
  return seq;
}

FactorGraph build_graph(const GeneratedSequence& seq) {
  FactorGraph graph;
  graph.camera = seq.camera;
  for (const Frame& frame : seq.frames) {
    Keyframe kf;
    kf.id = frame.id;
    kf.pose = frame.init_pose;
    kf.image = frame.image;
    kf.inv_depth = frame.mv_inv_depth;
    kf.mono_prior = frame.mono_prior;
    graph.add_keyframe(std::move(kf));
  }
  for (const FlowEdge& edge : seq.edges) graph.add_edge(edge);
  return graph;
}

Camera make_default_camera() {
  Camera cam;
  cam.fx = 60.0;
  cam.fy = 60.0;
  cam.cx = 31.5;
  cam.cy = 23.5;
  cam.width = 64;
  cam.height = 48;
  return cam;
}

SequenceSpec make_smoke_spec(std::uint64_t seed) {
  SequenceSpec spec;
  spec.camera = make_default_camera();
  spec.seed = seed;
  spec.flow_noise_sigma = 0.05;
  spec.prior_scale = 0.9;
  spec.prior_shift = 0.02;
  spec.prior_noise_sigma = 0.001;
  const int n = 12;
  for (int i = 0; i < n; ++i) {
    Pose pose;
    // Lateral sweep with a slight wobble so the positions are not
    // collinear (trajectory alignment needs rank-2 spread).
    pose.translation = Vec3(0.16 * i - 0.88, 0.02 * std::sin(0.9 * i),
                            0.015 * std::sin(1.3 * i));
    spec.trajectory.push_back(pose);
  }
  return spec;
}

SequenceSpec make_corrupt_spec(std::uint64_t seed) {
  SequenceSpec spec = make_smoke_spec(seed);
  spec.prior_scale = 0.8;
  spec.prior_shift = 0.05;
  spec.prior_noise_sigma = 0.001;
  spec.corrupt_region = Rect{34, 18, 54, 32};
  spec.corrupt_factor = 3.0;
  return spec;
}

SequenceSpec make_loop_spec(std::uint64_t seed) {
  SequenceSpec spec;
  spec.camera = make_default_camera();
  spec.seed = seed;
  spec.flow_noise_sigma = 0.02;
  spec.prior_noise_sigma = 0.001;
  spec.edge_predecessors = 2;
  // Out-and-back lateral scan: the camera slides along a shallow arc facing
  // the far wall, then retraces the same arc in reverse.  The return pass
  // revisits every outbound viewpoint, so place recognition ties the two
  // passes together pointwise.  Because the passes traverse the arc in
  // opposite directions, a per-step odometric bias pulls the welded path in
  // conflicting directions and bundle adjustment can cancel it instead of
  // parking in a bent local optimum (the failure mode of one-way rings).
  const int half = 12;
  const int n = 2 * half + 1;
  // Odometric drift: every relative step is off by the same small twist, so
  // the integrated error compounds along the trajectory.
  Vec6 drift_step;
  drift_step << 0.004, -0.002, 0.003, 0.0020, 0.0015, -0.0018;
  for (int i = 0; i < n; ++i) {
    const double x = -1.5 + 0.25 * (i <= half ? i : 2 * half - i);
    Pose pose;  // identity rotation: +z toward the far wall
    pose.translation =
        Vec3(x, 0.05 * std::sin(M_PI * x / 1.5),
             1.0 + 0.2 * (1.0 - (x / 1.5) * (x / 1.5)));
    spec.trajectory.push_back(pose);
    if (i == 0) {
      spec.init_trajectory.push_back(pose);
    } else {
      const Pose rel = spec.trajectory[i - 1].inverse() * pose;
      spec.init_trajectory.push_back(spec.init_trajectory[i - 1] * rel *
                                     se3_exp(drift_step));
    }
  }
  return spec;
}

}  // namespace splatfuse
