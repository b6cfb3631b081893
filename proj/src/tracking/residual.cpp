#include "splatfuse/tracking/residual.hpp"

#include <Eigen/Cholesky>

#include "splatfuse/kernels/kernels.hpp"

namespace splatfuse {

ResidualEval geometric_residual(const FactorGraph& graph, const FlowEdge& edge,
                                int px, int py, bool with_jacobians) {
  const Keyframe& src = graph.keyframe(edge.src);
  const Keyframe& dst = graph.keyframe(edge.dst);
  const Camera& cam = graph.camera;

  ResidualEval out;
  const double inv_depth = src.inv_depth.at(px, py);
  if (inv_depth <= 0.0) throw DomainError("geometric_residual: inv_depth <= 0");

  const Vec2 pixel(static_cast<double>(px), static_cast<double>(py));
  const Vec3 point_src = cam.unproject(pixel, inv_depth);

  // T_ji maps src camera frame into dst camera frame.
  const Pose t_ji = dst.pose.inverse() * src.pose;
  const Vec3 point_dst = t_ji.apply(point_src);
  if (!cam.in_front(point_dst)) return out;  // behind destination camera

  const Vec2 projected = cam.project(point_dst);
  if (!cam.contains(projected)) return out;

  const Vec2 target = edge.flow_target.at(px, py);
  if (!cam.contains(target)) return out;  // undefined flow target

  out.valid = true;
  out.raw = target - projected;

  // Sigma = L L^T; whitening by L^{-1} realizes the Mahalanobis norm.
  const Mat2 sigma = edge.covariance.at(px, py);
  const Eigen::LLT<Mat2> llt(sigma);
  const Mat2 l = llt.matrixL();
  out.whitened = l.triangularView<Eigen::Lower>().solve(out.raw);

  if (!with_jacobians) return out;

  const Mat23 j_proj = cam.project_jacobian(point_dst);

  Mat36 d_point_src;  // d(point in dst frame)/d(xi_src), twist = (v, w)
  d_point_src.leftCols<3>() = t_ji.rotation;
  d_point_src.rightCols<3>() = -t_ji.rotation * skew(point_src);

  Mat36 d_point_dst;  // d(point in dst frame)/d(xi_dst)
  d_point_dst.leftCols<3>() = -Mat3::Identity();
  d_point_dst.rightCols<3>() = skew(point_dst);

  const Mat26 j_src_raw = -j_proj * d_point_src;
  const Mat26 j_dst_raw = -j_proj * d_point_dst;
  const Vec2 j_depth_raw =
      j_proj * (t_ji.rotation * (point_src / inv_depth));

  out.j_pose_src = l.triangularView<Eigen::Lower>().solve(j_src_raw);
  out.j_pose_dst = l.triangularView<Eigen::Lower>().solve(j_dst_raw);
  out.j_inv_depth = l.triangularView<Eigen::Lower>().solve(j_depth_raw);
  return out;
}

bool should_insert_keyframe(const GridV2& flow_field,
                            const TrackingConfig& config) {
  if (flow_field.empty())
    throw DomainError("should_insert_keyframe: empty flow field");
  const double mean = kernels::flow_mean_magnitude(
      reinterpret_cast<const double*>(flow_field.data()), flow_field.size());
  return mean > config.kf_flow_threshold;
}

}  // namespace splatfuse
