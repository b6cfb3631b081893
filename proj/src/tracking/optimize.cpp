#include "splatfuse/tracking/optimize.hpp"

#include <Eigen/Cholesky>
#include <map>
#include <unordered_map>

namespace splatfuse {

namespace {

constexpr double kMaxDamping = 1e6;
constexpr double kMinInvDepth = 1e-8;

struct DepthEntry {
  double hdd = 0.0;
  double bd = 0.0;
  // Sparse pose couplings J_pose^T J_depth; at most a handful per pixel.
  std::vector<std::pair<int, Vec6>> couplings;

  Vec6& coupling(int pose_var) {
    for (auto& [idx, vec] : couplings)
      if (idx == pose_var) return vec;
    couplings.emplace_back(pose_var, Vec6::Zero());
    return couplings.back().second;
  }
};

struct SavedState {
  std::vector<Pose> poses;
  std::vector<GridD> depths;
};

SavedState save_state(const FactorGraph& graph, const std::vector<int>& kfs) {
  SavedState s;
  for (int id : kfs) {
    const Keyframe& kf = graph.keyframe(id);
    s.poses.push_back(kf.pose);
    s.depths.push_back(kf.inv_depth);
  }
  return s;
}

void restore_state(FactorGraph& graph, const std::vector<int>& kfs,
                   const SavedState& s) {
  for (std::size_t i = 0; i < kfs.size(); ++i) {
    Keyframe& kf = graph.keyframe(kfs[i]);
    kf.pose = s.poses[i];
    kf.inv_depth = s.depths[i];
  }
}

std::vector<const FlowEdge*> active_edges(const FactorGraph& graph,
                                          const std::vector<int>& kfs) {
  std::set<int> in_set(kfs.begin(), kfs.end());
  std::vector<const FlowEdge*> out;
  for (const FlowEdge& e : graph.edges())
    if (in_set.count(e.src) && in_set.count(e.dst)) out.push_back(&e);
  return out;
}

}  // namespace

double reprojection_cost(const FactorGraph& graph,
                         const std::vector<int>& keyframes) {
  double cost = 0.0;
  for (const FlowEdge* e : active_edges(graph, keyframes)) {
    const int w = e->flow_target.width();
    const int h = e->flow_target.height();
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const ResidualEval r = geometric_residual(graph, *e, x, y, false);
        if (r.valid) cost += r.whitened.squaredNorm();
      }
  }
  return cost;
}

OptimizeResult ba_optimize(FactorGraph& graph, const BaOptions& opts) {
  const std::vector<int>& kfs = opts.keyframes;
  if (kfs.size() < 2) throw DomainError("ba_optimize: need >= 2 keyframes");
  const auto edges = active_edges(graph, kfs);
  if (edges.empty()) throw DomainError("ba_optimize: no edges in vertex set");

  // Pose variable layout: gauge keyframe and extra-fixed poses get -1.
  std::unordered_map<int, int> pose_var;
  int n_pose = 0;
  for (std::size_t i = 0; i < kfs.size(); ++i) {
    const bool fixed =
        (i == 0) || !opts.optimize_poses || opts.extra_fixed_poses.count(kfs[i]);
    pose_var[kfs[i]] = fixed ? -1 : n_pose++;
  }

  std::unordered_map<int, std::size_t> kf_slot;
  for (std::size_t i = 0; i < kfs.size(); ++i) kf_slot[kfs[i]] = i;

  OptimizeResult result;
  result.initial_cost = reprojection_cost(graph, kfs);
  result.final_cost = result.initial_cost;
  double damping = opts.initial_damping;

  const int dim = 6 * n_pose;

  for (int iter = 0; iter < opts.iterations; ++iter) {
    // Linearize once per iteration; retry the solve with more damping on
    // rejection.
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
    // Depth entries keyed by (keyframe slot, pixel index).
    std::map<std::pair<std::size_t, std::size_t>, DepthEntry> depth_entries;

    double current_cost = 0.0;
    for (const FlowEdge* e : edges) {
      const int vi = pose_var[e->src];
      const int vj = pose_var[e->dst];
      const std::size_t src_slot = kf_slot[e->src];
      const int w = e->flow_target.width();
      const int h_px = e->flow_target.height();
      const Keyframe& src_kf = graph.keyframe(e->src);
      for (int y = 0; y < h_px; ++y)
        for (int x = 0; x < w; ++x) {
          const ResidualEval r = geometric_residual(graph, *e, x, y, true);
          if (!r.valid) continue;
          current_cost += r.whitened.squaredNorm();

          if (vi >= 0) {
            h.block<6, 6>(6 * vi, 6 * vi) +=
                r.j_pose_src.transpose() * r.j_pose_src;
            b.segment<6>(6 * vi) -= r.j_pose_src.transpose() * r.whitened;
          }
          if (vj >= 0) {
            h.block<6, 6>(6 * vj, 6 * vj) +=
                r.j_pose_dst.transpose() * r.j_pose_dst;
            b.segment<6>(6 * vj) -= r.j_pose_dst.transpose() * r.whitened;
          }
          if (vi >= 0 && vj >= 0) {
            const Eigen::Matrix<double, 6, 6> hij =
                r.j_pose_src.transpose() * r.j_pose_dst;
            h.block<6, 6>(6 * vi, 6 * vj) += hij;
            h.block<6, 6>(6 * vj, 6 * vi) += hij.transpose();
          }
          if (opts.optimize_depths) {
            const std::size_t px_idx =
                static_cast<std::size_t>(y) * src_kf.inv_depth.width() + x;
            DepthEntry& d = depth_entries[{src_slot, px_idx}];
            d.hdd += r.j_inv_depth.squaredNorm();
            d.bd -= r.j_inv_depth.dot(r.whitened);
            if (vi >= 0)
              d.coupling(vi) += r.j_pose_src.transpose() * r.j_inv_depth;
            if (vj >= 0)
              d.coupling(vj) += r.j_pose_dst.transpose() * r.j_inv_depth;
          }
        }
    }
    if (iter == 0) {
      result.initial_cost = current_cost;
      result.final_cost = current_cost;
    }

    bool accepted = false;
    while (!accepted) {
      // Marquardt-scaled damping on the pose block and depth diagonal.
      Eigen::MatrixXd h_damped = h;
      Eigen::VectorXd b_reduced = b;
      for (int k = 0; k < dim; ++k)
        h_damped(k, k) += damping * (h(k, k) + 1.0);

      std::map<std::pair<std::size_t, std::size_t>, double> depth_hdd_damped;
      for (const auto& [key, entry] : depth_entries) {
        const double hdd = entry.hdd * (1.0 + damping);
        if (hdd < 1e-300) continue;
        depth_hdd_damped[key] = hdd;
        const double inv_hdd = 1.0 / hdd;
        // Schur complement: fold the depth variable into the pose system.
        for (const auto& [a, ga] : entry.couplings) {
          b_reduced.segment<6>(6 * a) -= ga * (entry.bd * inv_hdd);
          for (const auto& [c, gc] : entry.couplings)
            h_damped.block<6, 6>(6 * a, 6 * c) -=
                ga * (inv_hdd * gc.transpose());
        }
      }

      Eigen::VectorXd delta_pose = Eigen::VectorXd::Zero(dim);
      bool solve_ok = true;
      if (dim > 0) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(h_damped);
        delta_pose = ldlt.solve(b_reduced);
        solve_ok = ldlt.info() == Eigen::Success && delta_pose.allFinite();
      }

      if (solve_ok) {
        const SavedState saved = save_state(graph, kfs);
        for (int id : kfs) {
          const int v = pose_var[id];
          if (v < 0) continue;
          Keyframe& kf = graph.keyframe(id);
          kf.pose = kf.pose * se3_exp(delta_pose.segment<6>(6 * v));
        }
        if (opts.optimize_depths) {
          for (const auto& [key, entry] : depth_entries) {
            auto it = depth_hdd_damped.find(key);
            if (it == depth_hdd_damped.end()) continue;
            double delta_d = entry.bd;
            for (const auto& [a, ga] : entry.couplings)
              delta_d -= ga.dot(delta_pose.segment<6>(6 * a));
            delta_d /= it->second;
            Keyframe& kf = graph.keyframe(kfs[key.first]);
            double& d = kf.inv_depth[key.second];
            d = std::max(d + delta_d, kMinInvDepth);
          }
        }

        const double new_cost = reprojection_cost(graph, kfs);
        if (std::isfinite(new_cost) && new_cost <= current_cost) {
          accepted = true;
          result.final_cost = new_cost;
          result.cost_trace.push_back(new_cost);
          ++result.accepted_steps;
          damping = std::max(damping * 0.5, 1e-9);
          break;
        }
        restore_state(graph, kfs, saved);
      }

      damping *= 10.0;
      if (damping > kMaxDamping) {
        if (!solve_ok)
          throw OptimizerStalled(
              "ba_optimize: optimizer stalled (singular normal equations at "
              "maximum damping)");
        // No descent direction left: converged as far as damping allows.
        return result;
      }
    }
  }
  return result;
}

OptimizeResult optimize_window(FactorGraph& graph,
                               const TrackingConfig& config) {
  config.validate();
  BaOptions opts;
  opts.keyframes = graph.window(config.window_size);
  if (opts.keyframes.size() < 2)
    throw DomainError("optimize_window: need >= 2 keyframes in window");
  opts.iterations = config.gn_iters;
  opts.initial_damping = config.damping;
  return ba_optimize(graph, opts);
}

}  // namespace splatfuse
