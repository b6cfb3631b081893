#include "splatfuse/tracking/dspo.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "splatfuse/kernels/kernels.hpp"

namespace splatfuse {

namespace {

constexpr double kMaxDamping = 1e6;
constexpr double kMinDamping = 1e-9;
constexpr double kMinInvDepth = 1e-8;
constexpr double kMinScale = 1e-8;

void require_classes(const Keyframe& kf) {
  if (kf.error_class.width() != kf.inv_depth.width() ||
      kf.error_class.height() != kf.inv_depth.height())
    throw DomainError("error classes not assigned for keyframe " +
                      std::to_string(kf.id));
}

}  // namespace

PixelGrid<ErrorClass> classify_depth_errors(const FactorGraph& graph,
                                            int kf_id,
                                            const ConfidenceMap& consistency,
                                            const TrackingConfig& config) {
  const Keyframe& kf = graph.keyframe(kf_id);
  const GridI32& counts = consistency.counts;
  if (counts.width() != kf.inv_depth.width() ||
      counts.height() != kf.inv_depth.height())
    throw DomainError("classify_depth_errors: count grid size mismatch");
  PixelGrid<ErrorClass> labels(counts.width(), counts.height());
  for (std::size_t i = 0; i < counts.size(); ++i)
    labels[i] = counts[i] > config.consistency_threshold ? ErrorClass::Low
                                                         : ErrorClass::High;
  return labels;
}

ScaleShiftFit fit_scale_shift(const Keyframe& kf) {
  require_classes(kf);
  std::vector<double> x, y;  // x = prior inverse depth, y = estimated
  x.reserve(kf.inv_depth.size());
  y.reserve(kf.inv_depth.size());
  for (std::size_t i = 0; i < kf.inv_depth.size(); ++i) {
    if (kf.error_class[i] != ErrorClass::Low) continue;
    if (kf.mono_prior[i] <= 0.0)
      throw DomainError("fit_scale_shift: non-positive prior depth");
    x.push_back(1.0 / kf.mono_prior[i]);
    y.push_back(kf.inv_depth[i]);
  }

  ScaleShiftFit fit;
  const double n = static_cast<double>(x.size());
  if (x.empty()) {
    fit.degenerate = true;
    return fit;
  }
  const kernels::AffineFitSums s =
      kernels::affine_fit_sums(x.data(), y.data(), x.size());
  const double var = s.sxx / n - (s.sx / n) * (s.sx / n);
  if (var < 1e-12) {
    fit.theta = 1.0;
    fit.gamma = (s.sy - s.sx) / n;
    fit.degenerate = true;
    return fit;
  }
  const double cov = s.sxy / n - (s.sx / n) * (s.sy / n);
  fit.theta = cov / var;
  fit.gamma = (s.sy - fit.theta * s.sx) / n;
  return fit;
}

PriorObjective prior_objective(const FactorGraph& graph,
                               const std::vector<int>& keyframes,
                               const TrackingConfig& config) {
  PriorObjective obj;
  const std::set<int> in_set(keyframes.begin(), keyframes.end());
  for (const FlowEdge& edge : graph.edges()) {
    if (!in_set.count(edge.src) || !in_set.count(edge.dst)) continue;
    const int w = static_cast<int>(edge.flow_target.width());
    const int h = static_cast<int>(edge.flow_target.height());
    for (int py = 0; py < h; ++py)
      for (int px = 0; px < w; ++px) {
        const ResidualEval ev =
            geometric_residual(graph, edge, px, py, /*with_jacobians=*/false);
        if (ev.valid) obj.geom += ev.whitened.squaredNorm();
      }
  }
  for (int id : keyframes) {
    const Keyframe& kf = graph.keyframe(id);
    require_classes(kf);
    for (std::size_t i = 0; i < kf.inv_depth.size(); ++i) {
      const double prior = kf.scale / kf.mono_prior[i] + kf.shift;
      const double e = kf.inv_depth[i] - prior;
      if (kf.error_class[i] == ErrorClass::High)
        obj.prior_high += config.alpha1 * e * e;
      else
        obj.prior_low += config.alpha2 * e * e;
    }
  }
  return obj;
}

OptimizeResult refine_prior_alignment(FactorGraph& graph,
                                      const std::vector<int>& keyframes,
                                      const TrackingConfig& config) {
  // Per-keyframe block: its high-error pixel variables plus (theta, gamma).
  struct Block {
    Keyframe* kf = nullptr;
    GridI32 high_index;              // linear pixel -> variable slot, -1 low
    std::vector<std::size_t> high;   // variable slot -> linear pixel
    std::vector<double> h_dd, b_d;   // per depth variable
    std::vector<Vec2> c_tg;          // coupling row (theta, gamma) per depth
    Mat2 h_tg;
    Vec2 b_tg;
    std::vector<double> saved_depth;
    double saved_scale = 1.0, saved_shift = 0.0;
  };

  std::vector<Block> blocks;
  std::map<int, int> block_of;
  for (int id : keyframes) {
    Keyframe& kf = graph.keyframe(id);
    require_classes(kf);
    Block b;
    b.kf = &kf;
    b.high_index = GridI32(kf.inv_depth.width(), kf.inv_depth.height());
    for (std::size_t i = 0; i < kf.inv_depth.size(); ++i) {
      if (kf.error_class[i] == ErrorClass::High) {
        b.high_index[i] = static_cast<std::int32_t>(b.high.size());
        b.high.push_back(i);
      } else {
        b.high_index[i] = -1;
      }
    }
    b.h_dd.resize(b.high.size());
    b.b_d.resize(b.high.size());
    b.c_tg.resize(b.high.size());
    b.saved_depth.resize(b.high.size());
    block_of[id] = static_cast<int>(blocks.size());
    blocks.push_back(std::move(b));
  }

  const std::set<int> in_set(keyframes.begin(), keyframes.end());
  std::vector<const FlowEdge*> active;
  for (const FlowEdge& edge : graph.edges())
    if (in_set.count(edge.src) && in_set.count(edge.dst))
      active.push_back(&edge);

  OptimizeResult result;
  double current_cost = prior_objective(graph, keyframes, config).total();
  result.initial_cost = current_cost;
  result.final_cost = current_cost;
  double damping = config.damping;

  for (int iter = 0; iter < config.gn_iters; ++iter) {
    for (Block& b : blocks) {
      std::fill(b.h_dd.begin(), b.h_dd.end(), 0.0);
      std::fill(b.b_d.begin(), b.b_d.end(), 0.0);
      std::fill(b.c_tg.begin(), b.c_tg.end(), Vec2::Zero().eval());
      b.h_tg.setZero();
      b.b_tg.setZero();
    }

    // Flow terms touch only the source keyframe's high-error depths.
    for (const FlowEdge* edge : active) {
      Block& b = blocks[block_of[edge->src]];
      const int w = static_cast<int>(edge->flow_target.width());
      const int h = static_cast<int>(edge->flow_target.height());
      for (int py = 0; py < h; ++py)
        for (int px = 0; px < w; ++px) {
          const std::int32_t slot = b.high_index.at(px, py);
          if (slot < 0) continue;
          const ResidualEval ev = geometric_residual(graph, *edge, px, py);
          if (!ev.valid) continue;
          b.h_dd[slot] += ev.j_inv_depth.squaredNorm();
          b.b_d[slot] -= ev.j_inv_depth.dot(ev.whitened);
        }
    }

    // Prior terms: residual d - (theta * x + gamma) weighted alpha1 on
    // high-error pixels; d fixed, weight alpha2 on low-error pixels.
    for (Block& b : blocks) {
      const Keyframe& kf = *b.kf;
      for (std::size_t i = 0; i < kf.inv_depth.size(); ++i) {
        const double x = 1.0 / kf.mono_prior[i];
        const double e = kf.inv_depth[i] - (kf.scale * x + kf.shift);
        const Vec2 j_tg(-x, -1.0);
        if (kf.error_class[i] == ErrorClass::High) {
          const std::int32_t slot = b.high_index[i];
          b.h_dd[slot] += config.alpha1;
          b.b_d[slot] -= config.alpha1 * e;
          b.c_tg[slot] += config.alpha1 * j_tg;
          b.h_tg += config.alpha1 * j_tg * j_tg.transpose();
          b.b_tg -= config.alpha1 * j_tg * e;
        } else {
          b.h_tg += config.alpha2 * j_tg * j_tg.transpose();
          b.b_tg -= config.alpha2 * j_tg * e;
        }
      }
    }

    bool stepped = false;
    while (true) {
      bool solve_ok = true;
      for (Block& b : blocks) {
        b.saved_scale = b.kf->scale;
        b.saved_shift = b.kf->shift;
        for (std::size_t k = 0; k < b.high.size(); ++k)
          b.saved_depth[k] = b.kf->inv_depth[b.high[k]];

        // Schur complement of the depth diagonal onto the 2x2 block.
        Mat2 h = b.h_tg;
        Vec2 rhs = b.b_tg;
        for (std::size_t k = 0; k < b.high.size(); ++k) {
          const double hd = b.h_dd[k] * (1.0 + damping);
          if (hd <= 1e-300) continue;  // unconstrained depth variable
          h -= b.c_tg[k] * (b.c_tg[k].transpose() / hd);
          rhs -= b.c_tg[k] * (b.b_d[k] / hd);
        }
        for (int k = 0; k < 2; ++k) h(k, k) += damping * (h(k, k) + 1.0);

        const Eigen::LDLT<Mat2> ldlt(h);
        Vec2 delta_tg = Vec2::Zero();
        if (ldlt.info() == Eigen::Success) delta_tg = ldlt.solve(rhs);
        if (!delta_tg.allFinite()) {
          solve_ok = false;
          break;
        }

        b.kf->scale = std::max(b.saved_scale + delta_tg(0), kMinScale);
        b.kf->shift = b.saved_shift + delta_tg(1);
        for (std::size_t k = 0; k < b.high.size(); ++k) {
          const double hd = b.h_dd[k] * (1.0 + damping);
          if (hd <= 1e-300) continue;
          const double delta_d =
              (b.b_d[k] - b.c_tg[k].dot(delta_tg)) / hd;
          b.kf->inv_depth[b.high[k]] =
              std::max(b.saved_depth[k] + delta_d, kMinInvDepth);
        }
      }

      const double new_cost =
          solve_ok ? prior_objective(graph, keyframes, config).total()
                   : std::numeric_limits<double>::infinity();
      if (solve_ok && std::isfinite(new_cost) && new_cost <= current_cost) {
        current_cost = new_cost;
        result.final_cost = new_cost;
        result.cost_trace.push_back(new_cost);
        ++result.accepted_steps;
        damping = std::max(damping / 2.0, kMinDamping);
        stepped = true;
        break;
      }

      for (Block& b : blocks) {  // reject: restore state
        b.kf->scale = b.saved_scale;
        b.kf->shift = b.saved_shift;
        for (std::size_t k = 0; k < b.high.size(); ++k)
          b.kf->inv_depth[b.high[k]] = b.saved_depth[k];
      }
      damping *= 10.0;
      if (damping > kMaxDamping) {
        if (!solve_ok)
          throw OptimizerStalled("prior alignment: normal equations "
                                 "unsolvable at maximum damping");
        return result;  // no further local progress
      }
    }
    if (!stepped) break;
  }
  return result;
}

DspoResult dspo_refine(FactorGraph& graph, const TrackingConfig& config) {
  const std::vector<int> kfs = graph.window(config.window_size);
  if (kfs.size() < 2)
    throw DomainError("dspo_refine: window needs >= 2 keyframes");
  DspoResult out;
  out.before = prior_objective(graph, kfs, config);
  for (int round = 0; round < config.dspo_rounds; ++round) {
    out.geometry_stages.push_back(optimize_window(graph, config));
    out.prior_stages.push_back(refine_prior_alignment(graph, kfs, config));
  }
  out.after = prior_objective(graph, kfs, config);
  return out;
}

}  // namespace splatfuse
