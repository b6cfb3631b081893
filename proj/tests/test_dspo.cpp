#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "splatfuse/harness/sequence.hpp"
#include "splatfuse/tracking/dspo.hpp"

using namespace splatfuse;

namespace {

FactorGraph noiseless_graph(GeneratedSequence* seq_out = nullptr) {
  SequenceSpec spec;
  spec.camera = make_default_camera();
  spec.edge_predecessors = 2;
  for (int i = 0; i < 3; ++i) {
    Pose pose;
    pose.translation = Vec3(0.2 * i - 0.2, 0.01 * i, 0.015 * (i == 1));
    spec.trajectory.push_back(pose);
  }
  GeneratedSequence seq = generate_sequence(make_smoke_scene(), spec);
  FactorGraph graph = build_graph(seq);
  if (seq_out) *seq_out = std::move(seq);
  return graph;
}

Keyframe flat_keyframe(int w, int h) {
  Keyframe kf;
  kf.id = 0;
  kf.inv_depth = GridD(w, h, 0.5);
  kf.mono_prior = GridD(w, h, 2.0);
  kf.image = GridV3(w, h, Vec3::Zero());
  kf.error_class = PixelGrid<ErrorClass>(w, h, ErrorClass::Low);
  return kf;
}

double sq(double v) { return v * v; }

// alpha * sum over pixels of the given class of (d - (theta/mono + gamma))^2.
double prior_term(const Keyframe& kf, ErrorClass cls, double alpha) {
  double total = 0.0;
  for (std::size_t i = 0; i < kf.inv_depth.size(); ++i)
    if (kf.error_class[i] == cls)
      total += sq(kf.inv_depth[i] - (kf.scale / kf.mono_prior[i] + kf.shift));
  return alpha * total;
}

}  // namespace

TEST_CASE("error classes follow the strict count threshold") {
  FactorGraph graph;
  graph.camera = make_default_camera();
  graph.add_keyframe(flat_keyframe(graph.camera.width, graph.camera.height));

  ConfidenceMap consistency;
  consistency.counts = GridI32(graph.camera.width, graph.camera.height, 0);
  consistency.counts.at(0, 0) = 3;
  consistency.counts.at(1, 0) = 0;
  consistency.counts.at(2, 0) = 2;
  consistency.counts.at(3, 0) = 7;

  TrackingConfig config;  // consistency_threshold = 2
  const auto classes = classify_depth_errors(graph, 0, consistency, config);
  CHECK(classes.at(0, 0) == ErrorClass::Low);   // 3 > 2
  CHECK(classes.at(1, 0) == ErrorClass::High);  // 0 <= 2
  CHECK(classes.at(2, 0) == ErrorClass::High);  // boundary: strict
  CHECK(classes.at(3, 0) == ErrorClass::Low);
  // Every pixel lands in exactly one of the two classes.
  for (std::size_t i = 0; i < classes.size(); ++i)
    CHECK((classes[i] == ErrorClass::Low || classes[i] == ErrorClass::High));
}

TEST_CASE("scale-shift fit recovers an exact affine relation") {
  Keyframe kf = flat_keyframe(16, 12);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.5, 4.0);
  for (std::size_t i = 0; i < kf.mono_prior.size(); ++i) {
    kf.mono_prior[i] = u(rng);
    kf.inv_depth[i] = 2.0 / kf.mono_prior[i] + 0.1;
  }
  // High-error pixels carry garbage; the fit must ignore them.
  for (int x = 0; x < 16; ++x) {
    kf.error_class.at(x, 0) = ErrorClass::High;
    kf.inv_depth.at(x, 0) = 30.0;
  }
  const ScaleShiftFit fit = fit_scale_shift(kf);
  CHECK(!fit.degenerate);
  CHECK(fit.theta == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(fit.gamma == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("scale-shift fit is the identity on a perfect prior") {
  Keyframe kf = flat_keyframe(16, 12);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.5, 4.0);
  for (std::size_t i = 0; i < kf.mono_prior.size(); ++i) {
    kf.mono_prior[i] = u(rng);
    kf.inv_depth[i] = 1.0 / kf.mono_prior[i];
  }
  const ScaleShiftFit fit = fit_scale_shift(kf);
  CHECK(!fit.degenerate);
  CHECK(fit.theta == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(fit.gamma) < 1e-12);
}

TEST_CASE("noisy fit matches the normal equations") {
  Keyframe kf = flat_keyframe(20, 15);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.5, 4.0);
  std::normal_distribution<double> g(0.0, 0.05);
  for (std::size_t i = 0; i < kf.mono_prior.size(); ++i) {
    kf.mono_prior[i] = u(rng);
    kf.inv_depth[i] = std::max(1.7 / kf.mono_prior[i] - 0.05 + g(rng), 0.01);
  }
  // Independent oracle: solve the 2x2 least-squares system directly.
  Mat2 a = Mat2::Zero();
  Vec2 b = Vec2::Zero();
  for (std::size_t i = 0; i < kf.mono_prior.size(); ++i) {
    const double x = 1.0 / kf.mono_prior[i];
    const double y = kf.inv_depth[i];
    a(0, 0) += x * x;
    a(0, 1) += x;
    a(1, 0) += x;
    a(1, 1) += 1.0;
    b[0] += x * y;
    b[1] += y;
  }
  const Vec2 sol = a.ldlt().solve(b);

  const ScaleShiftFit fit = fit_scale_shift(kf);
  CHECK(!fit.degenerate);
  CHECK(fit.theta == doctest::Approx(sol[0]).epsilon(1e-9));
  CHECK(fit.gamma == doctest::Approx(sol[1]).epsilon(1e-9));

  // Least-squares optimality: nudging (theta, gamma) never helps.
  const auto objective = [&](double th, double ga) {
    double total = 0.0;
    for (std::size_t i = 0; i < kf.mono_prior.size(); ++i)
      total += sq(th / kf.mono_prior[i] + ga - kf.inv_depth[i]);
    return total;
  };
  const double best = objective(fit.theta, fit.gamma);
  for (int dx = -1; dx <= 1; ++dx)
    for (int dy = -1; dy <= 1; ++dy) {
      if (dx == 0 && dy == 0) continue;
      CHECK(objective(fit.theta + 1e-3 * dx, fit.gamma + 1e-3 * dy) >= best);
    }
}

TEST_CASE("constant prior falls back to a pure shift") {
  Keyframe kf = flat_keyframe(8, 8);  // mono_prior uniformly 2.0
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.3, 0.9);
  double mean_diff = 0.0;
  for (std::size_t i = 0; i < kf.inv_depth.size(); ++i) {
    kf.inv_depth[i] = u(rng);
    mean_diff += kf.inv_depth[i] - 0.5;
  }
  mean_diff /= static_cast<double>(kf.inv_depth.size());

  const ScaleShiftFit fit = fit_scale_shift(kf);
  CHECK(fit.degenerate);
  CHECK(fit.theta == 1.0);
  CHECK(fit.gamma == doctest::Approx(mean_diff).epsilon(1e-12));
}

TEST_CASE("objective decomposition matches hand-computed terms") {
  GeneratedSequence seq;
  FactorGraph graph = noiseless_graph(&seq);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int id : graph.insertion_order()) {
    Keyframe& kf = graph.keyframe(id);
    kf.error_class = PixelGrid<ErrorClass>(graph.camera.width,
                                           graph.camera.height);
    for (std::size_t i = 0; i < kf.error_class.size(); ++i) {
      kf.error_class[i] = u(rng) < 0.3 ? ErrorClass::High : ErrorClass::Low;
      kf.inv_depth[i] *= 1.0 + 0.1 * (u(rng) - 0.5);
    }
    kf.scale = 1.05;
    kf.shift = -0.01;
  }

  TrackingConfig config;
  const std::vector<int> kfs = graph.insertion_order();
  const PriorObjective obj = prior_objective(graph, kfs, config);

  CHECK(obj.geom ==
        doctest::Approx(reprojection_cost(graph, kfs)).epsilon(1e-12));
  double high = 0.0, low = 0.0;
  for (int id : kfs) {
    high += prior_term(graph.keyframe(id), ErrorClass::High, config.alpha1);
    low += prior_term(graph.keyframe(id), ErrorClass::Low, config.alpha2);
  }
  CHECK(obj.prior_high == doctest::Approx(high).epsilon(1e-9));
  CHECK(obj.prior_low == doctest::Approx(low).epsilon(1e-9));
  CHECK(obj.total() ==
        doctest::Approx(obj.geom + obj.prior_high + obj.prior_low));

  // The high-error term scales linearly in alpha1.
  TrackingConfig doubled = config;
  doubled.alpha1 *= 2.0;
  const PriorObjective obj2 = prior_objective(graph, kfs, doubled);
  CHECK(obj2.prior_high ==
        doctest::Approx(2.0 * obj.prior_high).epsilon(1e-12));
  CHECK(obj2.geom == doctest::Approx(obj.geom).epsilon(1e-12));
}

TEST_CASE("prior refinement repairs corrupted depths") {
  GeneratedSequence seq;
  FactorGraph graph = noiseless_graph(&seq);
  // Corrupt a block of depths x3 on every keyframe and mark it high-error;
  // the untouched remainder stays low-error and anchors (theta, gamma).
  const Rect bad{20, 12, 44, 36};
  for (int id : graph.insertion_order()) {
    Keyframe& kf = graph.keyframe(id);
    kf.error_class = PixelGrid<ErrorClass>(
        graph.camera.width, graph.camera.height, ErrorClass::Low);
    for (int y = 0; y < graph.camera.height; ++y)
      for (int x = 0; x < graph.camera.width; ++x)
        if (bad.contains(x, y)) {
          kf.inv_depth.at(x, y) /= 3.0;
          kf.error_class.at(x, y) = ErrorClass::High;
        }
    const ScaleShiftFit fit = fit_scale_shift(kf);
    kf.scale = fit.theta;
    kf.shift = fit.gamma;
  }

  TrackingConfig config;
  config.gn_iters = 12;
  const std::vector<int> kfs = graph.insertion_order();
  const double before = prior_objective(graph, kfs, config).total();
  const OptimizeResult result = refine_prior_alignment(graph, kfs, config);
  CHECK(result.final_cost <= before + 1e-12);
  for (std::size_t i = 1; i < result.cost_trace.size(); ++i)
    CHECK(result.cost_trace[i] <= result.cost_trace[i - 1] + 1e-12);

  std::vector<double> rel;
  for (int id : kfs) {
    const Keyframe& kf = graph.keyframe(id);
    const Frame& frame = seq.frames[id];
    for (int y = bad.y0; y < bad.y1; ++y)
      for (int x = bad.x0; x < bad.x1; ++x) {
        const double est = 1.0 / kf.inv_depth.at(x, y);
        rel.push_back(std::abs(est - frame.gt_depth.at(x, y)) /
                      frame.gt_depth.at(x, y));
      }
  }
  std::nth_element(rel.begin(), rel.begin() + rel.size() / 2, rel.end());
  CHECK(rel[rel.size() / 2] < 0.02);
}

TEST_CASE("alternating refinement never worsens the objective") {
  GeneratedSequence seq;
  FactorGraph graph = noiseless_graph(&seq);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 0.01);
  for (int id : graph.insertion_order()) {
    Keyframe& kf = graph.keyframe(id);
    kf.error_class = PixelGrid<ErrorClass>(
        graph.camera.width, graph.camera.height, ErrorClass::Low);
    for (std::size_t i = 0; i < kf.inv_depth.size(); ++i) {
      kf.inv_depth[i] = std::max(kf.inv_depth[i] + g(rng), 0.01);
      if (i % 5 == 0) kf.error_class[i] = ErrorClass::High;
    }
    const ScaleShiftFit fit = fit_scale_shift(kf);
    kf.scale = fit.theta;
    kf.shift = fit.gamma;
  }

  TrackingConfig config;
  config.dspo_rounds = 2;
  config.gn_iters = 4;
  const DspoResult result = dspo_refine(graph, config);
  CHECK(result.after.total() <= result.before.total() + 1e-12);
}

TEST_CASE("refinement leaves depths alone when nothing is high-error") {
  GeneratedSequence seq;
  FactorGraph graph = noiseless_graph(&seq);
  std::vector<GridD> saved;
  for (int id : graph.insertion_order()) {
    Keyframe& kf = graph.keyframe(id);
    kf.error_class = PixelGrid<ErrorClass>(
        graph.camera.width, graph.camera.height, ErrorClass::Low);
    const ScaleShiftFit fit = fit_scale_shift(kf);
    kf.scale = fit.theta;
    kf.shift = fit.gamma;
    saved.push_back(kf.inv_depth);
  }
  TrackingConfig config;
  config.gn_iters = 6;
  refine_prior_alignment(graph, graph.insertion_order(), config);
  int idx = 0;
  for (int id : graph.insertion_order()) {
    const Keyframe& kf = graph.keyframe(id);
    bool same = true;
    for (std::size_t i = 0; i < kf.inv_depth.size(); ++i)
      same = same && kf.inv_depth[i] == saved[idx][i];
    CHECK(same);
    // (theta, gamma) stays at the closed-form optimum of the low set.
    const ScaleShiftFit fit = fit_scale_shift(kf);
    CHECK(std::abs(kf.scale - fit.theta) < 1e-9);
    CHECK(std::abs(kf.shift - fit.gamma) < 1e-9);
    ++idx;
  }
}
