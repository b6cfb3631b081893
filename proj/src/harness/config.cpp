#include "splatfuse/harness/config.hpp"

#include <algorithm>
#include <climits>
#include <set>

#include "splatfuse/core/error.hpp"

namespace splatfuse {

SyntheticScene make_scene_by_name(const std::string& name) {
  if (name == "smoke" || name == "corrupt") return make_smoke_scene();
  if (name == "loop") return make_loop_scene();
  throw ConfigError("unknown scene '" + name +
                    "' (expected smoke, corrupt or loop)");
}

SequenceSpec make_spec_by_name(const std::string& name, std::uint64_t seed) {
  if (name == "smoke") return make_smoke_spec(seed);
  if (name == "corrupt") return make_corrupt_spec(seed);
  if (name == "loop") return make_loop_spec(seed);
  throw ConfigError("unknown scene '" + name +
                    "' (expected smoke, corrupt or loop)");
}

namespace {

void check_keys(const TomlDoc& doc, const std::string& table,
                const std::set<std::string>& known) {
  for (const std::string& key : doc.keys(table)) {
    if (!known.count(key))
      throw ConfigError("unknown config key [" + table + "] " + key);
  }
}

int get_ranged_int(const TomlDoc& doc, const std::string& table,
                   const std::string& key, int fallback) {
  const long long v = doc.get_int(table, key, fallback);
  if (v < INT_MIN || v > INT_MAX)
    throw ConfigError("config value " + table + "." + key + " out of range");
  return static_cast<int>(v);
}

}  // namespace

RunOptions load_run_options(const TomlDoc& doc) {
  static const std::set<std::string> known_tables = {
      "", "tracking", "fusion", "loop", "map_loss", "map_optim", "harness"};
  for (const std::string& table : doc.tables()) {
    if (!known_tables.count(table))
      throw ConfigError("unknown config table [" + table + "]");
  }
  if (!doc.keys("").empty())
    throw ConfigError("top-level config key '" + doc.keys("").front() +
                      "' must live in a table");

  RunOptions opts;
  TrackingConfig& t = opts.pipeline.tracking;
  check_keys(doc, "tracking",
             {"kf_flow_threshold", "consistency_threshold", "alpha1",
              "alpha2", "window_size", "gn_iters", "dspo_rounds", "damping"});
  t.kf_flow_threshold =
      doc.get_double("tracking", "kf_flow_threshold", t.kf_flow_threshold);
  t.consistency_threshold = get_ranged_int(doc, "tracking",
                                           "consistency_threshold",
                                           t.consistency_threshold);
  t.alpha1 = doc.get_double("tracking", "alpha1", t.alpha1);
  t.alpha2 = doc.get_double("tracking", "alpha2", t.alpha2);
  t.window_size = get_ranged_int(doc, "tracking", "window_size",
                                 t.window_size);
  t.gn_iters = get_ranged_int(doc, "tracking", "gn_iters", t.gn_iters);
  t.dspo_rounds = get_ranged_int(doc, "tracking", "dspo_rounds",
                                 t.dspo_rounds);
  t.damping = doc.get_double("tracking", "damping", t.damping);

  FusionConfig& f = opts.pipeline.fusion;
  check_keys(doc, "fusion", {"eta", "n_key", "nearest_neighbor_depth"});
  f.eta = doc.get_double("fusion", "eta", f.eta);
  f.n_key = get_ranged_int(doc, "fusion", "n_key", f.n_key);
  f.nearest_neighbor_depth =
      doc.get_bool("fusion", "nearest_neighbor_depth",
                   f.nearest_neighbor_depth);

  LoopClosureConfig& l = opts.pipeline.loop;
  check_keys(doc, "loop",
             {"covis_overlap_min", "min_temporal_gap",
              "max_candidates_per_kf"});
  l.covis_overlap_min =
      doc.get_double("loop", "covis_overlap_min", l.covis_overlap_min);
  l.min_temporal_gap = get_ranged_int(doc, "loop", "min_temporal_gap",
                                      l.min_temporal_gap);
  l.max_candidates_per_kf = get_ranged_int(doc, "loop",
                                           "max_candidates_per_kf",
                                           l.max_candidates_per_kf);

  MapLossConfig& ml = opts.pipeline.map_loss;
  check_keys(doc, "map_loss",
             {"lambda_ssim", "lambda_depth", "lambda_reg", "ssim_window"});
  ml.lambda_ssim = doc.get_double("map_loss", "lambda_ssim", ml.lambda_ssim);
  ml.lambda_depth =
      doc.get_double("map_loss", "lambda_depth", ml.lambda_depth);
  ml.lambda_reg = doc.get_double("map_loss", "lambda_reg", ml.lambda_reg);
  ml.ssim_window = get_ranged_int(doc, "map_loss", "ssim_window",
                                  ml.ssim_window);

  MapOptimConfig& mo = opts.pipeline.map_optim;
  check_keys(doc, "map_optim",
             {"lr_mean", "lr_rotation", "lr_log_scales", "lr_opacity",
              "lr_color", "beta1", "beta2", "adam_eps", "seed"});
  mo.lr_mean = doc.get_double("map_optim", "lr_mean", mo.lr_mean);
  mo.lr_rotation = doc.get_double("map_optim", "lr_rotation",
                                  mo.lr_rotation);
  mo.lr_log_scales =
      doc.get_double("map_optim", "lr_log_scales", mo.lr_log_scales);
  mo.lr_opacity = doc.get_double("map_optim", "lr_opacity", mo.lr_opacity);
  mo.lr_color = doc.get_double("map_optim", "lr_color", mo.lr_color);
  mo.beta1 = doc.get_double("map_optim", "beta1", mo.beta1);
  mo.beta2 = doc.get_double("map_optim", "beta2", mo.beta2);
  mo.adam_eps = doc.get_double("map_optim", "adam_eps", mo.adam_eps);
  mo.seed = static_cast<std::uint64_t>(
      doc.get_int("map_optim", "seed", static_cast<long long>(mo.seed)));

  check_keys(doc, "harness",
             {"scene", "seed", "map_stride", "map_iters", "ba_cadence",
              "local_ba_radius", "sequential_stages", "disable_fusion",
              "disable_loop_closure", "output_dir", "write_raw_depth"});
  opts.scene = doc.get_string("harness", "scene", opts.scene);
  opts.seed = static_cast<std::uint64_t>(
      doc.get_int("harness", "seed", static_cast<long long>(opts.seed)));
  PipelineConfig& p = opts.pipeline;
  p.map_stride = get_ranged_int(doc, "harness", "map_stride", p.map_stride);
  p.map_iters = get_ranged_int(doc, "harness", "map_iters", p.map_iters);
  p.ba_cadence = get_ranged_int(doc, "harness", "ba_cadence", p.ba_cadence);
  p.local_ba_radius = get_ranged_int(doc, "harness", "local_ba_radius",
                                     p.local_ba_radius);
  p.sequential_stages =
      doc.get_bool("harness", "sequential_stages", p.sequential_stages);
  p.disable_fusion =
      doc.get_bool("harness", "disable_fusion", p.disable_fusion);
  p.disable_loop_closure = doc.get_bool("harness", "disable_loop_closure",
                                        p.disable_loop_closure);
  p.output_dir = doc.get_string("harness", "output_dir", p.output_dir);
  p.write_raw_depth =
      doc.get_bool("harness", "write_raw_depth", p.write_raw_depth);
  return opts;
}

}  // namespace splatfuse
