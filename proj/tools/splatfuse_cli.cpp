#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "splatfuse/gsmap/gaussian_map.hpp"
#include "splatfuse/gsmap/render.hpp"
#include "splatfuse/harness/config.hpp"
#include "splatfuse/io/png_io.hpp"
#include "splatfuse/io/tum_io.hpp"

namespace {

using namespace splatfuse;
namespace fs = std::filesystem;

std::string id_tag(std::size_t id) {
  std::ostringstream os;
  os << std::setw(4) << std::setfill('0') << id;
  return os.str();
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

struct CommonArgs {
  std::string config_path;
  std::string scene;
  std::uint64_t seed = 0;
  std::string output_dir;
};

// File values first, then any flag the user actually passed on top.
RunOptions resolve_options(const CLI::App* cmd, const CommonArgs& args) {
  RunOptions opts;
  if (!args.config_path.empty())
    opts = load_run_options(TomlDoc::parse_file(args.config_path));
  if (cmd->count("--scene")) opts.scene = args.scene;
  if (cmd->count("--seed")) opts.seed = args.seed;
  if (cmd->count("--output")) opts.pipeline.output_dir = args.output_dir;
  return opts;
}

int cmd_simulate(const RunOptions& opts) {
  if (opts.pipeline.output_dir.empty())
    throw ConfigError("simulate requires --output");
  const GeneratedSequence seq = generate_sequence(
      make_scene_by_name(opts.scene), make_spec_by_name(opts.scene, opts.seed));
  const std::string& dir = opts.pipeline.output_dir;
  fs::create_directories(dir);
  std::vector<TimedPose> gt, init;
  for (const Frame& frame : seq.frames) {
    const std::string tag = id_tag(frame.id);
    write_png_rgb8(join(dir, "image_" + tag + ".png"), frame.image);
    write_png_gray16(join(dir, "depth_gt_" + tag + ".png"), frame.gt_depth,
                     kDepthPngScale);
    write_png_gray16(join(dir, "prior_" + tag + ".png"), frame.mono_prior,
                     kDepthPngScale);
    GridD mv_depth(frame.mv_inv_depth.width(), frame.mv_inv_depth.height());
    for (std::size_t i = 0; i < mv_depth.size(); ++i)
      mv_depth[i] = 1.0 / frame.mv_inv_depth[i];
    write_png_gray16(join(dir, "depth_mv_" + tag + ".png"), mv_depth,
                     kDepthPngScale);
    gt.push_back({frame.timestamp, frame.gt_pose});
    init.push_back({frame.timestamp, frame.init_pose});
  }
  write_trajectory(join(dir, "trajectory_gt.txt"), gt);
  write_trajectory(join(dir, "trajectory_init.txt"), init);
  std::cout << "wrote " << seq.frames.size() << " frames and "
            << seq.edges.size() << " flow edges' worth of imagery to " << dir
            << "\n";
  return 0;
}

int cmd_run(const RunOptions& opts) {
  const RunReport report = run_pipeline(make_scene_by_name(opts.scene),
                                        make_spec_by_name(opts.scene,
                                                          opts.seed),
                                        opts.pipeline);
  std::cout << report_to_json(report);
  return 0;
}

struct EvaluateArgs {
  std::string est_traj, gt_traj;
  std::string alignment = "rigid";
  std::string est_depth, gt_depth;
  double max_range = -1.0;
  std::string est_image, gt_image;
};

int cmd_evaluate(const EvaluateArgs& args) {
  nlohmann::ordered_json j;
  bool any = false;
  if (!args.est_traj.empty() || !args.gt_traj.empty()) {
    if (args.est_traj.empty() || args.gt_traj.empty())
      throw ConfigError("evaluate: trajectories must be given as a pair");
    AteAlignment mode;
    if (args.alignment == "none") mode = AteAlignment::kNone;
    else if (args.alignment == "rigid") mode = AteAlignment::kRigid;
    else if (args.alignment == "similarity") mode = AteAlignment::kSimilarity;
    else throw ConfigError("evaluate: unknown alignment '" + args.alignment +
                           "'");
    std::vector<Pose> est, gt;
    for (const TimedPose& tp : read_trajectory(args.est_traj))
      est.push_back(tp.pose);
    for (const TimedPose& tp : read_trajectory(args.gt_traj))
      gt.push_back(tp.pose);
    const AteResult ate = ate_rmse(est, gt, mode);
    j["ate_rmse"] = ate.rmse;
    j["ate_mean"] = ate.mean;
    j["ate_median"] = ate.median;
    any = true;
  }
  if (!args.est_depth.empty() || !args.gt_depth.empty()) {
    if (args.est_depth.empty() || args.gt_depth.empty())
      throw ConfigError("evaluate: depth maps must be given as a pair");
    const GridD est = read_png_gray16(args.est_depth, kDepthPngScale);
    const GridD gt = read_png_gray16(args.gt_depth, kDepthPngScale);
    j["depth_l1"] = depth_l1(est, gt, args.max_range);
    any = true;
  }
  if (!args.est_image.empty() || !args.gt_image.empty()) {
    if (args.est_image.empty() || args.gt_image.empty())
      throw ConfigError("evaluate: images must be given as a pair");
    const GridV3 est = read_png_rgb8(args.est_image);
    const GridV3 gt = read_png_rgb8(args.gt_image);
    j["psnr"] = std::min(psnr(est, gt), 100.0);
    j["ssim"] = ssim(est, gt);
    any = true;
  }
  if (!any)
    throw ConfigError(
        "evaluate: nothing to do (pass trajectories, depths or images)");
  std::cout << j.dump(2) << "\n";
  return 0;
}

struct RenderArgs {
  std::string map_path;
  std::string trajectory;
  std::string output_dir;
  Camera camera = make_default_camera();
};

int cmd_render(const RenderArgs& args) {
  const GaussianMap map = load_map(args.map_path);
  const std::vector<TimedPose> poses = read_trajectory(args.trajectory);
  if (poses.empty()) throw DomainError("render: empty trajectory");
  args.camera.validate();
  fs::create_directories(args.output_dir);
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const RenderResult r = render(map, args.camera, poses[i].pose);
    const std::string tag = id_tag(i);
    write_png_rgb8(join(args.output_dir, "render_" + tag + ".png"), r.color);
    write_png_gray16(join(args.output_dir, "depth_" + tag + ".png"), r.depth,
                     kDepthPngScale);
  }
  std::cout << "rendered " << poses.size() << " views from "
            << map.gaussians.size() << " gaussians into " << args.output_dir
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Confidence-weighted dense RGB SLAM sandbox: synthetic sequences, "
      "depth fusion, Gaussian map fitting, loop closure."};
  app.require_subcommand(1);

  CommonArgs common;
  EvaluateArgs eval_args;
  RenderArgs render_args;

  CLI::App* sim = app.add_subcommand("simulate",
                                     "Write a synthetic sequence to disk");
  CLI::App* run = app.add_subcommand("run", "Run the full pipeline");
  for (CLI::App* cmd : {sim, run}) {
    cmd->add_option("--config", common.config_path, "TOML config file");
    cmd->add_option("--scene", common.scene, "smoke, corrupt or loop");
    cmd->add_option("--seed", common.seed, "sequence seed");
    cmd->add_option("--output", common.output_dir, "artifact directory");
  }
  // Frequently toggled pipeline knobs; everything else comes from the file.
  int map_iters = 0, map_stride = 0, ba_cadence = 0;
  double covis_min = 0.0;
  bool threaded = false, no_fusion = false, no_loop = false, raw_depth = false;
  run->add_option("--map-iters", map_iters, "map optimization iterations");
  run->add_option("--map-stride", map_stride, "gaussian seeding stride");
  run->add_option("--ba-cadence", ba_cadence,
                  "global BA every N keyframes (0 = end only)");
  run->add_option("--covis-min", covis_min,
                  "loop detection co-visibility threshold");
  run->add_flag("--threaded", threaded, "run mapping on its own thread");
  run->add_flag("--disable-fusion", no_fusion, "ablation: force w_mv = 1");
  run->add_flag("--disable-loop", no_loop, "ablation: skip loop closure");
  run->add_flag("--write-raw-depth", raw_depth, "also dump f32 raw depth");

  CLI::App* eval = app.add_subcommand("evaluate",
                                      "Compute metrics from files");
  eval->add_option("--est-trajectory", eval_args.est_traj,
                   "estimated trajectory (timestamp tx ty tz qx qy qz qw)");
  eval->add_option("--gt-trajectory", eval_args.gt_traj,
                   "ground-truth trajectory");
  eval->add_option("--alignment", eval_args.alignment,
                   "none, rigid or similarity");
  eval->add_option("--est-depth", eval_args.est_depth,
                   "estimated 16-bit depth PNG (5000 units/m)");
  eval->add_option("--gt-depth", eval_args.gt_depth,
                   "ground-truth 16-bit depth PNG");
  eval->add_option("--max-range", eval_args.max_range,
                   "only score ground truth within this range (m)");
  eval->add_option("--est-image", eval_args.est_image, "estimated RGB PNG");
  eval->add_option("--gt-image", eval_args.gt_image, "reference RGB PNG");

  CLI::App* rnd = app.add_subcommand("render",
                                     "Render novel views from a saved map");
  rnd->add_option("--map", render_args.map_path, "CSPL map file")
      ->required();
  rnd->add_option("--trajectory", render_args.trajectory,
                  "poses to render (timestamp tx ty tz qx qy qz qw)")
      ->required();
  rnd->add_option("--output", render_args.output_dir, "output directory")
      ->required();
  rnd->add_option("--fx", render_args.camera.fx, "focal length x");
  rnd->add_option("--fy", render_args.camera.fy, "focal length y");
  rnd->add_option("--cx", render_args.camera.cx, "principal point x");
  rnd->add_option("--cy", render_args.camera.cy, "principal point y");
  rnd->add_option("--width", render_args.camera.width, "image width");
  rnd->add_option("--height", render_args.camera.height, "image height");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage problems count as invalid config
  }

  try {
    if (sim->parsed()) return cmd_simulate(resolve_options(sim, common));
    if (run->parsed()) {
      RunOptions opts = resolve_options(run, common);
      if (run->count("--map-iters")) opts.pipeline.map_iters = map_iters;
      if (run->count("--map-stride")) opts.pipeline.map_stride = map_stride;
      if (run->count("--ba-cadence")) opts.pipeline.ba_cadence = ba_cadence;
      if (run->count("--covis-min"))
        opts.pipeline.loop.covis_overlap_min = covis_min;
      if (threaded) opts.pipeline.sequential_stages = false;
      if (no_fusion) opts.pipeline.disable_fusion = true;
      if (no_loop) opts.pipeline.disable_loop_closure = true;
      if (raw_depth) opts.pipeline.write_raw_depth = true;
      return cmd_run(opts);
    }
    if (eval->parsed()) return cmd_evaluate(eval_args);
    if (rnd->parsed()) return cmd_render(render_args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
