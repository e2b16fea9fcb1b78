#include "navcrafter/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numbers>

#include "navcrafter/depth_calibration.hpp"
#include "navcrafter/errors.hpp"
#include "navcrafter/gaussian_renderer.hpp"
#include "navcrafter/io.hpp"

namespace navcrafter::cli {

using io::json;

namespace {

template <class T>
void read_opt(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string frame_name(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%03zu", prefix, i);
  return buf;
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  return p.is_absolute() ? p : base / p;
}

}  // namespace

// ---------------------------------------------------------------- scenario

Scenario load_scenario(const fs::path& path) {
  const json j = io::read_json(path);
  Scenario s;
  s.name = j.value("name", path.stem().string());
  s.scene = io::synthetic_scene_from(j);
  if (j.contains("camera")) {
    const json& c = j.at("camera");
    s.intrinsics = io::intrinsics_from(c.at("intrinsics"));
    s.camera.center = io::vec3_from(c.at("center"));
    s.camera.look_at = io::vec3_from(c.at("look_at"));
    if (c.contains("up")) s.camera.up = io::vec3_from(c.at("up"));
    read_opt(c, "pan_deg", s.camera.pan_deg);
    read_opt(c, "pan_frames", s.camera.pan_frames);
    if (s.camera.pan_frames < 0) throw DomainError("scenario: pan_frames must be >= 0");
  }
  if (j.contains("scene_center")) s.scene_center = io::vec3_from(j.at("scene_center"));
  read_opt(j, "gt_density", s.gt_density);
  read_opt(j, "gt_seed", s.gt_seed);
  return s;
}

Trajectory initial_trajectory(const Scenario& s) {
  const CameraPose ref = s.camera.pose();
  Trajectory t;
  t.poses.push_back(ref);
  const Vec3 up = s.camera.up.normalized();
  const int n = s.camera.pan_frames;
  for (int i = 0; i < n; ++i) {
    const double frac = n == 1 ? 0.5 : static_cast<double>(i) / (n - 1);
    const double yaw = (frac - 0.5) * s.camera.pan_deg * std::numbers::pi / 180.0;
    CameraPose p = ref;
    p.rotation = Eigen::AngleAxisd(yaw, up).toRotationMatrix() * ref.rotation;
    t.poses.push_back(p);
  }
  return t;
}

// ---------------------------------------------------------------- config

void RunConfig::set_seed(std::uint64_t s) {
  seed = s;
  planner.seed = s;
  if (noise) noise->seed = s;
}

RunConfig load_run_config(const fs::path& path) {
  const json j = io::read_json(path);
  const fs::path base = path.parent_path();
  RunConfig c;
  c.scene_path = resolve(base, j.at("scene").get<std::string>());
  if (j.contains("out")) c.out = j.at("out").get<std::string>();
  read_opt(j, "tau", c.tau);

  if (j.contains("planner")) {
    const json& p = j.at("planner");
    PlannerConfig& pc = c.planner;
    read_opt(p, "n_steps", pc.n_steps);
    read_opt(p, "k_candidates", pc.k_candidates);
    read_opt(p, "r_safe", pc.r_safe);
    read_opt(p, "lambda", pc.lambda);
    read_opt(p, "frames_per_segment", pc.frames_per_segment);
    read_opt(p, "overlap_min", pc.overlap_min);
    if (p.contains("opt_step")) pc.opt_step = p.at("opt_step").get<double>();
    read_opt(p, "opt_max_iters", pc.opt_max_iters);
    read_opt(p, "voxel_size", pc.voxel_size);
    read_opt(p, "point_radius_px", pc.point_radius_px);
    if (p.contains("scene_center")) pc.scene_center = io::vec3_from(p.at("scene_center"));
    if (p.contains("search_space")) pc.search_space = io::search_space_from(p.at("search_space"));
  }
  if (j.contains("noise")) c.noise = io::noise_model_from(j.at("noise"));
  c.set_seed(j.value("seed", std::uint64_t{0}));
  return c;
}

// ---------------------------------------------------------------- experiment

Experiment run_experiment(const Scenario& scenario, const RunConfig& config) {
  PlannerConfig pc = config.planner;
  if (!pc.scene_center) pc.scene_center = scenario.scene_center;
  const NoiseModel* noise = config.noise ? &*config.noise : nullptr;

  Experiment exp;
  const auto start = std::chrono::steady_clock::now();
  const SyntheticOracle oracle(scenario.scene, config.noise);
  const std::vector<AnnotatedView> init = synthesize_views(
      scenario.scene, initial_trajectory(scenario), scenario.intrinsics, noise, 0);
  exp.plan = plan(oracle, init, pc);
  exp.plan_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  exp.gt = gt_cloud(scenario.scene, scenario.gt_density, scenario.gt_seed);
  exp.report = evaluate(exp.plan.cloud, exp.gt, config.tau);
  for (const PointCloud& c : exp.plan.cloud_history)
    exp.coverage_history.push_back(coverage(c, exp.gt, config.tau));
  return exp;
}

namespace {

json score_json(double s) { return std::isfinite(s) ? json(s) : json(nullptr); }

json step_json(const StepReport& r) {
  json cands = json::array(), scores = json::array(), collides = json::array();
  for (const CameraPose& p : r.candidates) cands.push_back(io::to_json(p));
  for (double s : r.scores) scores.push_back(score_json(s));
  for (bool b : r.candidate_collides) collides.push_back(b);
  return {{"step", r.step},
          {"candidates", cands},
          {"scores", scores},
          {"candidate_collides", collides},
          {"search_expanded", r.search_expanded},
          {"rejected_unsafe", r.rejected_unsafe},
          {"chosen_index", r.chosen_index},
          {"chosen", io::to_json(r.chosen)},
          {"collision_optimized", r.collision_optimized},
          {"hinge_before", r.hinge_before},
          {"hinge_after", r.hinge_after},
          {"optimizer_iterations", r.optimizer_iterations},
          {"fill_ratio", r.fill_ratio},
          {"points_added", r.points_added}};
}

}  // namespace

void write_plan_result(const fs::path& dir, const Experiment& exp, const Intrinsics& intr) {
  fs::create_directories(dir);
  for (const char* stale : {"segments", "views", "cloud.ply", "steps.json", "metrics.json"})
    fs::remove_all(dir / stale);

  const PlanResult& r = exp.plan;
  for (std::size_t s = 0; s < r.segments.size(); ++s) {
    io::write_json(dir / "segments" / (frame_name("segment", s) + ".json"),
                   io::to_json(r.segments[s], intr));
    const fs::path vdir = dir / "views" / frame_name("segment", s);
    for (std::size_t f = 0; f < r.views[s].size(); ++f) {
      const AnnotatedView& v = r.views[s][f];
      io::write_png(vdir / (frame_name("frame", f) + ".png"), v.image);
      io::write_depth(vdir / (frame_name("frame", f) + ".navd"), v.depth);
    }
  }
  io::write_ply(dir / "cloud.ply", r.cloud);

  json steps = json::array();
  for (const StepReport& s : r.steps) steps.push_back(step_json(s));
  io::write_json(dir / "steps.json", {{"scene_center", io::to_json(r.scene_center)},
                                      {"failed", r.failed},
                                      {"failure_reason", r.failure_reason},
                                      {"steps", steps}});
  io::write_json(dir / "metrics.json", {{"coverage", exp.report.coverage},
                                        {"noise_ratio", exp.report.noise_ratio},
                                        {"fscore", exp.report.fscore},
                                        {"tau", exp.report.tau},
                                        {"coverage_history", exp.coverage_history},
                                        {"points", r.cloud.size()},
                                        {"gt_points", exp.gt.size()}});
}

// ---------------------------------------------------------------- commands

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<double> tau;
  std::optional<double> noise_sigma;
  std::optional<double> dropout;
};

void apply(const Overrides& o, RunConfig& c) {
  if (o.out) c.out = *o.out;
  if (o.tau) c.tau = *o.tau;
  if (o.noise_sigma || o.dropout) {
    if (!c.noise) c.noise = NoiseModel{};
    if (o.noise_sigma) c.noise->depth_sigma = *o.noise_sigma;
    if (o.dropout) c.noise->dropout_ratio = *o.dropout;
    c.noise->validate();
  }
  c.set_seed(o.seed.value_or(c.seed));
}

std::string table_row(const std::string& scene, const char* method, std::uint64_t seed,
                      const ReconReport& r) {
  return "| " + scene + " | " + method + " | " + std::to_string(seed) + " | " +
         fmt("%.2f", r.coverage) + " | " + fmt("%.4f", r.noise_ratio) + " | " +
         fmt("%.4f", r.fscore) + " |";
}

int cmd_plan(const std::string& config_path, const Overrides& o, bool collision_aware,
             std::ostream& out) {
  RunConfig c = load_run_config(config_path);
  apply(o, c);
  c.planner.collision_aware = collision_aware;
  const Scenario scenario = load_scenario(c.scene_path);
  const Experiment exp = run_experiment(scenario, c);
  write_plan_result(c.out, exp, scenario.intrinsics);

  const char* method = collision_aware ? "planner" : "baseline";
  for (const StepReport& s : exp.plan.steps) {
    out << "step " << s.step << ": candidate " << s.chosen_index << "/" << s.candidates.size()
        << (s.search_expanded ? " (expanded search)" : "")
        << (s.collision_optimized ? " optimized" : "") << " hinge " << fmt("%.4g", s.hinge_before)
        << " -> " << fmt("%.4g", s.hinge_after) << ", fill " << fmt("%.3f", s.fill_ratio)
        << ", +" << s.points_added << " points\n";
  }
  if (exp.plan.failed) out << "planning stopped early: " << exp.plan.failure_reason << "\n";
  out << "| scene | method | seed | coverage (%) | noise ratio | F-score |\n"
      << "|---|---|---|---|---|---|\n"
      << table_row(scenario.name, method, c.seed, exp.report) << "\n"
      << "plan time " << fmt("%.2f", exp.plan_seconds) << " s, output " << c.out.string() << "\n";
  return 0;
}

PointCloud load_cloud_or_scene(const fs::path& p) {
  if (p.extension() == ".json") {
    const Scenario s = load_scenario(p);
    return gt_cloud(s.scene, s.gt_density, s.gt_seed);
  }
  return io::read_ply(p);
}

int cmd_eval(const std::string& pred_path, const std::string& gt_path, const Overrides& o,
             std::ostream& out) {
  const PointCloud pred = io::read_ply(pred_path);
  const PointCloud gt = load_cloud_or_scene(gt_path);
  const ReconReport r = evaluate(pred, gt, o.tau.value_or(kDefaultTau));
  out << "| coverage (%) | noise ratio | F-score |\n|---|---|---|\n"
      << "| " << fmt("%.2f", r.coverage) << " | " << fmt("%.4f", r.noise_ratio) << " | "
      << fmt("%.4f", r.fscore) << " |\n";
  if (o.out) {
    json j = io::to_json(r);
    j.erase("runtime");
    io::write_json(*o.out, j);
  }
  return 0;
}

int cmd_calibrate(const std::string& dm, const std::string& dv, const std::string& mask_path,
                  const Overrides& o, std::ostream& out) {
  const DepthMap d_m = io::read_depth(dm);
  const DepthMap d_v = io::read_depth(dv);
  const Mask mask = mask_path.empty() ? Mask(d_m.width, d_m.height, true) : io::read_mask(mask_path);
  const CalibrationParams p = calibrate(d_m, d_v, mask);
  const json j = io::to_json(p);
  if (o.out) io::write_json(*o.out, j);
  out << j.dump(2) << "\n";
  return 0;
}

int cmd_render(const std::string& scene_path, const std::string& traj_path,
               const std::string& mode, const Overrides& o, std::ostream& out) {
  const io::TrajectoryFile tf = io::trajectory_from(io::read_json(traj_path));
  const fs::path dir = o.out.value_or("render_out");
  fs::create_directories(dir);
  const auto& poses = tf.trajectory.poses;
  if (mode == "gaussian") {
    const GaussianScene scene = io::gaussian_scene_from(io::read_json(scene_path));
    for (std::size_t f = 0; f < poses.size(); ++f) {
      const GaussianRender r = render_image(scene, poses[f], tf.intrinsics);
      io::write_png(dir / (frame_name("frame", f) + ".png"), r.image);
      io::write_depth(dir / (frame_name("frame", f) + ".navd"), r.depth);
    }
  } else {
    const Scenario s = load_scenario(scene_path);
    std::optional<NoiseModel> noise;
    if (o.noise_sigma || o.dropout) {
      noise = NoiseModel{};
      noise->depth_sigma = o.noise_sigma.value_or(0.0);
      noise->dropout_ratio = o.dropout.value_or(0.0);
      noise->seed = o.seed.value_or(0);
    }
    const auto views =
        synthesize_views(s.scene, tf.trajectory, tf.intrinsics, noise ? &*noise : nullptr, 0);
    for (std::size_t f = 0; f < views.size(); ++f) {
      io::write_png(dir / (frame_name("frame", f) + ".png"), views[f].image);
      io::write_depth(dir / (frame_name("frame", f) + ".navd"), views[f].depth);
    }
  }
  out << "rendered " << poses.size() << " frames (" << mode << ") to " << dir.string() << "\n";
  return 0;
}

int cmd_scene_gen(const std::string& scene_path, const Overrides& o, std::ostream& out) {
  const Scenario s = load_scenario(scene_path);
  const PointCloud gt = gt_cloud(s.scene, s.gt_density, o.seed.value_or(s.gt_seed));
  const fs::path dst = o.out.value_or(s.name + "_gt.ply");
  io::write_ply(dst, gt);
  out << "wrote " << gt.size() << " ground-truth points to " << dst.string() << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Collision-aware next-best-view planning on synthetic scenes", "navcrafter"};
  app.require_subcommand(1);
  Overrides o;
  std::string config, pred, gt, dm, dv, mask, scene, traj, mode = "oracle";

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Random seed");
    sub->add_option("--out", o.out, "Output path");
  };
  auto add_noise = [&](CLI::App* sub) {
    sub->add_option("--noise-sigma", o.noise_sigma, "Relative depth noise of the oracle")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--dropout", o.dropout, "Depth dropout ratio of the oracle")
        ->check(CLI::Range(0.0, 1.0));
  };

  CLI::App* plan_cmd = app.add_subcommand("plan", "Run the collision-aware planner");
  CLI::App* base_cmd =
      app.add_subcommand("baseline-plan", "Run the utility-only baseline (no collision terms)");
  for (CLI::App* sub : {plan_cmd, base_cmd}) {
    sub->add_option("--config", config, "Run configuration JSON")->required();
    sub->add_option("--tau", o.tau, "Match threshold in meters")->check(CLI::PositiveNumber);
    add_common(sub);
    add_noise(sub);
  }

  CLI::App* eval_cmd = app.add_subcommand("eval", "Coverage / noise ratio / F-score of a cloud");
  eval_cmd->add_option("pred", pred, "Predicted PLY")->required();
  eval_cmd->add_option("gt", gt, "Ground-truth PLY or scene JSON")->required();
  eval_cmd->add_option("--tau", o.tau, "Match threshold in meters")->check(CLI::PositiveNumber);
  add_common(eval_cmd);

  CLI::App* cal_cmd = app.add_subcommand("calibrate", "Fit inverse-depth scale and bias");
  cal_cmd->add_option("d_m", dm, "Relative depth (NAVD)")->required();
  cal_cmd->add_option("d_v", dv, "Absolute depth (NAVD)")->required();
  cal_cmd->add_option("mask", mask, "Optional PNG mask, nonzero = use");
  add_common(cal_cmd);

  CLI::App* render_cmd = app.add_subcommand("render", "Render a trajectory");
  render_cmd->add_option("scene", scene, "Scene JSON")->required();
  render_cmd->add_option("trajectory", traj, "Trajectory JSON")->required();
  render_cmd->add_option("--mode", mode, "gaussian or oracle")
      ->check(CLI::IsMember({"gaussian", "oracle"}));
  add_common(render_cmd);
  add_noise(render_cmd);

  CLI::App* gen_cmd = app.add_subcommand("scene-gen", "Write a scene's ground-truth cloud");
  gen_cmd->add_option("scene", scene, "Scene JSON")->required();
  add_common(gen_cmd);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return 1;
  }

  try {
    if (plan_cmd->parsed()) return cmd_plan(config, o, true, out);
    if (base_cmd->parsed()) return cmd_plan(config, o, false, out);
    if (eval_cmd->parsed()) return cmd_eval(pred, gt, o, out);
    if (cal_cmd->parsed()) return cmd_calibrate(dm, dv, mask, o, out);
    if (render_cmd->parsed()) return cmd_render(scene, traj, mode, o, out);
    if (gen_cmd->parsed()) return cmd_scene_gen(scene, o, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace navcrafter::cli
