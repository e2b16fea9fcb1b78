#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "navcrafter/collision_planner.hpp"
#include "navcrafter/metrics.hpp"
#include "navcrafter/synthetic_oracle.hpp"

namespace navcrafter::cli {

namespace fs = std::filesystem;

/// Where the reference camera sits and how the initial clip pans. The clip is
/// the reference view followed by `pan_frames` in-place yaws about `up`
/// spread evenly over [-pan_deg / 2, pan_deg / 2].
struct ReferenceCamera {
  Vec3 center = Vec3(-2.0, 0.0, 1.0);
  Vec3 look_at = Vec3::Zero();
  Vec3 up = Vec3::UnitZ();
  double pan_deg = 0.0;
  int pan_frames = 0;

  CameraPose pose() const { return navcrafter::look_at(center, look_at, up); }
};

/// A synthetic scene together with its camera setup and evaluation settings.
struct Scenario {
  std::string name;
  SyntheticScene scene;
  Intrinsics intrinsics;
  ReferenceCamera camera;
  std::optional<Vec3> scene_center;
  double gt_density = 10000.0;  // surface samples per square meter
  std::uint64_t gt_seed = 0;
};

Scenario load_scenario(const fs::path& path);
Trajectory initial_trajectory(const Scenario& s);

struct RunConfig {
  fs::path scene_path;
  PlannerConfig planner;
  std::optional<NoiseModel> noise;
  fs::path out = "navcrafter_out";
  double tau = kDefaultTau;
  std::uint64_t seed = 0;

  /// Applies `seed` to the planner and the noise model.
  void set_seed(std::uint64_t s);
};

/// Relative paths inside the config resolve against the config's directory.
RunConfig load_run_config(const fs::path& path);

struct Experiment {
  PlanResult plan;
  PointCloud gt;
  ReconReport report;
  std::vector<double> coverage_history;  // one entry per cloud in plan.cloud_history
  double plan_seconds = 0.0;
};

Experiment run_experiment(const Scenario& scenario, const RunConfig& config);

/// Segment trajectories, the final cloud, per-step reports, metrics and
/// every synthesized view (PNG + depth). Output is a pure function of the
/// inputs; timings are not written.
void write_plan_result(const fs::path& dir, const Experiment& exp, const Intrinsics& intr);

/// Entry point shared by the executable and the tests. Returns the process
/// exit status: 0 success, 1 usage error, 2 runtime failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace navcrafter::cli
