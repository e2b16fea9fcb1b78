#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "navcrafter/camera_geometry.hpp"
#include "navcrafter/pointcloud.hpp"
#include "navcrafter/synthetic_oracle.hpp"

namespace navcrafter {

/// Collision test against the current cloud: a point collides iff its
/// distance to the cloud is strictly below r_safe.
class CollisionDetector {
 public:
  CollisionDetector(const PointCloud& cloud, double r_safe);

  bool collides(const Vec3& p) const { return index_.min_distance(p) < r_safe_; }
  double r_safe() const { return r_safe_; }
  const SpatialIndex& index() const { return index_; }

 private:
  SpatialIndex index_;
  double r_safe_;
};

bool check_pose(const CollisionDetector& det, const CameraPose& pose);
bool check_trajectory(const CollisionDetector& det, const Trajectory& traj);

/// Information gain of a candidate view: the number of empty mask pixels,
/// or -infinity when the filled fraction is below `overlap_min`.
double score_view(const VisibilityMask& mask, double overlap_min);

struct NbvChoice {
  std::size_t index;
  CameraPose pose;
};

/// Highest finite score, lowest index on ties. Throws NoViableCandidate if
/// every score is -infinity.
NbvChoice select_nbv(std::span<const CameraPose> candidates, std::span<const double> scores);

/// Sum over trajectory centers of max(0, r_safe - distance to the cloud).
double hinge_collision_cost(const Trajectory& traj, const SpatialIndex& index, double r_safe);

/// Sum of squared distances between consecutive camera centers.
double smoothness_cost(const Trajectory& traj);

struct OptimizerOptions {
  double lambda = 0.1;
  double step = 0.015;
  int max_iters = 500;
  Vec3 up = Vec3::UnitZ();
};

struct OptimizerResult {
  Trajectory trajectory;
  double initial_hinge = 0.0;
  double final_hinge = 0.0;
  int iterations = 0;
  std::vector<double> hinge_history;  // hinge cost after each accepted step, [0] = initial
};

/// Gradient descent on interior camera centers of
///   hinge(r_safe) + lambda * smoothness
/// with endpoints fixed. Interior rotations are re-derived by look-at toward
/// `scene_center`. Stops once the hinge cost is <= 1e-9 or no step that keeps
/// the hinge cost from increasing can be found.
OptimizerResult optimize_trajectory(const Trajectory& traj, const CollisionDetector& det,
                                    const Vec3& scene_center, const OptimizerOptions& options);

struct PlannerConfig {
  int n_steps = 3;
  int k_candidates = 3;
  double r_safe = 0.3;
  double lambda = 0.1;
  int frames_per_segment = 25;
  double overlap_min = 0.3;
  std::optional<double> opt_step;  // default 0.05 * r_safe
  int opt_max_iters = 500;
  double voxel_size = 0.01;
  std::uint64_t seed = 0;
  double point_radius_px = 1.0;
  /// false reproduces the utility-only baseline: no collision filtering and
  /// no trajectory optimization.
  bool collision_aware = true;
  std::optional<Vec3> scene_center;  // default: centroid of the initial cloud
  SearchSpace search_space;

  void validate() const;
  double effective_opt_step() const { return opt_step.value_or(0.05 * r_safe); }
};

struct StepReport {
  int step = 0;
  std::vector<CameraPose> candidates;
  std::vector<double> scores;
  std::vector<bool> candidate_collides;
  bool search_expanded = false;
  /// Viable candidates skipped because their segment could not be made safe.
  std::vector<std::size_t> rejected_unsafe;
  std::size_t chosen_index = 0;
  CameraPose chosen;
  bool collision_optimized = false;
  double hinge_before = 0.0;
  double hinge_after = 0.0;
  int optimizer_iterations = 0;
  double fill_ratio = 0.0;
  std::size_t points_added = 0;
};

struct PlanResult {
  Vec3 scene_center = Vec3::Zero();
  std::vector<Trajectory> segments;
  std::vector<std::vector<AnnotatedView>> views;  // one list per segment
  PointCloud cloud;
  /// cloud_history[i] is the cloud segment i was planned against;
  /// cloud_history.back() == cloud.
  std::vector<PointCloud> cloud_history;
  std::vector<StepReport> steps;
  bool failed = false;
  std::string failure_reason;
};

/// Collision-aware next-best-view loop. The initial views (one or more,
/// the first being the reference camera) seed the reference cloud. With
/// collision_aware set, the highest-scoring candidate whose segment ends
/// with zero hinge cost is taken; otherwise plain argmax.
PlanResult plan(const ViewSynthesizer& oracle, std::span<const AnnotatedView> init_views,
                const PlannerConfig& config);

}  // namespace navcrafter
