#include "navcrafter/collision_planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "navcrafter/errors.hpp"
#include "navcrafter/rng.hpp"

namespace navcrafter {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kHingeTolerance = 1e-9;

double hinge_of(std::span<const Vec3> centers, const SpatialIndex& index, double r_safe) {
  double cost = 0.0;
  for (const Vec3& c : centers) cost += std::max(0.0, r_safe - index.min_distance(c));
  return cost;
}

double smoothness_of(std::span<const Vec3> centers) {
  double cost = 0.0;
  for (std::size_t t = 0; t + 1 < centers.size(); ++t)
    cost += squared_distance(centers[t + 1], centers[t]);
  return cost;
}

std::vector<Vec3> centers_of(const Trajectory& traj) {
  std::vector<Vec3> c;
  c.reserve(traj.size());
  for (const CameraPose& p : traj.poses) c.push_back(p.center);
  return c;
}

}  // namespace

CollisionDetector::CollisionDetector(const PointCloud& cloud, double r_safe)
    : index_(build_index(cloud)), r_safe_(r_safe) {
  if (!(r_safe > 0.0)) throw DomainError("collision detector: r_safe must be positive");
}

bool check_pose(const CollisionDetector& det, const CameraPose& pose) {
  return det.collides(pose.center);
}

bool check_trajectory(const CollisionDetector& det, const Trajectory& traj) {
  for (const CameraPose& p : traj.poses)
    if (det.collides(p.center)) return true;
  return false;
}

double score_view(const VisibilityMask& mask, double overlap_min) {
  if (mask.fill_ratio < overlap_min) return kNegInf;
  return static_cast<double>(mask.empty_count());
}

NbvChoice select_nbv(std::span<const CameraPose> candidates, std::span<const double> scores) {
  if (candidates.size() != scores.size())
    throw DomainError("select_nbv: candidate and score counts differ");
  if (candidates.empty()) throw DomainError("select_nbv: no candidates");
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) continue;
    if (!best || scores[i] > scores[*best]) best = i;
  }
  if (!best) throw NoViableCandidate("select_nbv: no viable candidate");
  return {*best, candidates[*best]};
}

double hinge_collision_cost(const Trajectory& traj, const SpatialIndex& index, double r_safe) {
  return hinge_of(centers_of(traj), index, r_safe);
}

double smoothness_cost(const Trajectory& traj) {
  if (traj.size() < 2) throw DomainError("smoothness_cost: trajectory needs at least 2 poses");
  return smoothness_of(centers_of(traj));
}

OptimizerResult optimize_trajectory(const Trajectory& traj, const CollisionDetector& det,
                                    const Vec3& scene_center, const OptimizerOptions& options) {
  if (traj.size() < 2) throw DomainError("optimize_trajectory: trajectory needs at least 2 poses");
  if (!(options.lambda >= 0.0) || !(options.step > 0.0) || options.max_iters < 1)
    throw DomainError("optimize_trajectory: invalid options");
  if (check_pose(det, traj.poses.front()) || check_pose(det, traj.poses.back()))
    throw DomainError("optimize_trajectory: trajectory endpoints collide");

  const SpatialIndex& index = det.index();
  const double r = det.r_safe();
  // The descent pushes against a radius inflated by one step so points settle
  // strictly outside r_safe instead of chattering on the boundary.
  const double r_push = r + options.step;
  const double lambda = options.lambda;

  OptimizerResult result;
  result.trajectory = traj;
  std::vector<Vec3> centers = centers_of(traj);
  double hinge = hinge_of(centers, index, r);
  result.initial_hinge = hinge;
  result.hinge_history.push_back(hinge);

  auto surrogate = [&](std::span<const Vec3> c) {
    return hinge_of(c, index, r_push) + lambda * smoothness_of(c);
  };

  const std::size_t n = centers.size();
  std::vector<Vec3> grad(n, Vec3::Zero());
  std::vector<Vec3> trial(n);
  int it = 0;
  for (; it < options.max_iters && hinge > kHingeTolerance; ++it) {
    for (std::size_t t = 1; t + 1 < n; ++t) {
      Vec3 g = 2.0 * lambda * (2.0 * centers[t] - centers[t - 1] - centers[t + 1]);
      const auto near = index.nearest(centers[t]);
      const double d = std::sqrt(near.squared_distance);
      if (d < r_push) {
        Vec3 away = d > 0.0 ? Vec3((centers[t] - near.position) / d)
                            : Vec3(centers[t] - scene_center);
        if (!(away.norm() > 0.0)) away = options.up;
        g -= away.normalized();
      }
      grad[t] = g;
    }

    const double current = surrogate(centers);
    bool accepted = false;
    double alpha = options.step;
    for (int halving = 0; halving < 12 && !accepted; ++halving, alpha *= 0.5) {
      trial = centers;
      for (std::size_t t = 1; t + 1 < n; ++t) trial[t] = centers[t] - alpha * grad[t];
      const double trial_hinge = hinge_of(trial, index, r);
      if (trial_hinge > hinge) continue;
      if (trial_hinge < hinge || surrogate(trial) < current) {
        centers.swap(trial);
        hinge = trial_hinge;
        accepted = true;
      }
    }
    if (!accepted) break;
    result.hinge_history.push_back(hinge);
  }
  result.iterations = it;
  result.final_hinge = hinge;
  if (result.hinge_history.size() == 1) return result;  // nothing moved

  for (std::size_t t = 1; t + 1 < n; ++t)
    result.trajectory.poses[t] = look_at(centers[t], scene_center, options.up);
  return result;
}

void PlannerConfig::validate() const {
  if (n_steps < 0) throw DomainError("planner: n_steps must be >= 0");
  if (k_candidates < 1) throw DomainError("planner: k_candidates must be >= 1");
  if (!(r_safe > 0.0)) throw DomainError("planner: r_safe must be positive");
  if (!(lambda >= 0.0)) throw DomainError("planner: lambda must be >= 0");
  if (frames_per_segment < 2) throw DomainError("planner: frames_per_segment must be >= 2");
  if (!(overlap_min >= 0.0 && overlap_min <= 1.0))
    throw DomainError("planner: overlap_min must lie in [0, 1]");
  if (!(effective_opt_step() > 0.0)) throw DomainError("planner: opt_step must be positive");
  if (opt_max_iters < 1) throw DomainError("planner: opt_max_iters must be >= 1");
  if (!(voxel_size > 0.0)) throw DomainError("planner: voxel_size must be positive");
  if (!(point_radius_px >= 0.0)) throw DomainError("planner: point_radius_px must be >= 0");
}

namespace {

struct CandidateSet {
  std::vector<CameraPose> poses;
  std::vector<double> scores;
  std::vector<bool> collides;
  std::vector<double> fill;
};

CandidateSet evaluate_candidates(const PointCloud& cloud, const CollisionDetector& det,
                                 const Vec3& scene_center, const CameraPose& curr,
                                 const Intrinsics& intr, const SearchSpace& space,
                                 std::uint64_t seed, const PlannerConfig& config) {
  CandidateSet set;
  set.poses = sample_candidates(scene_center, curr, config.k_candidates, space, seed);
  for (const CameraPose& cand : set.poses) {
    const bool hit = config.collision_aware && check_pose(det, cand);
    set.collides.push_back(hit);
    if (hit) {
      set.scores.push_back(kNegInf);
      set.fill.push_back(0.0);
      continue;
    }
    const MaskRender r = render_mask(cloud, cand, intr, config.point_radius_px);
    set.scores.push_back(score_view(r.mask, config.overlap_min));
    set.fill.push_back(r.mask.fill_ratio);
  }
  return set;
}

// One merge of all back-projected views; first-come voxel dedup makes this
// equal to merging the views one after another.
PointCloud absorb(const PointCloud& cloud, std::span<const AnnotatedView> views, double voxel) {
  PointCloud added;
  for (const AnnotatedView& v : views) {
    PointCloud p = back_project(v.depth, v.pose, v.intrinsics, &v.image);
    added.positions.insert(added.positions.end(), p.positions.begin(), p.positions.end());
    added.colors.insert(added.colors.end(), p.colors.begin(), p.colors.end());
  }
  return merge(cloud, added, voxel);
}

Vec3 centroid(const PointCloud& cloud) {
  Vec3 sum = Vec3::Zero();
  for (const Vec3& p : cloud.positions) sum += p;
  return sum / static_cast<double>(cloud.size());
}

struct Realized {
  std::size_t index = 0;
  Trajectory trajectory;
  bool optimized = false;
  double hinge_before = 0.0;
  double hinge_after = 0.0;
  int iterations = 0;
};

// Viable candidates are tried best-first (ties by index). A candidate whose
// segment cannot be optimized to zero hinge cost is skipped in favour of the
// next one, so every emitted segment is safe against the current cloud.
std::optional<Realized> realize(const CandidateSet& set, const CameraPose& curr,
                                const CollisionDetector& det, const Vec3& scene_center,
                                const Vec3& up, const PlannerConfig& config,
                                std::vector<std::size_t>& rejected) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < set.scores.size(); ++i)
    if (std::isfinite(set.scores[i])) order.push_back(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return set.scores[a] > set.scores[b]; });

  for (std::size_t i : order) {
    Realized r;
    r.index = i;
    r.trajectory = interpolate_trajectory(curr, set.poses[i], config.frames_per_segment);
    r.hinge_before = hinge_collision_cost(r.trajectory, det.index(), config.r_safe);
    r.hinge_after = r.hinge_before;
    if (!config.collision_aware || !check_trajectory(det, r.trajectory)) return r;

    OptimizerOptions opts;
    opts.lambda = config.lambda;
    opts.step = config.effective_opt_step();
    opts.max_iters = config.opt_max_iters;
    opts.up = up;
    OptimizerResult opt = optimize_trajectory(r.trajectory, det, scene_center, opts);
    r.optimized = true;
    r.hinge_after = opt.final_hinge;
    r.iterations = opt.iterations;
    if (opt.final_hinge <= kHingeTolerance) {
      r.trajectory = std::move(opt.trajectory);
      return r;
    }
    rejected.push_back(i);
  }
  return std::nullopt;
}

}  // namespace

PlanResult plan(const ViewSynthesizer& oracle, std::span<const AnnotatedView> init_views,
                const PlannerConfig& config) {
  config.validate();
  if (init_views.empty()) throw DomainError("plan: at least one initial view is required");
  const Intrinsics intr = init_views.front().intrinsics;
  intr.validate();
  const Vec3 up = config.search_space.up.normalized();

  PlanResult result;
  PointCloud cloud = absorb(PointCloud{}, init_views, config.voxel_size);
  if (cloud.empty()) throw DomainError("plan: initial views yield an empty point cloud");

  result.scene_center = config.scene_center.value_or(centroid(cloud));
  CameraPose curr = init_views.front().pose;
  SearchSpace space = config.search_space;
  space.up = up;
  space.azimuth_center_deg = to_spherical(result.scene_center, curr.center, up).azimuth_deg;
  result.cloud_history.push_back(cloud);

  auto fail = [&](StepReport report, const std::string& why) {
    result.steps.push_back(std::move(report));
    result.failed = true;
    result.failure_reason = why;
  };

  for (int step = 0; step < config.n_steps; ++step) {
    const CollisionDetector det(cloud, config.r_safe);
    StepReport report;
    report.step = step;
    const std::string tag = "step " + std::to_string(step) + ": ";

    if (config.collision_aware && check_pose(det, curr)) {
      // New geometry landed within r_safe of where the camera already is;
      // no safe segment starts here.
      fail(std::move(report), tag + "current pose collides with the updated cloud");
      break;
    }

    CandidateSet set = evaluate_candidates(cloud, det, result.scene_center, curr, intr, space,
                                           derive_seed(config.seed, step, 0), config);
    std::optional<Realized> chosen =
        realize(set, curr, det, result.scene_center, up, config, report.rejected_unsafe);
    if (!chosen) {
      report.search_expanded = true;
      report.rejected_unsafe.clear();
      set = evaluate_candidates(cloud, det, result.scene_center, curr, intr, space.expanded(),
                                derive_seed(config.seed, step, 1), config);
      chosen = realize(set, curr, det, result.scene_center, up, config, report.rejected_unsafe);
    }
    report.candidates = set.poses;
    report.scores = set.scores;
    report.candidate_collides = set.collides;
    if (!chosen) {
      fail(std::move(report), tag + "no viable candidate after search expansion");
      break;
    }

    report.chosen_index = chosen->index;
    report.chosen = set.poses[chosen->index];
    report.fill_ratio = set.fill[chosen->index];
    report.collision_optimized = chosen->optimized;
    report.hinge_before = chosen->hinge_before;
    report.hinge_after = chosen->hinge_after;
    report.optimizer_iterations = chosen->iterations;
    Trajectory traj = std::move(chosen->trajectory);

    std::vector<AnnotatedView> views =
        oracle.synthesize(traj, intr, static_cast<std::uint64_t>(step) + 1);
    const std::size_t before = cloud.size();
    cloud = absorb(cloud, views, config.voxel_size);
    report.points_added = cloud.size() - before;

    curr = traj.poses.back();
    result.segments.push_back(std::move(traj));
    result.views.push_back(std::move(views));
    result.steps.push_back(std::move(report));
    result.cloud_history.push_back(cloud);
  }
  result.cloud = std::move(cloud);
  return result;
}

}  // namespace navcrafter
