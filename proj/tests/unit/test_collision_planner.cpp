#include <doctest.h>

#include <cmath>
#include <limits>

#include "navcrafter/collision_planner.hpp"
#include "navcrafter/errors.hpp"
#include "navcrafter/metrics.hpp"
#include "test_support.hpp"

using namespace navcrafter;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

PointCloud single(const Vec3& p) {
  PointCloud c;
  c.positions.push_back(p);
  return c;
}

Trajectory line(const Vec3& a, const Vec3& b, int n, const Vec3& target) {
  Trajectory t;
  for (int i = 0; i < n; ++i) {
    const double s = static_cast<double>(i) / (n - 1);
    t.poses.push_back(look_at((1 - s) * a + s * b, target));
  }
  return t;
}

VisibilityMask mask_with(int w, int h, std::size_t filled) {
  std::vector<std::uint8_t> f(static_cast<std::size_t>(w) * h, 0);
  for (std::size_t i = 0; i < filled; ++i) f[i] = 1;
  return make_visibility_mask(w, h, std::move(f));
}

SyntheticScene ball_scene() {
  SyntheticScene s;
  Sphere ball;
  ball.center = Vec3::Zero();
  ball.radius = 1.0;
  s.primitives.push_back(ball);
  return s;
}

Intrinsics k48() {
  Intrinsics k;
  k.width = k.height = 48;
  k.fx = k.fy = 40;
  k.cx = k.cy = 24;
  return k;
}

}  // namespace

TEST_SUITE("collision_planner") {

TEST_CASE("collision checks use a strict inequality") {
  const CollisionDetector empty(PointCloud{}, 0.3);
  CHECK_FALSE(check_pose(empty, look_at(Vec3(1, 0, 0), Vec3::Zero())));

  const CollisionDetector det(single(Vec3::Zero()), 0.5);
  CameraPose at_point;
  CHECK(check_pose(det, at_point));
  CameraPose boundary;
  boundary.center = Vec3(0.5, 0, 0);
  CHECK_FALSE(check_pose(det, boundary));
  CHECK_THROWS_AS(CollisionDetector(PointCloud{}, 0.0), DomainError);
}

TEST_CASE("score_view gates on overlap and counts empty pixels") {
  CHECK(score_view(mask_with(8, 8, 64), 0.3) == 0.0);
  CHECK(score_view(mask_with(8, 8, 0), 0.3) == -kInf);
  const std::size_t filled = static_cast<std::size_t>(0.6 * 4096);
  CHECK(score_view(mask_with(64, 64, filled), 0.3) == static_cast<double>(4096 - filled));
}

TEST_CASE("select_nbv takes the first maximum") {
  const std::vector<CameraPose> c(3);
  CHECK(select_nbv(c, std::vector<double>{1, 5, 3}).index == 1);
  CHECK(select_nbv(std::span(c).first(2), std::vector<double>{7, 7}).index == 0);
  CHECK_THROWS_AS(select_nbv(c, std::vector<double>{-kInf, -kInf, -kInf}), NoViableCandidate);
  CHECK_THROWS_AS(select_nbv(c, std::vector<double>{1, 2}), DomainError);
}

TEST_CASE("select_nbv is invariant under increasing transforms") {
  std::mt19937_64 rng(61);
  const std::vector<CameraPose> c(12);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> s, t;
    for (int i = 0; i < 12; ++i) {
      const double v = std::floor(testsupport::uni(rng, 0, 6));
      s.push_back(v);
      t.push_back(std::exp(0.5 * v) + 3.0);
    }
    CHECK(select_nbv(c, s).index == select_nbv(c, t).index);
  }
}

TEST_CASE("hinge cost") {
  const PointCloud c = single(Vec3::Zero());
  const SpatialIndex idx = build_index(c);
  const double r = 0.4;
  CHECK(hinge_collision_cost(line(Vec3(1, 0, 0), Vec3(2, 0, 0), 5, Vec3(5, 5, 5)), idx, r) == 0.0);

  Trajectory one;
  one.poses.push_back(look_at(Vec3(0.2, 0, 0), Vec3(5, 0, 0)));
  CHECK(hinge_collision_cost(one, idx, r) == doctest::Approx(0.2).epsilon(1e-15));

  std::mt19937_64 rng(67);
  const PointCloud cloud = testsupport::random_cloud(rng, 200, 1.0);
  const SpatialIndex big = build_index(cloud);
  const Trajectory t = line(Vec3(-1, -1, 0), Vec3(1, 1, 0.2), 3, Vec3(0, 0, 5));
  double oracle = 0.0;
  for (const CameraPose& p : t.poses)
    oracle += std::max(0.0, 0.3 - testsupport::brute_min_distance(cloud, p.center));
  CHECK(hinge_collision_cost(t, big, 0.3) == oracle);
}

TEST_CASE("smoothness cost") {
  const CameraPose a = look_at(Vec3(1, 0, 0), Vec3::Zero());
  Trajectory same;
  same.poses = {a, a, a};
  CHECK(smoothness_cost(same) == 0.0);
  CHECK(smoothness_cost(line(Vec3::Zero(), Vec3(1, 0, 0), 2, Vec3(0, 5, 0))) == 1.0);
  const double L = 3.0;
  const int n = 7;
  CHECK(smoothness_cost(line(Vec3::Zero(), Vec3(0, L, 0), n, Vec3(5, 0, 0))) ==
        doctest::Approx(L * L / (n - 1)).epsilon(1e-12));
  Trajectory short_t;
  short_t.poses = {a};
  CHECK_THROWS_AS(smoothness_cost(short_t), DomainError);
}

TEST_CASE("optimizer leaves a safe trajectory alone") {
  const CollisionDetector det(single(Vec3(0, 5, 0)), 0.3);
  const Trajectory t = line(Vec3(-1, 0, 0), Vec3(1, 0, 0), 9, Vec3(0, 0, 3));
  const OptimizerResult r = optimize_trajectory(t, det, Vec3(0, 0, 3), {});
  CHECK(r.trajectory == t);
  CHECK(r.final_hinge == 0.0);
}

TEST_CASE("optimizer clears a single-point obstacle") {
  const double r_safe = 0.3;
  const Vec3 obstacle(0, 0.5 * r_safe, 0);
  const CollisionDetector det(single(obstacle), r_safe);
  const Vec3 center(0, 0, 3);
  const Trajectory t = line(Vec3(-1, 0, 0), Vec3(1, 0, 0), 21, center);
  OptimizerOptions opts;
  opts.step = 0.05 * r_safe;
  const OptimizerResult r = optimize_trajectory(t, det, center, opts);

  CHECK(r.final_hinge <= 1e-9);
  CHECK(r.trajectory.poses.front() == t.poses.front());
  CHECK(r.trajectory.poses.back() == t.poses.back());
  for (const CameraPose& p : r.trajectory.poses) {
    CHECK((p.center - obstacle).norm() >= r_safe - 1e-6);
    CHECK(p.is_valid(1e-9));
  }
  for (std::size_t i = 1; i < r.hinge_history.size(); ++i)
    CHECK(r.hinge_history[i] <= r.hinge_history[i - 1]);
}

TEST_CASE("a heavier smoothness weight gives a smoother path") {
  const double r_safe = 0.3;
  const CollisionDetector det(single(Vec3(0.1, 0.05, 0)), r_safe);
  const Vec3 center(0, 0, 3);
  const Trajectory t = line(Vec3(-1, 0, 0), Vec3(1, 0, 0), 21, center);
  OptimizerOptions loose, stiff;
  loose.lambda = 0.0;
  stiff.lambda = 10.0;
  loose.step = stiff.step = 0.05 * r_safe;
  const OptimizerResult a = optimize_trajectory(t, det, center, loose);
  const OptimizerResult b = optimize_trajectory(t, det, center, stiff);
  CHECK(smoothness_cost(b.trajectory) <= smoothness_cost(a.trajectory));
}

TEST_CASE("optimizer rejects colliding endpoints") {
  const CollisionDetector det(single(Vec3(-1, 0, 0)), 0.3);
  const Trajectory t = line(Vec3(-1, 0, 0), Vec3(1, 0, 0), 5, Vec3(0, 0, 3));
  CHECK_THROWS_AS(optimize_trajectory(t, det, Vec3(0, 0, 3), {}), DomainError);
}

TEST_CASE("planner config validation") {
  PlannerConfig c;
  CHECK_NOTHROW(c.validate());
  c.n_steps = 0;
  CHECK_NOTHROW(c.validate());
  c.k_candidates = 0;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = PlannerConfig{};
  c.lambda = -1;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = PlannerConfig{};
  c.opt_max_iters = 0;
  CHECK_THROWS_AS(c.validate(), DomainError);
}

TEST_CASE("zero steps returns the initial cloud only") {
  const SyntheticOracle oracle(ball_scene());
  const Trajectory init{{look_at(Vec3(-3, 0, 0.5), Vec3::Zero())}};
  const auto views = oracle.synthesize(init, k48(), 0);
  PlannerConfig c;
  c.n_steps = 0;
  const PlanResult r = plan(oracle, views, c);
  CHECK(r.segments.empty());
  CHECK(r.steps.empty());
  CHECK_FALSE(r.failed);
  CHECK(r.cloud.size() == views[0].depth.valid_count());
}

TEST_CASE("planning around a ball is safe, grows coverage and is reproducible") {
  const SyntheticScene scene = ball_scene();
  const SyntheticOracle oracle(scene);
  const Trajectory init{{look_at(Vec3(-3, 0, 0.5), Vec3::Zero())}};
  const auto views = oracle.synthesize(init, k48(), 0);
  PlannerConfig c;
  c.n_steps = 3;
  c.k_candidates = 3;
  c.seed = 5;
  c.frames_per_segment = 9;
  c.scene_center = Vec3::Zero();
  // The ball fills about a quarter of the frame, below the default 0.3.
  c.overlap_min = 0.1;
  const PlanResult r = plan(oracle, views, c);
  INFO(r.failure_reason);
  REQUIRE_FALSE(r.failed);
  REQUIRE(r.segments.size() == 3);

  for (std::size_t s = 0; s < r.segments.size(); ++s) {
    const SpatialIndex idx = build_index(r.cloud_history[s]);
    CHECK(hinge_collision_cost(r.segments[s], idx, c.r_safe) == 0.0);
  }
  const PointCloud gt = gt_cloud(scene, 2000.0, 1);
  double last = -1.0;
  for (const PointCloud& cloud : r.cloud_history) {
    const double cov = coverage(cloud, gt, 0.05);
    CHECK(cov >= last);
    last = cov;
  }
  CHECK(coverage(r.cloud, gt, 0.05) > coverage(r.cloud_history.front(), gt, 0.05));

  const PlanResult again = plan(oracle, views, c);
  CHECK(again.cloud == r.cloud);
  REQUIRE(again.segments.size() == r.segments.size());
  for (std::size_t s = 0; s < r.segments.size(); ++s) CHECK(again.segments[s] == r.segments[s]);
}

TEST_CASE("with nothing in the way the baseline picks the same views") {
  const SyntheticOracle oracle(ball_scene());
  const Trajectory init{{look_at(Vec3(-3, 0, 0.5), Vec3::Zero())}};
  const auto views = oracle.synthesize(init, k48(), 0);
  PlannerConfig c;
  c.frames_per_segment = 9;
  c.seed = 9;
  c.overlap_min = 0.1;
  const PlanResult aware = plan(oracle, views, c);
  c.collision_aware = false;
  const PlanResult base = plan(oracle, views, c);
  REQUIRE_FALSE(aware.failed);
  REQUIRE_FALSE(base.failed);
  REQUIRE(aware.steps.size() == 3);
  REQUIRE(aware.steps.size() == base.steps.size());
  for (std::size_t i = 0; i < aware.steps.size(); ++i)
    CHECK(aware.steps[i].chosen == base.steps[i].chosen);
  CHECK(aware.cloud == base.cloud);
}

TEST_CASE("a candidate set with no overlap fails the plan without throwing") {
  // overlap_min = 1 can never be met by a partial view.
  const SyntheticOracle oracle(ball_scene());
  const Trajectory init{{look_at(Vec3(-3, 0, 0.5), Vec3::Zero())}};
  const auto views = oracle.synthesize(init, k48(), 0);
  PlannerConfig c;
  c.overlap_min = 1.0;
  const PlanResult r = plan(oracle, views, c);
  CHECK(r.failed);
  REQUIRE(r.steps.size() == 1);
  CHECK(r.steps[0].search_expanded);
  CHECK(r.segments.empty());
}

}  // TEST_SUITE
