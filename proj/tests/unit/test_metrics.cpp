#include <doctest.h>

#include <cmath>

#include "navcrafter/errors.hpp"
#include "navcrafter/metrics.hpp"
#include "test_support.hpp"

using namespace navcrafter;

namespace {

Trajectory random_walk(std::mt19937_64& rng, int n) {
  Trajectory t;
  CameraPose p = testsupport::random_pose(rng, 1.0);
  for (int i = 0; i < n; ++i) {
    t.poses.push_back(p);
    p.center += testsupport::random_vec(rng, 0.5);
    p.rotation = Eigen::AngleAxisd(testsupport::uni(rng, -0.3, 0.3), testsupport::random_unit(rng))
                     .toRotationMatrix() *
                 p.rotation;
  }
  return t;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("identical and disjoint clouds") {
  std::mt19937_64 rng(151);
  const PointCloud c = testsupport::random_cloud(rng, 300, 1.0);
  CHECK(coverage(c, c) == 100.0);
  CHECK(noise_ratio(c, c) == 0.0);
  CHECK(fscore(c, c) == 1.0);

  PointCloud far = c;
  for (Vec3& p : far.positions) p += Vec3(10, 0, 0);
  CHECK(coverage(far, c) == 0.0);
  CHECK(noise_ratio(far, c) == 1.0);
  CHECK(fscore(far, c) == 0.0);

  PointCloud subset;
  subset.positions.assign(c.positions.begin(), c.positions.begin() + 50);
  CHECK(noise_ratio(subset, c) == 0.0);
}

TEST_CASE("F-score arithmetic") {
  CHECK(fscore_from(50.0, 0.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(fscore_from(0.0, 1.0) == 0.0);
}

TEST_CASE("cloud metrics equal the all-pairs oracle") {
  std::mt19937_64 rng(157);
  for (int trial = 0; trial < 10; ++trial) {
    const auto n = 100 + rng() % 900, m = 100 + rng() % 900;
    const PointCloud pred = testsupport::random_cloud(rng, n, 0.5);
    const PointCloud gt = testsupport::random_cloud(rng, m, 0.5);
    for (double tau : {0.02, 0.05, 0.1}) {
      const double cov = testsupport::brute_coverage(pred, gt, tau);
      const double noise = testsupport::brute_noise(pred, gt, tau);
      CHECK(coverage(pred, gt, tau) == cov);
      CHECK(noise_ratio(pred, gt, tau) == noise);
      CHECK(coverage_serial(pred, gt, tau) == cov);
      CHECK(noise_ratio_serial(pred, gt, tau) == noise);
      CHECK(fscore(pred, gt, tau) == fscore_from(cov, noise));
    }
  }
}

TEST_CASE("metrics are monotone in tau") {
  std::mt19937_64 rng(163);
  const PointCloud pred = testsupport::random_cloud(rng, 500, 0.5);
  const PointCloud gt = testsupport::random_cloud(rng, 500, 0.5);
  double cov = -1, noise = 2;
  for (double tau = 0.005; tau < 0.2; tau *= 1.5) {
    const double c = coverage(pred, gt, tau), n = noise_ratio(pred, gt, tau);
    CHECK(c >= cov);
    CHECK(n <= noise);
    cov = c;
    noise = n;
  }
}

TEST_CASE("metric preconditions") {
  PointCloud one;
  one.positions.push_back(Vec3::Zero());
  CHECK_THROWS_AS(coverage(one, PointCloud{}), DomainError);
  CHECK_THROWS_AS(noise_ratio(PointCloud{}, one), DomainError);
  CHECK_THROWS_AS(coverage(one, one, 0.0), DomainError);
  CHECK(coverage(PointCloud{}, one) == 0.0);
  CHECK(noise_ratio(one, PointCloud{}) == 1.0);
  const ReconReport r = evaluate(one, one);
  CHECK(r.coverage == 100.0);
  CHECK(r.tau == kDefaultTau);
  CHECK(r.runtime >= 0.0);
}

TEST_CASE("pose errors vanish on identical trajectories") {
  std::mt19937_64 rng(167);
  const Trajectory t = random_walk(rng, 10);
  const PoseErrorReport e = pose_errors(t, t);
  CHECK(e.r_err == 0.0);
  CHECK(e.t_err == 0.0);
}

TEST_CASE("constant rotation perturbation is recovered exactly") {
  std::mt19937_64 rng(173);
  for (double theta : {0.01, 0.3, 1.2, 2.9}) {
    const Trajectory ref = random_walk(rng, 8);
    const Vec3 axis = testsupport::random_unit(rng);
    const Mat3 delta = Eigen::AngleAxisd(theta, axis).toRotationMatrix();
    // After alignment to the first frame, frame i's relative rotation is
    // R_0^T R_i; perturbing it by delta means R_i' = R_0 (R_0^T R_i) delta.
    Trajectory est = ref;
    for (std::size_t i = 1; i < est.size(); ++i) est.poses[i].rotation = ref.poses[i].rotation * delta;
    const PoseErrorReport e = pose_errors(est, ref);
    CHECK(std::abs(e.r_err - theta) <= 1e-9);
    CHECK(e.t_err <= 1e-12);
  }
}

TEST_CASE("pose errors ignore scale and global rigid motion") {
  std::mt19937_64 rng(179);
  const Trajectory ref = random_walk(rng, 9);
  Trajectory est = random_walk(rng, 9);
  const PoseErrorReport base = pose_errors(est, ref);

  Trajectory scaled = est;
  for (CameraPose& p : scaled.poses) p.center *= 3.0;
  const PoseErrorReport s = pose_errors(scaled, ref);
  CHECK(s.t_err == doctest::Approx(base.t_err).epsilon(1e-12));
  CHECK(s.r_err == doctest::Approx(base.r_err).epsilon(1e-12));

  const Mat3 g = testsupport::random_rotation(rng);
  const Vec3 shift(1, -2, 0.5);
  Trajectory moved_e = est, moved_r = ref;
  for (CameraPose& p : moved_e.poses) {
    p.rotation = g * p.rotation;
    p.center = g * p.center + shift;
  }
  for (CameraPose& p : moved_r.poses) {
    p.rotation = g * p.rotation;
    p.center = g * p.center + shift;
  }
  const PoseErrorReport m = pose_errors(moved_e, moved_r);
  CHECK(m.t_err == doctest::Approx(base.t_err).epsilon(1e-9));
  CHECK(m.r_err == doctest::Approx(base.r_err).epsilon(1e-9));

  const PoseErrorReport med = pose_errors(est, ref, ScaleNorm::median);
  CHECK(med.r_err == base.r_err);
}

TEST_CASE("pose error preconditions") {
  std::mt19937_64 rng(181);
  const Trajectory a = random_walk(rng, 5), b = random_walk(rng, 6);
  CHECK_THROWS_AS(pose_errors(a, b), DegenerateInputError);
  Trajectory still = a;
  for (CameraPose& p : still.poses) p.center = Vec3::Zero();
  CHECK_THROWS_AS(pose_errors(still, a), DegenerateInputError);
}

}  // TEST_SUITE
