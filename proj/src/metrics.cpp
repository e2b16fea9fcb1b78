#include "navcrafter/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "navcrafter/errors.hpp"
#include "navcrafter/parallel.hpp"

namespace navcrafter {

namespace {

void check_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("metrics: tau must be positive");
}

// Counts queries with at least one reference point within tau.
std::size_t count_matched(const std::vector<Vec3>& queries, const KdTree& ref, double tau,
                          bool parallel) {
  const double tau2 = tau * tau;
  const auto n = static_cast<std::int64_t>(queries.size());
  std::size_t matched = 0;
  if (parallel) {
    NAVCRAFTER_OMP(parallel for reduction(+ : matched) schedule(static))
    for (std::int64_t i = 0; i < n; ++i)
      if (ref.any_within(queries[i], tau2)) ++matched;
  } else {
    for (std::int64_t i = 0; i < n; ++i)
      if (ref.any_within(queries[i], tau2)) ++matched;
  }
  return matched;
}

double coverage_impl(const PointCloud& pred, const PointCloud& gt, double tau, bool parallel) {
  check_tau(tau);
  if (gt.empty()) throw DomainError("coverage: ground-truth cloud is empty");
  if (pred.empty()) return 0.0;
  const KdTree index(pred.positions);
  const std::size_t m = count_matched(gt.positions, index, tau, parallel);
  return 100.0 * static_cast<double>(m) / static_cast<double>(gt.size());
}

double noise_impl(const PointCloud& pred, const PointCloud& gt, double tau, bool parallel) {
  check_tau(tau);
  if (pred.empty()) throw DomainError("noise_ratio: predicted cloud is empty");
  if (gt.empty()) return 1.0;
  const KdTree index(gt.positions);
  const std::size_t m = count_matched(pred.positions, index, tau, parallel);
  return static_cast<double>(pred.size() - m) / static_cast<double>(pred.size());
}

}  // namespace

double coverage(const PointCloud& pred, const PointCloud& gt, double tau) {
  return coverage_impl(pred, gt, tau, true);
}
double coverage_serial(const PointCloud& pred, const PointCloud& gt, double tau) {
  return coverage_impl(pred, gt, tau, false);
}
double noise_ratio(const PointCloud& pred, const PointCloud& gt, double tau) {
  return noise_impl(pred, gt, tau, true);
}
double noise_ratio_serial(const PointCloud& pred, const PointCloud& gt, double tau) {
  return noise_impl(pred, gt, tau, false);
}

double fscore_from(double coverage_percent, double noise) {
  const double p = 1.0 - noise;
  const double r = coverage_percent / 100.0;
  if (p + r == 0.0) return 0.0;
  return 2.0 * p * r / (p + r);
}

double fscore(const PointCloud& pred, const PointCloud& gt, double tau) {
  if (pred.empty() || gt.empty()) throw DomainError("fscore: both clouds must be nonempty");
  return fscore_from(coverage(pred, gt, tau), noise_ratio(pred, gt, tau));
}

ReconReport evaluate(const PointCloud& pred, const PointCloud& gt, double tau) {
  const auto start = std::chrono::steady_clock::now();
  ReconReport r;
  r.tau = tau;
  r.coverage = coverage(pred, gt, tau);
  r.noise_ratio = noise_ratio(pred, gt, tau);
  r.fscore = fscore_from(r.coverage, r.noise_ratio);
  r.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

namespace {

struct Relative {
  std::vector<Mat3> rotations;
  std::vector<Vec3> translations;
};

Relative relative_to_first(const Trajectory& traj, ScaleNorm norm) {
  const CameraPose& f0 = traj.poses.front();
  Relative rel;
  std::vector<double> norms;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const CameraPose& p = traj.poses[i];
    rel.rotations.push_back(f0.rotation.transpose() * p.rotation);
    rel.translations.push_back(f0.rotation.transpose() * (p.center - f0.center));
    if (i > 0) norms.push_back(rel.translations.back().norm());
  }
  double scale = 0.0;
  if (norm == ScaleNorm::mean) {
    for (double n : norms) scale += n;
    scale /= static_cast<double>(norms.size());
  } else {
    std::vector<double> sorted = norms;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    scale = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  }
  if (!(scale > 0.0)) throw DegenerateInputError("pose_errors: zero translation scale");
  for (Vec3& t : rel.translations) t /= scale;
  return rel;
}

}  // namespace

PoseErrorReport pose_errors(const Trajectory& estimated, const Trajectory& reference,
                            ScaleNorm norm) {
  if (estimated.size() != reference.size())
    throw DegenerateInputError("pose_errors: trajectories differ in length");
  if (estimated.size() < 2) throw DegenerateInputError("pose_errors: need at least 2 frames");
  const Relative a = relative_to_first(estimated, norm);
  const Relative b = relative_to_first(reference, norm);
  PoseErrorReport report;
  const std::size_t n = estimated.size();
  for (std::size_t i = 1; i < n; ++i) {
    report.r_err += rotation_angle(a.rotations[i], b.rotations[i]);
    report.t_err += (a.translations[i] - b.translations[i]).norm();
  }
  report.r_err /= static_cast<double>(n - 1);
  report.t_err /= static_cast<double>(n - 1);
  return report;
}

}  // namespace navcrafter
