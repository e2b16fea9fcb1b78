#pragma once

#include "navcrafter/camera_geometry.hpp"
#include "navcrafter/pointcloud.hpp"

namespace navcrafter {

inline constexpr double kDefaultTau = 0.02;

struct ReconReport {
  double coverage = 0.0;     // percent
  double noise_ratio = 0.0;  // fraction
  double fscore = 0.0;
  double tau = kDefaultTau;
  double runtime = 0.0;  // seconds
};

/// Percentage of ground-truth points with a prediction within tau.
double coverage(const PointCloud& pred, const PointCloud& gt, double tau = kDefaultTau);
double coverage_serial(const PointCloud& pred, const PointCloud& gt, double tau = kDefaultTau);

/// Fraction of predictions with no ground-truth point within tau.
double noise_ratio(const PointCloud& pred, const PointCloud& gt, double tau = kDefaultTau);
double noise_ratio_serial(const PointCloud& pred, const PointCloud& gt, double tau = kDefaultTau);

/// Harmonic mean of precision (1 - noise ratio) and recall (coverage / 100).
double fscore(const PointCloud& pred, const PointCloud& gt, double tau = kDefaultTau);
double fscore_from(double coverage_percent, double noise);

/// All three metrics plus wall-clock time spent computing them.
ReconReport evaluate(const PointCloud& pred, const PointCloud& gt, double tau = kDefaultTau);

enum class ScaleNorm { mean, median };

struct PoseErrorReport {
  double r_err = 0.0;  // radians
  double t_err = 0.0;
};

/// Both trajectories are expressed relative to their first frame and their
/// translations divided by the mean (or median) relative-translation norm of
/// frames 1..n-1. Errors are averaged over frames 1..n-1.
PoseErrorReport pose_errors(const Trajectory& estimated, const Trajectory& reference,
                            ScaleNorm norm = ScaleNorm::mean);

}  // namespace navcrafter
