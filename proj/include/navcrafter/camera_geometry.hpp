#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace navcrafter {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Pinhole intrinsics in pixels. Pixel (i, j) has its center at the
/// continuous image coordinate (i + 0.5, j + 0.5).
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  void validate() const;
  Mat3 matrix() const;
  Mat3 inverse() const;
};

/// Camera-to-world rigid transform. Camera axes follow the OpenCV
/// convention: x right, y down, z forward.
struct CameraPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 center = Vec3::Zero();

  static CameraPose identity() { return {}; }

  Vec3 forward() const { return rotation.col(2); }
  bool is_valid(double tol = 1e-9) const;
  void validate(double tol = 1e-9) const;

  /// World point to camera frame.
  Vec3 to_camera(const Vec3& world) const { return rotation.transpose() * (world - center); }

  bool operator==(const CameraPose& other) const {
    return rotation == other.rotation && center == other.center;
  }
};

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
};

/// Ordered pose sequence.
struct Trajectory {
  std::vector<CameraPose> poses;

  std::size_t size() const { return poses.size(); }
  bool operator==(const Trajectory& other) const = default;
};

/// How a pixel ray direction is formed.
///  - standard: normalize(R K^-1 [u v 1]^T); the ray starts at the center.
///  - center_offset: normalize(R K^-1 [u v 1]^T + center), the literal
///    printed form of the trajectory encoding. Kept for comparison only.
enum class RayMode { standard, center_offset };

Ray pixel_ray(const CameraPose& pose, const Intrinsics& intr, double u, double v,
              RayMode mode = RayMode::standard);

/// Continuous image coordinate of the center of grid cell (i, j) when an
/// image of intr.width x intr.height is resampled to grid_w x grid_h.
inline Eigen::Vector2d grid_pixel_center(const Intrinsics& intr, int grid_w, int grid_h, int i,
                                         int j) {
  return {(i + 0.5) * intr.width / grid_w, (j + 0.5) * intr.height / grid_h};
}

/// T x H x W grid of 6-vectors (moment, direction).
class PluckerImage {
 public:
  PluckerImage() = default;
  PluckerImage(int frames, int height, int width);

  int frames() const { return frames_; }
  int height() const { return height_; }
  int width() const { return width_; }

  Eigen::Map<Eigen::Matrix<double, 6, 1>> at(int f, int v, int u) {
    return Eigen::Map<Eigen::Matrix<double, 6, 1>>(data_.data() + offset(f, v, u));
  }
  Eigen::Map<const Eigen::Matrix<double, 6, 1>> at(int f, int v, int u) const {
    return Eigen::Map<const Eigen::Matrix<double, 6, 1>>(data_.data() + offset(f, v, u));
  }
  Vec3 moment(int f, int v, int u) const { return at(f, v, u).head<3>(); }
  Vec3 direction(int f, int v, int u) const { return at(f, v, u).tail<3>(); }

  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }

 private:
  std::size_t offset(int f, int v, int u) const {
    return ((static_cast<std::size_t>(f) * height_ + v) * width_ + u) * 6;
  }

  int frames_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

PluckerImage plucker_embed(std::span<const CameraPose> poses, const Intrinsics& intr, int height,
                           int width, RayMode mode = RayMode::standard);

/// Shortest-arc quaternion slerp on rotation, linear on center.
CameraPose slerp_pose(const CameraPose& a, const CameraPose& b, double s);

Trajectory interpolate_trajectory(const CameraPose& a, const CameraPose& b, int n_frames);

/// Pose at `eye` looking at `target`. If the view direction is parallel to
/// `up` a perpendicular fallback up-vector is used.
CameraPose look_at(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitZ());

/// Angular region for candidate sampling around the scene center. Azimuth is
/// measured about `up`, elevation above the plane through the center
/// orthogonal to `up`. The global region spans `azimuth_span_deg` centred on
/// `azimuth_center_deg`; each step moves at most the *_step_deg offsets.
struct SearchSpace {
  double azimuth_center_deg = 0.0;
  double azimuth_span_deg = 90.0;
  double elevation_min_deg = 0.0;
  double elevation_max_deg = 60.0;
  double azimuth_step_deg = 30.0;
  double elevation_step_deg = 15.0;
  Vec3 up = Vec3::UnitZ();

  SearchSpace expanded() const;
};

struct SphericalCoords {
  double radius;
  double azimuth_deg;
  double elevation_deg;
};

SphericalCoords to_spherical(const Vec3& scene_center, const Vec3& point, const Vec3& up);
Vec3 from_spherical(const Vec3& scene_center, const SphericalCoords& s, const Vec3& up);

std::vector<CameraPose> sample_candidates(const Vec3& scene_center, const CameraPose& curr, int k,
                                          const SearchSpace& space, std::uint64_t seed);

/// Geodesic angle between two rotations, radians in [0, pi].
double rotation_angle(const Mat3& a, const Mat3& b);

}  // namespace navcrafter
