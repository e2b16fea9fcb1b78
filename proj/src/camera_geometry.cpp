#include "navcrafter/camera_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "navcrafter/errors.hpp"
#include "navcrafter/rng.hpp"

namespace navcrafter {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Horizontal basis (e1, e2) orthogonal to `up`, right-handed with up.
std::pair<Vec3, Vec3> horizontal_basis(const Vec3& up) {
  Vec3 seed = Vec3::UnitX();
  if (std::abs(up.dot(seed)) > 0.9) seed = Vec3::UnitY();
  Vec3 e1 = (seed - seed.dot(up) * up).normalized();
  Vec3 e2 = up.cross(e1);
  return {e1, e2};
}

double wrap_deg(double a) {
  a = std::fmod(a + 180.0, 360.0);
  if (a < 0) a += 360.0;
  return a - 180.0;
}

}  // namespace

void Intrinsics::validate() const {
  if (!(fx > 0) || !(fy > 0)) throw DomainError("intrinsics: focal lengths must be positive");
  if (width < 1 || height < 1) throw DomainError("intrinsics: image size must be positive");
  if (!(cx >= 0 && cx <= width) || !(cy >= 0 && cy <= height))
    throw DomainError("intrinsics: principal point outside the image");
}

Mat3 Intrinsics::matrix() const {
  Mat3 k;
  k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
  return k;
}

Mat3 Intrinsics::inverse() const {
  Mat3 k;
  k << 1.0 / fx, 0, -cx / fx, 0, 1.0 / fy, -cy / fy, 0, 0, 1;
  return k;
}

bool CameraPose::is_valid(double tol) const {
  if (!rotation.allFinite() || !center.allFinite()) return false;
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(rotation.determinant() - 1.0) <= tol;
}

void CameraPose::validate(double tol) const {
  if (!is_valid(tol)) throw DomainError("camera pose: rotation is not a proper orthonormal matrix");
}

Ray pixel_ray(const CameraPose& pose, const Intrinsics& intr, double u, double v, RayMode mode) {
  if (!(u >= 0 && u <= intr.width && v >= 0 && v <= intr.height))
    throw DomainError("pixel_ray: pixel (" + std::to_string(u) + ", " + std::to_string(v) +
                      ") outside the image");
  const Vec3 cam(( u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0);
  Vec3 dir = pose.rotation * cam;
  if (mode == RayMode::center_offset) dir += pose.center;
  const double n = dir.norm();
  if (!(n > 0)) throw DomainError("pixel_ray: zero-length direction");
  return {pose.center, dir / n};
}

PluckerImage::PluckerImage(int frames, int height, int width)
    : frames_(frames),
      height_(height),
      width_(width),
      data_(static_cast<std::size_t>(frames) * height * width * 6, 0.0) {}

PluckerImage plucker_embed(std::span<const CameraPose> poses, const Intrinsics& intr, int height,
                           int width, RayMode mode) {
  if (poses.empty()) throw DomainError("plucker_embed: empty pose sequence");
  if (height < 1 || width < 1) throw DomainError("plucker_embed: grid must be at least 1x1");
  PluckerImage out(static_cast<int>(poses.size()), height, width);
  for (int f = 0; f < out.frames(); ++f) {
    const CameraPose& pose = poses[f];
    for (int v = 0; v < height; ++v) {
      for (int u = 0; u < width; ++u) {
        const Eigen::Vector2d px = grid_pixel_center(intr, width, height, u, v);
        const Ray ray = pixel_ray(pose, intr, px.x(), px.y(), mode);
        auto entry = out.at(f, v, u);
        entry.head<3>() = pose.center.cross(ray.direction);
        entry.tail<3>() = ray.direction;
      }
    }
  }
  return out;
}

CameraPose slerp_pose(const CameraPose& a, const CameraPose& b, double s) {
  if (!(s >= 0.0 && s <= 1.0)) throw DomainError("slerp_pose: s must lie in [0, 1]");
  if (s == 0.0) return a;
  if (s == 1.0) return b;

  const Eigen::Quaterniond qa = Eigen::Quaterniond(a.rotation).normalized();
  Eigen::Quaterniond qb = Eigen::Quaterniond(b.rotation).normalized();
  if (qa.dot(qb) < 0.0) qb.coeffs() = -qb.coeffs();

  const Eigen::Quaterniond rel = qa.conjugate() * qb;
  const double half = std::atan2(rel.vec().norm(), rel.w());
  const double sin_half = std::sin(half);
  double wa = 1.0 - s;
  double wb = s;
  if (sin_half > 1e-12) {
    wa = std::sin((1.0 - s) * half) / sin_half;
    wb = std::sin(s * half) / sin_half;
  }
  Eigen::Quaterniond q;
  q.coeffs() = wa * qa.coeffs() + wb * qb.coeffs();
  q.normalize();

  CameraPose out;
  out.rotation = q.toRotationMatrix();
  out.center = (1.0 - s) * a.center + s * b.center;
  return out;
}

Trajectory interpolate_trajectory(const CameraPose& a, const CameraPose& b, int n_frames) {
  if (n_frames < 2) throw DomainError("interpolate_trajectory: need at least 2 frames");
  Trajectory traj;
  traj.poses.reserve(n_frames);
  for (int i = 0; i < n_frames; ++i) {
    const double s = static_cast<double>(i) / (n_frames - 1);
    traj.poses.push_back(slerp_pose(a, b, s));
  }
  return traj;
}

CameraPose look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 delta = target - eye;
  if (!(delta.norm() > 0)) throw DomainError("look_at: eye coincides with target");
  const Vec3 forward = delta.normalized();
  Vec3 right = forward.cross(up);
  if (right.norm() < 1e-9 * up.norm()) {
    // Looking straight along up: perturb up to the least aligned axis.
    int axis = 0;
    forward.cwiseAbs().minCoeff(&axis);
    right = forward.cross(Vec3::Unit(axis));
  }
  right.normalize();
  const Vec3 down = forward.cross(right);
  CameraPose pose;
  pose.rotation.col(0) = right;
  pose.rotation.col(1) = down;
  pose.rotation.col(2) = forward;
  pose.center = eye;
  return pose;
}

SearchSpace SearchSpace::expanded() const {
  SearchSpace s = *this;
  s.azimuth_step_deg *= 2.0;
  s.elevation_step_deg *= 2.0;
  return s;
}

SphericalCoords to_spherical(const Vec3& scene_center, const Vec3& point, const Vec3& up) {
  const Vec3 u = up.normalized();
  const auto [e1, e2] = horizontal_basis(u);
  const Vec3 d = point - scene_center;
  const double r = d.norm();
  SphericalCoords s{r, 0.0, 0.0};
  if (r == 0.0) return s;
  s.azimuth_deg = std::atan2(d.dot(e2), d.dot(e1)) / kDeg;
  s.elevation_deg = std::asin(std::clamp(d.dot(u) / r, -1.0, 1.0)) / kDeg;
  return s;
}

Vec3 from_spherical(const Vec3& scene_center, const SphericalCoords& s, const Vec3& up) {
  const Vec3 u = up.normalized();
  const auto [e1, e2] = horizontal_basis(u);
  const double az = s.azimuth_deg * kDeg;
  const double el = s.elevation_deg * kDeg;
  const Vec3 dir = std::cos(el) * (std::cos(az) * e1 + std::sin(az) * e2) + std::sin(el) * u;
  return scene_center + s.radius * dir.normalized();
}

std::vector<CameraPose> sample_candidates(const Vec3& scene_center, const CameraPose& curr, int k,
                                          const SearchSpace& space, std::uint64_t seed) {
  if (k < 1) throw DomainError("sample_candidates: k must be >= 1");
  const SphericalCoords here = to_spherical(scene_center, curr.center, space.up);
  if (!(here.radius > 1e-12))
    throw DomainError("sample_candidates: current pose coincides with the scene center");

  auto rng = make_rng({seed, 0x63616e64ULL});
  const double half_span = 0.5 * space.azimuth_span_deg;
  const double rel_az = wrap_deg(here.azimuth_deg - space.azimuth_center_deg);

  std::vector<CameraPose> out;
  out.reserve(k);
  for (int i = 0; i < k; ++i) {
    const double daz = uniform(rng, -space.azimuth_step_deg, space.azimuth_step_deg);
    const double del = uniform(rng, -space.elevation_step_deg, space.elevation_step_deg);
    SphericalCoords c = here;
    c.azimuth_deg = space.azimuth_center_deg + std::clamp(rel_az + daz, -half_span, half_span);
    c.elevation_deg =
        std::clamp(here.elevation_deg + del, space.elevation_min_deg, space.elevation_max_deg);
    out.push_back(look_at(from_spherical(scene_center, c, space.up), scene_center, space.up));
  }
  return out;
}

double rotation_angle(const Mat3& a, const Mat3& b) {
  const Eigen::Quaterniond q(Mat3(a.transpose() * b));
  return 2.0 * std::atan2(q.vec().norm(), std::abs(q.w()));
}

}  // namespace navcrafter
