#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "navcrafter/camera_geometry.hpp"
#include "navcrafter/image.hpp"
#include "navcrafter/pointcloud.hpp"

namespace navcrafter {

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
  Vec3 color = Vec3::Constant(0.5);
};

struct Box {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Ones();
  Vec3 color = Vec3::Constant(0.5);
};

/// Plane through `point` with unit `normal`. With `half_extent` set it is the
/// rectangle |(x - point).tangent| <= half_extent[0],
/// |(x - point).bitangent| <= half_extent[1], where bitangent = normal x tangent.
/// Unbounded planes render but cannot be surface-sampled.
struct Plane {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  Vec3 color = Vec3::Constant(0.5);
  std::optional<Eigen::Vector2d> half_extent;
  Vec3 tangent = Vec3::UnitX();

  Vec3 bitangent() const { return normal.cross(tangent); }
};

using Primitive = std::variant<Sphere, Box, Plane>;

struct SyntheticScene {
  std::vector<Primitive> primitives;
  Vec3 background = Vec3::Zero();

  void validate() const;
  bool operator==(const SyntheticScene& other) const;
};

/// Default in-plane tangent for a plane normal.
Vec3 default_tangent(const Vec3& normal);

struct Hit {
  double depth;  // distance along the unit ray
  Vec3 color;
  Vec3 normal;
};

/// Nearest strictly positive intersection, if any.
std::optional<Hit> raycast(const SyntheticScene& scene, const Ray& ray);

/// Signed distance from `p` to the nearest primitive surface; negative
/// inside a sphere or box. Planes are unsigned (thin sheets).
double surface_clearance(const SyntheticScene& scene, const Vec3& p);

/// Emulated synthesis error. Depth noise is relative (`depth_sigma`) and
/// pixels are dropped at `dropout_ratio`. If any camera of a clip is closer
/// than `collision_clearance` to the true geometry, every frame of that clip
/// is additionally scaled as a whole by 1 + collision_sigma * z (z standard
/// normal, one draw per frame, floored at 0.05): a generator asked to move
/// the camera through an object produces a clip whose geometry no longer
/// registers with the scene.
struct NoiseModel {
  double depth_sigma = 0.0;
  double dropout_ratio = 0.0;
  std::uint64_t seed = 0;
  double collision_clearance = 0.0;
  double collision_sigma = 0.0;

  void validate() const;
};

struct AnnotatedView {
  RgbImage image;
  DepthMap depth;
  CameraPose pose;
  Intrinsics intrinsics;
};

/// Noise-free ray-cast view. Shading is the primitive color scaled by
/// 0.35 + 0.65 |n . d|; misses get the background color and invalid depth.
AnnotatedView render_view(const SyntheticScene& scene, const CameraPose& pose,
                          const Intrinsics& intr);
AnnotatedView render_view_serial(const SyntheticScene& scene, const CameraPose& pose,
                                 const Intrinsics& intr);

/// One view per pose. `stream` separates noise draws of different calls
/// that share a NoiseModel seed.
std::vector<AnnotatedView> synthesize_views(const SyntheticScene& scene, const Trajectory& traj,
                                            const Intrinsics& intr,
                                            const NoiseModel* noise = nullptr,
                                            std::uint64_t stream = 0);

/// Jittered stratified surface samples (planes and box faces on a grid,
/// spheres on a Fibonacci lattice) with primitive colors.
PointCloud gt_cloud(const SyntheticScene& scene, double samples_per_unit_area,
                    std::uint64_t seed = 0);

/// Interface the planner uses to turn a trajectory into annotated views.
class ViewSynthesizer {
 public:
  virtual ~ViewSynthesizer() = default;
  virtual std::vector<AnnotatedView> synthesize(const Trajectory& traj, const Intrinsics& intr,
                                                std::uint64_t stream) const = 0;
};

class SyntheticOracle final : public ViewSynthesizer {
 public:
  SyntheticOracle(SyntheticScene scene, std::optional<NoiseModel> noise = std::nullopt)
      : scene_(std::move(scene)), noise_(noise) {}

  std::vector<AnnotatedView> synthesize(const Trajectory& traj, const Intrinsics& intr,
                                        std::uint64_t stream) const override {
    return synthesize_views(scene_, traj, intr, noise_ ? &*noise_ : nullptr, stream);
  }

  const SyntheticScene& scene() const { return scene_; }

 private:
  SyntheticScene scene_;
  std::optional<NoiseModel> noise_;
};

}  // namespace navcrafter
