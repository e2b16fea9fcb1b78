#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "navcrafter/camera_geometry.hpp"
#include "navcrafter/image.hpp"

namespace navcrafter {

/// World-frame points with optional per-point colors in [0, 1].
struct PointCloud {
  std::vector<Vec3> positions;
  std::vector<Vec3> colors;  // empty, or one per position

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }
  bool has_colors() const { return !colors.empty(); }

  void validate() const;
  bool operator==(const PointCloud&) const = default;
};

/// Squared Euclidean distance, written out so every caller rounds the same way.
inline double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

/// Exact nearest-neighbour index: a balanced KD tree over a private copy of
/// the positions. Immutable after construction.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(std::span<const Vec3> points);

  struct Nearest {
    std::size_t index = std::numeric_limits<std::size_t>::max();
    double squared_distance = std::numeric_limits<double>::infinity();
    Vec3 position = Vec3::Zero();
  };

  Nearest nearest(const Vec3& query) const;
  /// Exact minimum distance; +infinity for an empty tree.
  double min_distance(const Vec3& query) const;
  /// True when some point p has squared_distance(query, p) <= squared_radius.
  /// Stops at the first hit, so it is much cheaper than nearest() for
  /// queries far from the cloud.
  bool any_within(const Vec3& query, double squared_radius) const;

  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    std::uint32_t begin;
    std::uint32_t end;
    std::int32_t left = -1;
    std::int32_t right = -1;
    int axis = -1;  // -1 marks a leaf
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void search(std::int32_t node, const Vec3& q, Nearest& best) const;
  bool search_within(std::int32_t node, const Vec3& q, double r2) const;

  std::vector<Vec3> points_;  // reordered
  std::vector<std::size_t> original_;
  std::vector<Node> nodes_;
};

using SpatialIndex = KdTree;

SpatialIndex build_index(const PointCloud& cloud);
double min_distance(const SpatialIndex& index, const Vec3& p);

/// One world point per valid pixel at center + depth * unit_ray.
PointCloud back_project(const DepthMap& depth, const CameraPose& pose, const Intrinsics& intr,
                        const RgbImage* colors = nullptr);

struct VisibilityMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> filled;
  std::size_t filled_count = 0;
  double fill_ratio = 0.0;

  std::size_t empty_count() const { return filled.size() - filled_count; }
  bool at(int u, int v) const { return filled[static_cast<std::size_t>(v) * width + u] != 0; }
  bool operator==(const VisibilityMask&) const = default;
};

VisibilityMask make_visibility_mask(int width, int height, std::vector<std::uint8_t> filled);

struct MaskRender {
  VisibilityMask mask;
  DepthMap depth;
};

/// Z-buffered disc splatting. A point covers the pixel containing its
/// projection plus every pixel whose center lies within `point_radius_px`.
/// The nearest range wins; ties go to the lowest point index.
MaskRender render_mask(const PointCloud& cloud, const CameraPose& pose, const Intrinsics& intr,
                       double point_radius_px = 1.0);
MaskRender render_mask_serial(const PointCloud& cloud, const CameraPose& pose,
                              const Intrinsics& intr, double point_radius_px = 1.0);

/// Union of both clouds with one representative per occupied voxel; base
/// points take priority, then addition, each in storage order.
PointCloud merge(const PointCloud& base, const PointCloud& addition, double voxel_size);

}  // namespace navcrafter
