#include "navcrafter/pointcloud.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "navcrafter/errors.hpp"
#include "navcrafter/parallel.hpp"

namespace navcrafter {

RgbImage::RgbImage(int w, int h, const Eigen::Vector3d& fill)
    : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3) {
  for (std::size_t i = 0; i < pixel_count(); ++i) {
    data[3 * i] = fill.x();
    data[3 * i + 1] = fill.y();
    data[3 * i + 2] = fill.z();
  }
}

DepthMap DepthMap::constant(int w, int h, double depth) {
  DepthMap d(w, h);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) d.set(u, v, depth);
  return d;
}

void DepthMap::set(int u, int v, double depth) {
  if (std::isfinite(depth) && depth > 0.0) {
    values[index(u, v)] = depth;
    valid[index(u, v)] = 1;
  } else {
    invalidate(u, v);
  }
}

std::size_t DepthMap::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

void PointCloud::validate() const {
  for (const Vec3& p : positions)
    if (!p.allFinite()) throw DomainError("point cloud: non-finite position");
  if (!colors.empty()) {
    if (colors.size() != positions.size())
      throw DomainError("point cloud: color count does not match point count");
    for (const Vec3& c : colors)
      if (!(c.minCoeff() >= 0.0 && c.maxCoeff() <= 1.0))
        throw DomainError("point cloud: color outside [0, 1]");
  }
}

// ---------------------------------------------------------------------------
// KD tree

namespace {
constexpr std::uint32_t kLeafSize = 12;
}

KdTree::KdTree(std::span<const Vec3> points) {
  if (points.empty()) return;
  original_.resize(points.size());
  std::iota(original_.begin(), original_.end(), std::size_t{0});
  points_.assign(points.begin(), points.end());
  nodes_.reserve(2 * points.size() / kLeafSize + 1);
  build(0, static_cast<std::uint32_t>(points.size()));

  std::vector<Vec3> reordered(points.size());
  for (std::size_t i = 0; i < original_.size(); ++i) reordered[i] = points[original_[i]];
  points_ = std::move(reordered);
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= kLeafSize) return id;

  Vec3 lo = points_[original_[begin]];
  Vec3 hi = lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[original_[i]]);
    hi = hi.cwiseMax(points_[original_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] == lo[axis]) return id;  // all coincident: keep as a leaf

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(original_.begin() + begin, original_.begin() + mid, original_.begin() + end,
                   [&](std::size_t a, std::size_t b) {
                     return points_[a][axis] < points_[b][axis];
                   });
  const double split = points_[original_[mid]][axis];
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  Node& node = nodes_[id];
  node.axis = axis;
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

void KdTree::search(std::int32_t id, const Vec3& q, Nearest& best) const {
  const Node& node = nodes_[id];
  if (node.axis < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const double d2 = squared_distance(q, points_[i]);
      if (d2 < best.squared_distance ||
          (d2 == best.squared_distance && original_[i] < best.index)) {
        best.squared_distance = d2;
        best.index = original_[i];
        best.position = points_[i];
      }
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const std::int32_t near = diff < 0 ? node.left : node.right;
  const std::int32_t far = diff < 0 ? node.right : node.left;
  search(near, q, best);
  if (diff * diff <= best.squared_distance) search(far, q, best);
}

bool KdTree::search_within(std::int32_t id, const Vec3& q, double r2) const {
  const Node& node = nodes_[id];
  if (node.axis < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i)
      if (squared_distance(q, points_[i]) <= r2) return true;
    return false;
  }
  const double diff = q[node.axis] - node.split;
  const std::int32_t near = diff < 0 ? node.left : node.right;
  const std::int32_t far = diff < 0 ? node.right : node.left;
  if (search_within(near, q, r2)) return true;
  return diff * diff <= r2 && search_within(far, q, r2);
}

bool KdTree::any_within(const Vec3& query, double squared_radius) const {
  return !nodes_.empty() && search_within(0, query, squared_radius);
}

KdTree::Nearest KdTree::nearest(const Vec3& query) const {
  Nearest best;
  if (!nodes_.empty()) search(0, query, best);
  return best;
}

double KdTree::min_distance(const Vec3& query) const {
  return std::sqrt(nearest(query).squared_distance);
}

SpatialIndex build_index(const PointCloud& cloud) { return KdTree(cloud.positions); }

double min_distance(const SpatialIndex& index, const Vec3& p) { return index.min_distance(p); }

// ---------------------------------------------------------------------------
// Back-projection

PointCloud back_project(const DepthMap& depth, const CameraPose& pose, const Intrinsics& intr,
                        const RgbImage* colors) {
  if (depth.width != intr.width || depth.height != intr.height)
    throw DomainError("back_project: depth map size does not match intrinsics");
  if (colors && (colors->width != depth.width || colors->height != depth.height))
    throw DomainError("back_project: color image size does not match depth map");

  const int h = depth.height;
  std::vector<PointCloud> rows(h);
  NAVCRAFTER_OMP(parallel for schedule(static))
  for (int v = 0; v < h; ++v) {
    PointCloud& row = rows[v];
    for (int u = 0; u < depth.width; ++u) {
      if (!depth.is_valid(u, v)) continue;
      const Ray ray = pixel_ray(pose, intr, u + 0.5, v + 0.5);
      row.positions.push_back(ray.origin + depth.at(u, v) * ray.direction);
      if (colors) row.colors.push_back(colors->get(u, v).cwiseMax(0.0).cwiseMin(1.0));
    }
  }
  PointCloud out;
  for (PointCloud& row : rows) {
    out.positions.insert(out.positions.end(), row.positions.begin(), row.positions.end());
    out.colors.insert(out.colors.end(), row.colors.begin(), row.colors.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mask rendering

namespace {

struct ZEntry {
  double depth = std::numeric_limits<double>::infinity();
  std::size_t index = std::numeric_limits<std::size_t>::max();

  bool beats(const ZEntry& other) const {
    return depth < other.depth || (depth == other.depth && index < other.index);
  }
};

void splat_point(const Vec3& p, std::size_t idx, const CameraPose& pose, const Intrinsics& intr,
                 double radius, std::vector<ZEntry>& zbuf) {
  const Vec3 cam = pose.to_camera(p);
  if (!(cam.z() > 0.0)) return;
  const double x = intr.fx * cam.x() / cam.z() + intr.cx;
  const double y = intr.fy * cam.y() / cam.z() + intr.cy;
  if (!std::isfinite(x) || !std::isfinite(y)) return;
  if (x + radius < 0.0 || y + radius < 0.0 || x - radius >= intr.width ||
      y - radius >= intr.height)
    return;

  const ZEntry entry{std::sqrt(squared_distance(p, pose.center)), idx};
  const double home_u = std::floor(x);
  const double home_v = std::floor(y);
  const int u0 = std::max(0, static_cast<int>(std::floor(x - radius)));
  const int u1 = std::min(intr.width - 1, static_cast<int>(std::floor(x + radius)));
  const int v0 = std::max(0, static_cast<int>(std::floor(y - radius)));
  const int v1 = std::min(intr.height - 1, static_cast<int>(std::floor(y + radius)));
  const double r2 = radius * radius;
  for (int v = v0; v <= v1; ++v) {
    for (int u = u0; u <= u1; ++u) {
      const double du = u + 0.5 - x;
      const double dv = v + 0.5 - y;
      const bool home = (u == home_u && v == home_v);
      if (!home && du * du + dv * dv > r2) continue;
      ZEntry& slot = zbuf[static_cast<std::size_t>(v) * intr.width + u];
      if (entry.beats(slot)) slot = entry;
    }
  }
}

MaskRender finish(const std::vector<ZEntry>& zbuf, const Intrinsics& intr) {
  MaskRender out;
  out.depth = DepthMap(intr.width, intr.height);
  std::vector<std::uint8_t> filled(zbuf.size(), 0);
  for (std::size_t i = 0; i < zbuf.size(); ++i) {
    if (zbuf[i].index == std::numeric_limits<std::size_t>::max()) continue;
    filled[i] = 1;
    out.depth.values[i] = zbuf[i].depth;
    out.depth.valid[i] = zbuf[i].depth > 0.0 ? 1 : 0;
  }
  out.mask = make_visibility_mask(intr.width, intr.height, std::move(filled));
  return out;
}

void check_radius(double r) {
  if (!(r >= 0.0)) throw DomainError("render_mask: point radius must be >= 0");
}

}  // namespace

VisibilityMask make_visibility_mask(int width, int height, std::vector<std::uint8_t> filled) {
  VisibilityMask m;
  m.width = width;
  m.height = height;
  m.filled = std::move(filled);
  m.filled_count = static_cast<std::size_t>(std::count(m.filled.begin(), m.filled.end(), 1));
  m.fill_ratio = m.filled.empty() ? 0.0
                                  : static_cast<double>(m.filled_count) /
                                        static_cast<double>(m.filled.size());
  return m;
}

MaskRender render_mask_serial(const PointCloud& cloud, const CameraPose& pose,
                              const Intrinsics& intr, double point_radius_px) {
  check_radius(point_radius_px);
  std::vector<ZEntry> zbuf(static_cast<std::size_t>(intr.width) * intr.height);
  for (std::size_t i = 0; i < cloud.size(); ++i)
    splat_point(cloud.positions[i], i, pose, intr, point_radius_px, zbuf);
  return finish(zbuf, intr);
}

MaskRender render_mask(const PointCloud& cloud, const CameraPose& pose, const Intrinsics& intr,
                       double point_radius_px) {
  check_radius(point_radius_px);
  const std::size_t pixels = static_cast<std::size_t>(intr.width) * intr.height;
  const int threads = max_threads();
  if (threads <= 1 || cloud.size() < 4096) return render_mask_serial(cloud, pose, intr, point_radius_px);

  // Per-thread z-buffers merged with the same (depth, index) order, so the
  // result does not depend on how points were split across threads.
  std::vector<std::vector<ZEntry>> local(threads, std::vector<ZEntry>(pixels));
  const auto n = static_cast<std::int64_t>(cloud.size());
  NAVCRAFTER_OMP(parallel num_threads(threads))
  {
    std::vector<ZEntry>& zbuf = local[omp_get_thread_num()];
    NAVCRAFTER_OMP(for schedule(static))
    for (std::int64_t i = 0; i < n; ++i)
      splat_point(cloud.positions[i], static_cast<std::size_t>(i), pose, intr, point_radius_px,
                  zbuf);
  }
  std::vector<ZEntry> zbuf(pixels);
  const auto np = static_cast<std::int64_t>(pixels);
  NAVCRAFTER_OMP(parallel for schedule(static))
  for (std::int64_t i = 0; i < np; ++i)
    for (const auto& buf : local)
      if (buf[i].beats(zbuf[i])) zbuf[i] = buf[i];
  return finish(zbuf, intr);
}

// ---------------------------------------------------------------------------
// Voxel merge

namespace {

struct VoxelKey {
  std::int64_t x, y, z;
  bool operator==(const VoxelKey&) const = default;
};

struct VoxelHash {
  std::size_t operator()(const VoxelKey& k) const {
    std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<std::uint64_t>(k.y) * 0xC2B2AE3D27D4EB4FULL + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(k.z) * 0x165667B19E3779F9ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

VoxelKey voxel_of(const Vec3& p, double voxel) {
  return {static_cast<std::int64_t>(std::floor(p.x() / voxel)),
          static_cast<std::int64_t>(std::floor(p.y() / voxel)),
          static_cast<std::int64_t>(std::floor(p.z() / voxel))};
}

}  // namespace

PointCloud merge(const PointCloud& base, const PointCloud& addition, double voxel_size) {
  if (!(voxel_size > 0.0)) throw DomainError("merge: voxel size must be positive");
  const bool keep_colors = (base.has_colors() || base.empty()) &&
                           (addition.has_colors() || addition.empty()) &&
                           (base.has_colors() || addition.has_colors());
  PointCloud out;
  std::unordered_set<VoxelKey, VoxelHash> occupied;
  occupied.reserve(base.size() + addition.size());
  out.positions.reserve(base.size() + addition.size());
  for (const PointCloud* src : {&base, &addition}) {
    for (std::size_t i = 0; i < src->size(); ++i) {
      if (!occupied.insert(voxel_of(src->positions[i], voxel_size)).second) continue;
      out.positions.push_back(src->positions[i]);
      if (keep_colors) out.colors.push_back(src->colors[i]);
    }
  }
  return out;
}

}  // namespace navcrafter
