#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace navcrafter {

/// Row-major H x W x 3 image, channel values nominally in [0, 1].
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  RgbImage() = default;
  RgbImage(int w, int h, const Eigen::Vector3d& fill = Eigen::Vector3d::Zero());

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::size_t index(int u, int v) const { return static_cast<std::size_t>(v) * width + u; }

  Eigen::Vector3d get(int u, int v) const {
    const double* p = data.data() + 3 * index(u, v);
    return {p[0], p[1], p[2]};
  }
  void set(int u, int v, const Eigen::Vector3d& c) {
    double* p = data.data() + 3 * index(u, v);
    p[0] = c.x();
    p[1] = c.y();
    p[2] = c.z();
  }

  bool operator==(const RgbImage&) const = default;
};

/// Per-pixel range (distance along the unit pixel ray, meters) plus a
/// validity flag. Valid entries are finite and strictly positive.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> valid;

  DepthMap() = default;
  DepthMap(int w, int h) : width(w), height(h), values(pixel_count(), 0.0), valid(pixel_count(), 0) {}

  static DepthMap constant(int w, int h, double depth);

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::size_t index(int u, int v) const { return static_cast<std::size_t>(v) * width + u; }

  bool is_valid(int u, int v) const { return valid[index(u, v)] != 0; }
  double at(int u, int v) const { return values[index(u, v)]; }
  void set(int u, int v, double depth);
  void invalidate(int u, int v) {
    values[index(u, v)] = 0.0;
    valid[index(u, v)] = 0;
  }
  std::size_t valid_count() const;

  bool operator==(const DepthMap&) const = default;
};

/// Boolean H x W grid.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> values;

  Mask() = default;
  Mask(int w, int h, bool fill = false)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill ? 1 : 0) {}

  bool at(int u, int v) const { return values[static_cast<std::size_t>(v) * width + u] != 0; }
  void set(int u, int v, bool b) { values[static_cast<std::size_t>(v) * width + u] = b ? 1 : 0; }

  bool operator==(const Mask&) const = default;
};

}  // namespace navcrafter
