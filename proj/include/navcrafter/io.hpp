#pragma once

#include <filesystem>
#include <optional>

#include <json.hpp>

#include "navcrafter/camera_conditioning.hpp"
#include "navcrafter/camera_geometry.hpp"
#include "navcrafter/collision_planner.hpp"
#include "navcrafter/depth_calibration.hpp"
#include "navcrafter/gaussian_renderer.hpp"
#include "navcrafter/image.hpp"
#include "navcrafter/metrics.hpp"
#include "navcrafter/pointcloud.hpp"
#include "navcrafter/synthetic_oracle.hpp"

namespace navcrafter::io {

namespace fs = std::filesystem;
using nlohmann::json;

// Binary little-endian PLY: float x, y, z and optional uchar red, green, blue.
// The reader also accepts other scalar types and ascii files.
void write_ply(const fs::path& path, const PointCloud& cloud);
PointCloud read_ply(const fs::path& path);

// Depth file: "NAVD", u32 width, u32 height, u32 reserved, then
// width*height little-endian float32 ranges in row-major order. Invalid
// pixels are stored as 0; on read any non-positive or non-finite value is
// invalid.
void write_depth(const fs::path& path, const DepthMap& depth);
DepthMap read_depth(const fs::path& path);

// 8-bit PNG. Colors are quantized with round(255 * clamp(c, 0, 1)).
void write_png(const fs::path& path, const RgbImage& image);
RgbImage read_png(const fs::path& path);
/// Grayscale or color PNG; any nonzero sample marks the pixel as in.
Mask read_mask(const fs::path& path);
void write_mask(const fs::path& path, const Mask& mask);

json read_json(const fs::path& path);
void write_json(const fs::path& path, const json& j);

json to_json(const Vec3& v);
Vec3 vec3_from(const json& j);

json to_json(const Intrinsics& intr);
Intrinsics intrinsics_from(const json& j);
json to_json(const CameraPose& pose);
CameraPose pose_from(const json& j);

struct TrajectoryFile {
  Trajectory trajectory;
  Intrinsics intrinsics;
};
json to_json(const Trajectory& traj, const Intrinsics& intr);
TrajectoryFile trajectory_from(const json& j);

json to_json(const SyntheticScene& scene);
SyntheticScene synthetic_scene_from(const json& j);

json to_json(const GaussianScene& scene);
GaussianScene gaussian_scene_from(const json& j);

json to_json(const ConvAdapter& adapter, const LoraWeights& lora);
std::pair<ConvAdapter, LoraWeights> conditioning_weights_from(const json& j);

json to_json(const CalibrationParams& p);
CalibrationParams calibration_from(const json& j);

json to_json(const ReconReport& r);
json to_json(const NoiseModel& n);
NoiseModel noise_model_from(const json& j);
json to_json(const SearchSpace& s);
SearchSpace search_space_from(const json& j);

}  // namespace navcrafter::io
