#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "navcrafter/camera_geometry.hpp"
#include "navcrafter/image.hpp"

namespace navcrafter {

struct Gaussian3D {
  Vec3 mu = Vec3::Zero();
  Vec3 color = Vec3::Constant(0.5);
  double opacity = 1.0;  // may exceed 1 after drop compensation
  Vec3 scale = Vec3::Ones();
  Mat3 rotation = Mat3::Identity();

  void validate() const;
  /// R S S^T R^T
  Mat3 covariance() const;
  /// (p - mu)^T Sigma^-1 (p - mu), evaluated in the Gaussian's frame.
  double mahalanobis_sq(const Vec3& p) const;

  bool operator==(const Gaussian3D& o) const {
    return mu == o.mu && color == o.color && opacity == o.opacity && scale == o.scale &&
           rotation == o.rotation;
  }
};

struct GaussianScene {
  std::vector<Gaussian3D> gaussians;
  Vec3 background = Vec3::Zero();

  bool operator==(const GaussianScene&) const = default;
};

/// eta * exp(-m / 2) with eta clamped to [0, 1]. Throws NumericalDomainError
/// when the covariance condition number exceeds 1e12.
double eval_alpha(const Gaussian3D& g, const Vec3& p);

/// Mahalanobis cut-off (squared) beyond which a Gaussian is ignored per ray.
inline constexpr double kGaussianCull = 9.0;
/// Per-sample alpha ceiling, keeps transmittance from reaching zero.
inline constexpr double kAlphaMax = 0.999;

struct RaySample {
  std::size_t gaussian;
  double t;       // closest-approach parameter along the ray
  double alpha;   // clamped
  double weight;  // alpha * transmittance before this sample
};

struct RayRender {
  Vec3 color = Vec3::Zero();
  double accumulated_alpha = 0.0;
  std::optional<double> expected_depth;
  double transmittance = 1.0;
  std::vector<RaySample> samples;  // front to back
};

/// Front-to-back alpha compositing of the Gaussians whose closest approach to
/// the ray lies at t >= 0, ordered by t (ties broken on Gaussian contents, so
/// storage order never matters).
RayRender render_ray(const GaussianScene& scene, const Ray& ray);

struct GaussianRender {
  RgbImage image;
  std::vector<double> alpha;  // row-major accumulated alpha
  DepthMap depth;             // expected depth, invalid where no weight
};

GaussianRender render_image(const GaussianScene& scene, const CameraPose& pose,
                            const Intrinsics& intr);
GaussianRender render_image_serial(const GaussianScene& scene, const CameraPose& pose,
                                   const Intrinsics& intr);

struct DropSchedule {
  double gamma = 0.0;  // maximum dropping rate, in [0, 1)
  int t_total = 1;
};

/// Linear progressive schedule gamma * t / t_total.
double drop_rate(int t, const DropSchedule& sched);

/// Keeps each Gaussian with probability 1 - r and rescales survivors'
/// opacity by 1 / (1 - r). Stored opacity is left unclamped.
GaussianScene drop_gaussians(const GaussianScene& scene, double r, std::uint64_t seed);

/// Mean absolute difference over all pixels and channels.
double l1_rgb(const RgbImage& rendered, const RgbImage& reference);
/// Mean absolute difference over pixels masked in and valid in both maps.
double l1_depth(const DepthMap& rendered, const DepthMap& reference, const Mask& mask);

}  // namespace navcrafter
