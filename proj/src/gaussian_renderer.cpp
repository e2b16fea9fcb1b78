#include "navcrafter/gaussian_renderer.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "navcrafter/errors.hpp"
#include "navcrafter/parallel.hpp"
#include "navcrafter/rng.hpp"

namespace navcrafter {

namespace {

constexpr double kMaxCondition = 1e12;

void check_conditioning(const Gaussian3D& g) {
  const double smax = g.scale.cwiseAbs().maxCoeff();
  const double smin = g.scale.cwiseAbs().minCoeff();
  if (!(smin > 0.0) || (smax / smin) * (smax / smin) > kMaxCondition)
    throw NumericalDomainError("gaussian: covariance is near-singular");
}

// Strict weak order on contents, used to break depth ties.
bool content_less(const Gaussian3D& a, const Gaussian3D& b) {
  auto key = [](const Gaussian3D& g) {
    return std::make_tuple(g.mu.x(), g.mu.y(), g.mu.z(), g.color.x(), g.color.y(), g.color.z(),
                           g.opacity, g.scale.x(), g.scale.y(), g.scale.z());
  };
  if (key(a) != key(b)) return key(a) < key(b);
  return std::lexicographical_compare(a.rotation.data(), a.rotation.data() + 9,
                                      b.rotation.data(), b.rotation.data() + 9);
}

void render_row(const GaussianScene& scene, const CameraPose& pose, const Intrinsics& intr, int v,
                GaussianRender& out) {
  for (int u = 0; u < intr.width; ++u) {
    const RayRender r = render_ray(scene, pixel_ray(pose, intr, u + 0.5, v + 0.5));
    out.image.set(u, v, r.color);
    const std::size_t i = static_cast<std::size_t>(v) * intr.width + u;
    out.alpha[i] = r.accumulated_alpha;
    if (r.expected_depth) out.depth.set(u, v, *r.expected_depth);
  }
}

GaussianRender blank(const Intrinsics& intr) {
  intr.validate();
  GaussianRender out;
  out.image = RgbImage(intr.width, intr.height);
  out.alpha.assign(static_cast<std::size_t>(intr.width) * intr.height, 0.0);
  out.depth = DepthMap(intr.width, intr.height);
  return out;
}

}  // namespace

void Gaussian3D::validate() const {
  if (!(opacity >= 0.0)) throw DomainError("gaussian: opacity must be >= 0");
  if (!(scale.minCoeff() > 0.0)) throw DomainError("gaussian: scales must be positive");
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho > 1e-9 || std::abs(rotation.determinant() - 1.0) > 1e-9)
    throw DomainError("gaussian: rotation must be orthonormal with det +1");
}

Mat3 Gaussian3D::covariance() const {
  const Mat3 s = scale.asDiagonal();
  return rotation * s * s.transpose() * rotation.transpose();
}

double Gaussian3D::mahalanobis_sq(const Vec3& p) const {
  const Vec3 local = rotation.transpose() * (p - mu);
  return (local.array() / scale.array()).square().sum();
}

double eval_alpha(const Gaussian3D& g, const Vec3& p) {
  check_conditioning(g);
  const double eta = std::clamp(g.opacity, 0.0, 1.0);
  return eta * std::exp(-0.5 * g.mahalanobis_sq(p));
}

RayRender render_ray(const GaussianScene& scene, const Ray& ray) {
  struct Entry {
    std::size_t index;
    double t;
    double alpha;
  };
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < scene.gaussians.size(); ++i) {
    const Gaussian3D& g = scene.gaussians[i];
    const double t = (g.mu - ray.origin).dot(ray.direction);
    if (t < 0.0) continue;
    const Vec3 p = ray.origin + t * ray.direction;
    if (g.mahalanobis_sq(p) > kGaussianCull) continue;
    const double alpha = std::min(eval_alpha(g, p), kAlphaMax);
    entries.push_back({i, t, alpha});
  }
  std::sort(entries.begin(), entries.end(), [&](const Entry& a, const Entry& b) {
    if (a.t != b.t) return a.t < b.t;
    return content_less(scene.gaussians[a.index], scene.gaussians[b.index]);
  });

  RayRender out;
  double transmittance = 1.0;
  double weight_sum = 0.0;
  double depth_sum = 0.0;
  for (const Entry& e : entries) {
    const double w = e.alpha * transmittance;
    out.color += w * scene.gaussians[e.index].color;
    weight_sum += w;
    depth_sum += w * e.t;
    transmittance *= 1.0 - e.alpha;
    out.samples.push_back({e.index, e.t, e.alpha, w});
  }
  out.color += transmittance * scene.background;
  out.transmittance = transmittance;
  out.accumulated_alpha = 1.0 - transmittance;
  if (weight_sum > 0.0) out.expected_depth = depth_sum / weight_sum;
  return out;
}

GaussianRender render_image_serial(const GaussianScene& scene, const CameraPose& pose,
                                   const Intrinsics& intr) {
  GaussianRender out = blank(intr);
  for (int v = 0; v < intr.height; ++v) render_row(scene, pose, intr, v, out);
  return out;
}

GaussianRender render_image(const GaussianScene& scene, const CameraPose& pose,
                            const Intrinsics& intr) {
  GaussianRender out = blank(intr);
  NAVCRAFTER_OMP(parallel for schedule(dynamic, 2))
  for (int v = 0; v < intr.height; ++v) render_row(scene, pose, intr, v, out);
  return out;
}

double drop_rate(int t, const DropSchedule& sched) {
  if (sched.t_total < 1) throw DomainError("drop_rate: t_total must be >= 1");
  if (!(sched.gamma >= 0.0 && sched.gamma < 1.0))
    throw DomainError("drop_rate: gamma must lie in [0, 1)");
  if (t < 0 || t > sched.t_total) throw DomainError("drop_rate: iteration out of range");
  return sched.gamma * static_cast<double>(t) / static_cast<double>(sched.t_total);
}

GaussianScene drop_gaussians(const GaussianScene& scene, double r, std::uint64_t seed) {
  if (!(r >= 0.0 && r < 1.0)) throw DomainError("drop_gaussians: rate must lie in [0, 1)");
  auto rng = make_rng({seed, 0x64726f70ULL});
  GaussianScene out;
  out.background = scene.background;
  const double keep = 1.0 - r;
  for (const Gaussian3D& g : scene.gaussians) {
    if (uniform01(rng) < r) continue;
    Gaussian3D kept = g;
    kept.opacity = g.opacity / keep;
    out.gaussians.push_back(kept);
  }
  return out;
}

double l1_rgb(const RgbImage& rendered, const RgbImage& reference) {
  if (rendered.width != reference.width || rendered.height != reference.height)
    throw DomainError("l1_rgb: image shapes differ");
  if (rendered.data.empty()) throw DomainError("l1_rgb: empty image");
  double sum = 0.0;
  for (std::size_t i = 0; i < rendered.data.size(); ++i)
    sum += std::abs(rendered.data[i] - reference.data[i]);
  return sum / static_cast<double>(rendered.data.size());
}

double l1_depth(const DepthMap& rendered, const DepthMap& reference, const Mask& mask) {
  if (rendered.width != reference.width || rendered.height != reference.height ||
      mask.width != rendered.width || mask.height != rendered.height)
    throw DomainError("l1_depth: shapes differ");
  double sum = 0.0;
  std::size_t n = 0;
  for (int v = 0; v < rendered.height; ++v) {
    for (int u = 0; u < rendered.width; ++u) {
      if (!mask.at(u, v) || !rendered.is_valid(u, v) || !reference.is_valid(u, v)) continue;
      sum += std::abs(rendered.at(u, v) - reference.at(u, v));
      ++n;
    }
  }
  if (n == 0) throw DomainError("l1_depth: mask selects no valid pixels");
  return sum / static_cast<double>(n);
}

}  // namespace navcrafter
