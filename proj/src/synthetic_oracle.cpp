#include "navcrafter/synthetic_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "navcrafter/errors.hpp"
#include "navcrafter/parallel.hpp"
#include "navcrafter/rng.hpp"

namespace navcrafter {

namespace {

constexpr double kMinT = 1e-9;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool same(const Sphere& a, const Sphere& b) {
  return a.center == b.center && a.radius == b.radius && a.color == b.color;
}
bool same(const Box& a, const Box& b) {
  return a.min == b.min && a.max == b.max && a.color == b.color;
}
bool same(const Plane& a, const Plane& b) {
  return a.point == b.point && a.normal == b.normal && a.color == b.color &&
         a.half_extent == b.half_extent && a.tangent == b.tangent;
}

std::optional<Hit> intersect(const Sphere& s, const Ray& ray) {
  const Vec3 oc = ray.origin - s.center;
  const double b = oc.dot(ray.direction);
  const double c = oc.squaredNorm() - s.radius * s.radius;
  const double disc = b * b - c;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  double t = -b - sq;
  if (t <= kMinT) t = -b + sq;
  if (t <= kMinT) return std::nullopt;
  const Vec3 n = (ray.origin + t * ray.direction - s.center) / s.radius;
  return Hit{t, s.color, n};
}

std::optional<Hit> intersect(const Box& box, const Ray& ray) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  int near_axis = -1;
  int far_axis = -1;
  for (int a = 0; a < 3; ++a) {
    const double o = ray.origin[a];
    const double d = ray.direction[a];
    if (d == 0.0) {
      if (o < box.min[a] || o > box.max[a]) return std::nullopt;
      continue;
    }
    double t0 = (box.min[a] - o) / d;
    double t1 = (box.max[a] - o) / d;
    if (t0 > t1) std::swap(t0, t1);
    if (t0 > t_near) {
      t_near = t0;
      near_axis = a;
    }
    if (t1 < t_far) {
      t_far = t1;
      far_axis = a;
    }
  }
  if (t_near > t_far) return std::nullopt;
  double t = t_near;
  int axis = near_axis;
  if (t <= kMinT) {
    t = t_far;
    axis = far_axis;
  }
  if (t <= kMinT || axis < 0) return std::nullopt;
  Vec3 n = Vec3::Zero();
  n[axis] = ray.direction[axis] > 0 ? -1.0 : 1.0;
  return Hit{t, box.color, n};
}

std::optional<Hit> intersect(const Plane& p, const Ray& ray) {
  const double denom = p.normal.dot(ray.direction);
  if (std::abs(denom) < 1e-15) return std::nullopt;
  const double t = p.normal.dot(p.point - ray.origin) / denom;
  if (t <= kMinT) return std::nullopt;
  if (p.half_extent) {
    const Vec3 local = ray.origin + t * ray.direction - p.point;
    if (std::abs(local.dot(p.tangent)) > p.half_extent->x() ||
        std::abs(local.dot(p.bitangent())) > p.half_extent->y())
      return std::nullopt;
  }
  return Hit{t, p.color, p.normal};
}

double clearance(const Sphere& s, const Vec3& p) { return (p - s.center).norm() - s.radius; }

double clearance(const Box& b, const Vec3& p) {
  const Vec3 half = 0.5 * (b.max - b.min);
  const Vec3 q = (p - 0.5 * (b.max + b.min)).cwiseAbs() - half;
  return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
}

double clearance(const Plane& pl, const Vec3& p) {
  const Vec3 local = p - pl.point;
  const double h = local.dot(pl.normal);
  if (!pl.half_extent) return std::abs(h);
  const double da = std::max(std::abs(local.dot(pl.tangent)) - pl.half_extent->x(), 0.0);
  const double db = std::max(std::abs(local.dot(pl.bitangent())) - pl.half_extent->y(), 0.0);
  return std::sqrt(da * da + db * db + h * h);
}

// Standard normal via Box-Muller on our own uniform draws (portable).
double standard_normal(std::mt19937_64& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void render_row(const SyntheticScene& scene, const CameraPose& pose, const Intrinsics& intr, int v,
                AnnotatedView& view) {
  for (int u = 0; u < intr.width; ++u) {
    const Ray ray = pixel_ray(pose, intr, u + 0.5, v + 0.5);
    if (auto hit = raycast(scene, ray)) {
      const double shade = 0.35 + 0.65 * std::abs(hit->normal.dot(ray.direction));
      view.image.set(u, v, (shade * hit->color).cwiseMax(0.0).cwiseMin(1.0));
      view.depth.set(u, v, hit->depth);
    } else {
      view.image.set(u, v, scene.background);
      view.depth.invalidate(u, v);
    }
  }
}

AnnotatedView blank_view(const CameraPose& pose, const Intrinsics& intr) {
  intr.validate();
  AnnotatedView view;
  view.image = RgbImage(intr.width, intr.height);
  view.depth = DepthMap(intr.width, intr.height);
  view.pose = pose;
  view.intrinsics = intr;
  return view;
}

void add_rectangle(PointCloud& out, const Vec3& origin, const Vec3& axis_a, const Vec3& axis_b,
                   double len_a, double len_b, const Vec3& color, double density,
                   std::mt19937_64& rng) {
  const double step = 1.0 / std::sqrt(density);
  const int na = std::max(1, static_cast<int>(std::ceil(len_a / step)));
  const int nb = std::max(1, static_cast<int>(std::ceil(len_b / step)));
  const double ca = len_a / na;
  const double cb = len_b / nb;
  for (int j = 0; j < nb; ++j) {
    for (int i = 0; i < na; ++i) {
      const double a = (i + uniform01(rng)) * ca;
      const double b = (j + uniform01(rng)) * cb;
      out.positions.push_back(origin + a * axis_a + b * axis_b);
      out.colors.push_back(color);
    }
  }
}

}  // namespace

Vec3 default_tangent(const Vec3& normal) {
  Vec3 seed = Vec3::UnitX();
  if (std::abs(normal.dot(seed)) > 0.9) seed = Vec3::UnitY();
  return (seed - seed.dot(normal) * normal).normalized();
}

void SyntheticScene::validate() const {
  for (const Primitive& prim : primitives) {
    std::visit(Overloaded{
                   [](const Sphere& s) {
                     if (!(s.radius > 0)) throw DomainError("scene: sphere radius must be > 0");
                   },
                   [](const Box& b) {
                     if (!(b.min.array() < b.max.array()).all())
                       throw DomainError("scene: box min must be < max componentwise");
                   },
                   [](const Plane& p) {
                     if (std::abs(p.normal.norm() - 1.0) > 1e-9)
                       throw DomainError("scene: plane normal must be unit length");
                     if (std::abs(p.tangent.norm() - 1.0) > 1e-9 ||
                         std::abs(p.tangent.dot(p.normal)) > 1e-9)
                       throw DomainError("scene: plane tangent must be a unit in-plane vector");
                     if (p.half_extent && !(p.half_extent->minCoeff() > 0))
                       throw DomainError("scene: plane extent must be positive");
                   },
               },
               prim);
  }
}

bool SyntheticScene::operator==(const SyntheticScene& other) const {
  if (background != other.background || primitives.size() != other.primitives.size())
    return false;
  for (std::size_t i = 0; i < primitives.size(); ++i) {
    if (primitives[i].index() != other.primitives[i].index()) return false;
    const bool eq = std::visit(
        [&](const auto& a) {
          using T = std::decay_t<decltype(a)>;
          return same(a, std::get<T>(other.primitives[i]));
        },
        primitives[i]);
    if (!eq) return false;
  }
  return true;
}

std::optional<Hit> raycast(const SyntheticScene& scene, const Ray& ray) {
  std::optional<Hit> best;
  for (const Primitive& prim : scene.primitives) {
    auto hit = std::visit([&](const auto& p) { return intersect(p, ray); }, prim);
    if (hit && (!best || hit->depth < best->depth)) best = hit;
  }
  return best;
}

double surface_clearance(const SyntheticScene& scene, const Vec3& p) {
  double best = std::numeric_limits<double>::infinity();
  for (const Primitive& prim : scene.primitives)
    best = std::min(best, std::visit([&](const auto& q) { return clearance(q, p); }, prim));
  return best;
}

void NoiseModel::validate() const {
  if (!(depth_sigma >= 0.0)) throw DomainError("noise: depth_sigma must be >= 0");
  if (!(dropout_ratio >= 0.0 && dropout_ratio <= 1.0))
    throw DomainError("noise: dropout_ratio must lie in [0, 1]");
  if (!(collision_sigma >= 0.0) || !(collision_clearance >= 0.0))
    throw DomainError("noise: collision terms must be >= 0");
}

AnnotatedView render_view_serial(const SyntheticScene& scene, const CameraPose& pose,
                                 const Intrinsics& intr) {
  AnnotatedView view = blank_view(pose, intr);
  for (int v = 0; v < intr.height; ++v) render_row(scene, pose, intr, v, view);
  return view;
}

AnnotatedView render_view(const SyntheticScene& scene, const CameraPose& pose,
                          const Intrinsics& intr) {
  AnnotatedView view = blank_view(pose, intr);
  NAVCRAFTER_OMP(parallel for schedule(dynamic, 4))
  for (int v = 0; v < intr.height; ++v) render_row(scene, pose, intr, v, view);
  return view;
}

std::vector<AnnotatedView> synthesize_views(const SyntheticScene& scene, const Trajectory& traj,
                                            const Intrinsics& intr, const NoiseModel* noise,
                                            std::uint64_t stream) {
  if (noise) noise->validate();
  bool clip_collides = false;
  if (noise && noise->collision_sigma > 0.0) {
    for (const CameraPose& p : traj.poses)
      clip_collides |= surface_clearance(scene, p.center) < noise->collision_clearance;
  }

  std::vector<AnnotatedView> views;
  views.reserve(traj.size());
  for (std::size_t f = 0; f < traj.size(); ++f) {
    AnnotatedView view = render_view(scene, traj.poses[f], intr);
    if (noise) {
      const double sigma = noise->depth_sigma;
      auto rng = make_rng({noise->seed, stream, static_cast<std::uint64_t>(f)});
      // Drawn for every frame so the per-pixel stream does not depend on the
      // collision test.
      const double frame_z = standard_normal(rng);
      const double frame_scale =
          clip_collides ? std::max(0.05, 1.0 + noise->collision_sigma * frame_z) : 1.0;
      for (int v = 0; v < intr.height; ++v) {
        for (int u = 0; u < intr.width; ++u) {
          const bool drop = uniform01(rng) < noise->dropout_ratio;
          const double z = standard_normal(rng);
          if (!view.depth.is_valid(u, v)) continue;
          if (drop) {
            view.depth.invalidate(u, v);
          } else if (sigma > 0.0 || frame_scale != 1.0) {
            view.depth.set(u, v, view.depth.at(u, v) * frame_scale * (1.0 + sigma * z));
          }
        }
      }
    }
    views.push_back(std::move(view));
  }
  return views;
}

PointCloud gt_cloud(const SyntheticScene& scene, double samples_per_unit_area, std::uint64_t seed) {
  if (!(samples_per_unit_area > 0.0)) throw DomainError("gt_cloud: density must be positive");
  PointCloud out;
  for (std::size_t k = 0; k < scene.primitives.size(); ++k) {
    auto rng = make_rng({seed, 0x67746375ULL, static_cast<std::uint64_t>(k)});
    std::visit(
        Overloaded{
            [&](const Sphere& s) {
              const double area = 4.0 * std::numbers::pi * s.radius * s.radius;
              const auto n = std::max<std::int64_t>(
                  1, std::llround(area * samples_per_unit_area));
              const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
              for (std::int64_t i = 0; i < n; ++i) {
                const double z = 1.0 - (2.0 * (i + uniform01(rng))) / static_cast<double>(n);
                const double phi = golden * (i + uniform(rng, -0.25, 0.25));
                const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
                const Vec3 dir(rho * std::cos(phi), rho * std::sin(phi), z);
                out.positions.push_back(s.center + s.radius * dir.normalized());
                out.colors.push_back(s.color);
              }
            },
            [&](const Box& b) {
              const Vec3 size = b.max - b.min;
              for (int axis = 0; axis < 3; ++axis) {
                const int a = (axis + 1) % 3;
                const int c = (axis + 2) % 3;
                for (const double level : {b.min[axis], b.max[axis]}) {
                  Vec3 origin = b.min;
                  origin[axis] = level;
                  add_rectangle(out, origin, Vec3::Unit(a), Vec3::Unit(c), size[a], size[c],
                                b.color, samples_per_unit_area, rng);
                }
              }
            },
            [&](const Plane& p) {
              if (!p.half_extent)
                throw DomainError("gt_cloud: cannot sample an unbounded plane");
              const Vec3 t = p.tangent;
              const Vec3 bt = p.bitangent();
              const Vec3 origin = p.point - p.half_extent->x() * t - p.half_extent->y() * bt;
              add_rectangle(out, origin, t, bt, 2.0 * p.half_extent->x(),
                            2.0 * p.half_extent->y(), p.color, samples_per_unit_area, rng);
            },
        },
        scene.primitives[k]);
  }
  return out;
}

}  // namespace navcrafter
