// Serial reference vs OpenMP version of each parallel kernel.

#include <random>

#include <benchmark/benchmark.h>

#include "navcrafter/camera_conditioning.hpp"
#include "navcrafter/gaussian_renderer.hpp"
#include "navcrafter/metrics.hpp"
#include "navcrafter/pointcloud.hpp"
#include "navcrafter/rng.hpp"
#include "navcrafter/synthetic_oracle.hpp"

using namespace navcrafter;

namespace {

Intrinsics intrinsics() {
  Intrinsics k;
  k.width = 160;
  k.height = 120;
  k.fx = k.fy = 120;
  k.cx = 80;
  k.cy = 60;
  return k;
}

PointCloud cloud(std::size_t n, double extent, double z, std::uint64_t seed) {
  auto rng = make_rng({seed});
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i)
    c.positions.emplace_back(uniform(rng, -extent, extent), uniform(rng, -extent, extent),
                             z + uniform(rng, -extent, extent));
  return c;
}

SyntheticScene scene() {
  SyntheticScene s;
  Sphere a;
  a.center = Vec3(0, 0, 4);
  s.primitives.push_back(a);
  Box b;
  b.min = Vec3(-3, -2, 6);
  b.max = Vec3(3, 2, 7);
  s.primitives.push_back(b);
  Plane floor;
  floor.point = Vec3(0, 1.5, 0);
  floor.normal = Vec3(0, -1, 0);
  s.primitives.push_back(floor);
  return s;
}

GaussianScene gaussians(int n) {
  auto rng = make_rng({7});
  GaussianScene s;
  for (int i = 0; i < n; ++i) {
    Gaussian3D g;
    g.mu = Vec3(uniform(rng, -1, 1), uniform(rng, -1, 1), 4 + uniform(rng, -1, 1));
    g.scale = Vec3::Constant(uniform(rng, 0.05, 0.3));
    g.opacity = uniform(rng, 0.2, 1.0);
    s.gaussians.push_back(g);
  }
  return s;
}

template <bool Serial>
void BM_render_mask(benchmark::State& state) {
  const PointCloud c = cloud(200000, 1.5, 4.0, 1);
  const Intrinsics k = intrinsics();
  for (auto _ : state) {
    MaskRender r = Serial ? render_mask_serial(c, CameraPose::identity(), k)
                          : render_mask(c, CameraPose::identity(), k);
    benchmark::DoNotOptimize(r);
  }
}

template <bool Serial>
void BM_render_view(benchmark::State& state) {
  const SyntheticScene s = scene();
  const Intrinsics k = intrinsics();
  for (auto _ : state) {
    AnnotatedView v = Serial ? render_view_serial(s, CameraPose::identity(), k)
                             : render_view(s, CameraPose::identity(), k);
    benchmark::DoNotOptimize(v);
  }
}

template <bool Serial>
void BM_render_image(benchmark::State& state) {
  const GaussianScene s = gaussians(200);
  Intrinsics k = intrinsics();
  k.width = 64;
  k.height = 48;
  k.cx = 32;
  k.cy = 24;
  k.fx = k.fy = 50;
  for (auto _ : state) {
    GaussianRender r = Serial ? render_image_serial(s, CameraPose::identity(), k)
                              : render_image(s, CameraPose::identity(), k);
    benchmark::DoNotOptimize(r);
  }
}

template <bool Serial>
void BM_encode_camera(benchmark::State& state) {
  std::vector<CameraPose> poses(16, CameraPose::identity());
  for (std::size_t i = 0; i < poses.size(); ++i) poses[i].center = Vec3(0.1 * i, 0, 0);
  const PluckerImage p = plucker_embed(poses, intrinsics(), 64, 64);
  const ConvAdapter a = ConvAdapter::seeded(32, 3);
  for (auto _ : state) {
    TokenGrid t = Serial ? encode_camera_serial(p, a) : encode_camera(p, a);
    benchmark::DoNotOptimize(t);
  }
}

template <bool Serial>
void BM_coverage(benchmark::State& state) {
  const PointCloud pred = cloud(100000, 1.0, 0.0, 2), gt = cloud(100000, 1.0, 0.0, 3);
  for (auto _ : state) {
    double c = Serial ? coverage_serial(pred, gt, 0.02) : coverage(pred, gt, 0.02);
    benchmark::DoNotOptimize(c);
  }
}

}  // namespace

BENCHMARK(BM_render_mask<true>)->Name("render_mask/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_render_mask<false>)->Name("render_mask/omp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_render_view<true>)->Name("render_view/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_render_view<false>)->Name("render_view/omp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_render_image<true>)->Name("render_image/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_render_image<false>)->Name("render_image/omp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_encode_camera<true>)->Name("encode_camera/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_encode_camera<false>)->Name("encode_camera/omp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_coverage<true>)->Name("coverage/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_coverage<false>)->Name("coverage/omp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
