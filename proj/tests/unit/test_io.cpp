#include <doctest.h>

#include <fstream>

#include "navcrafter/errors.hpp"
#include "navcrafter/io.hpp"
#include "test_support.hpp"

using namespace navcrafter;
namespace fs = std::filesystem;

namespace {

// Values that survive the float32 storage of the binary formats unchanged.
double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

std::vector<unsigned char> bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("PLY round trip with and without colors") {
  const fs::path dir = testsupport::scratch_dir("io_ply");
  std::mt19937_64 rng(191);
  PointCloud c;
  for (int i = 0; i < 200; ++i) {
    const Vec3 p = testsupport::random_vec(rng, 5.0);
    c.positions.emplace_back(f32(p.x()), f32(p.y()), f32(p.z()));
    c.colors.emplace_back((rng() % 256) / 255.0, (rng() % 256) / 255.0, (rng() % 256) / 255.0);
  }
  io::write_ply(dir / "c.ply", c);
  CHECK(io::read_ply(dir / "c.ply") == c);

  PointCloud bare;
  bare.positions = c.positions;
  io::write_ply(dir / "b.ply", bare);
  CHECK(io::read_ply(dir / "b.ply") == bare);

  // float32 x,y,z + 3 uchar per vertex after the header.
  const auto raw = bytes(dir / "c.ply");
  const std::string text(raw.begin(), raw.end());
  const auto body = text.find("end_header\n") + 11;
  CHECK(raw.size() - body == 200u * 15u);
  CHECK(text.find("property float x") != std::string::npos);
}

TEST_CASE("PLY reader accepts ascii files") {
  const fs::path dir = testsupport::scratch_dir("io_ply_ascii");
  {
    std::ofstream out(dir / "a.ply");
    out << "ply\nformat ascii 1.0\nelement vertex 2\nproperty double x\nproperty double y\n"
           "property double z\nproperty uchar red\nproperty uchar green\nproperty uchar blue\n"
           "end_header\n0.5 1 2 255 0 51\n-1 -2 -3 0 255 0\n";
  }
  const PointCloud c = io::read_ply(dir / "a.ply");
  REQUIRE(c.size() == 2);
  CHECK(c.positions[0] == Vec3(0.5, 1, 2));
  CHECK(c.colors[0] == Vec3(1, 0, 0.2));
  CHECK_THROWS_AS(io::read_ply(dir / "missing.ply"), IoError);
}

TEST_CASE("depth file round trip and layout") {
  const fs::path dir = testsupport::scratch_dir("io_depth");
  std::mt19937_64 rng(193);
  DepthMap d(7, 5);
  for (int v = 0; v < 5; ++v)
    for (int u = 0; u < 7; ++u)
      if (testsupport::unit(rng) < 0.8) d.set(u, v, f32(testsupport::uni(rng, 0.1, 9.0)));
  io::write_depth(dir / "d.navd", d);
  CHECK(io::read_depth(dir / "d.navd") == d);
  const auto raw = bytes(dir / "d.navd");
  CHECK(raw.size() == 16u + 4u * 35u);
  CHECK(std::string(raw.begin(), raw.begin() + 4) == "NAVD");

  {
    std::ofstream bad(dir / "bad.navd", std::ios::binary);
    bad << "NOPE";
  }
  CHECK_THROWS_AS(io::read_depth(dir / "bad.navd"), IoError);
}

TEST_CASE("PNG and mask round trip") {
  const fs::path dir = testsupport::scratch_dir("io_png");
  std::mt19937_64 rng(197);
  RgbImage img(9, 6);
  for (double& v : img.data) v = (rng() % 256) / 255.0;
  io::write_png(dir / "i.png", img);
  CHECK(io::read_png(dir / "i.png") == img);

  Mask m(9, 6);
  for (std::size_t i = 0; i < m.values.size(); ++i) m.values[i] = (i % 3 == 0) ? 1 : 0;
  io::write_mask(dir / "m.png", m);
  CHECK(io::read_mask(dir / "m.png") == m);
}

TEST_CASE("JSON round trips") {
  const fs::path dir = testsupport::scratch_dir("io_json");
  std::mt19937_64 rng(199);

  Intrinsics k;
  k.fx = 41.5;
  k.fy = 40.25;
  k.cx = 20.1;
  k.cy = 15.3;
  k.width = 40;
  k.height = 30;
  Trajectory t;
  for (int i = 0; i < 4; ++i) t.poses.push_back(testsupport::random_pose(rng));
  io::write_json(dir / "t.json", io::to_json(t, k));
  const io::TrajectoryFile tf = io::trajectory_from(io::read_json(dir / "t.json"));
  CHECK(tf.trajectory == t);
  CHECK(tf.intrinsics.fx == k.fx);
  CHECK(tf.intrinsics.cy == k.cy);
  CHECK(tf.intrinsics.width == k.width);

  SyntheticScene s;
  Sphere sp;
  sp.center = Vec3(0.1, 0.2, 0.3);
  sp.radius = 0.7;
  s.primitives.push_back(sp);
  Box b;
  b.min = Vec3(-1, -1, 0);
  b.max = Vec3(0.5, 0.25, 1.125);
  s.primitives.push_back(b);
  Plane pl;
  pl.point = Vec3(0, 0, 0);
  pl.normal = Vec3(0, 1, 0);
  pl.tangent = Vec3(1, 0, 0);
  pl.half_extent = Eigen::Vector2d(2, 3);
  s.primitives.push_back(pl);
  s.background = Vec3(0.1, 0.1, 0.2);
  io::write_json(dir / "s.json", io::to_json(s));
  CHECK(io::synthetic_scene_from(io::read_json(dir / "s.json")) == s);

  GaussianScene g;
  g.background = Vec3(0.3, 0.2, 0.1);
  for (int i = 0; i < 3; ++i) {
    Gaussian3D x;
    x.mu = testsupport::random_vec(rng, 1);
    x.rotation = testsupport::random_rotation(rng);
    x.opacity = testsupport::unit(rng);
    g.gaussians.push_back(x);
  }
  io::write_json(dir / "g.json", io::to_json(g));
  CHECK(io::gaussian_scene_from(io::read_json(dir / "g.json")) == g);
  // A bare array of Gaussians is accepted too.
  const GaussianScene bare = io::gaussian_scene_from(io::to_json(g).at("gaussians"));
  CHECK(bare.gaussians == g.gaussians);

  const ConvAdapter a = ConvAdapter::seeded(4, 2);
  const LoraWeights l = LoraWeights::seeded(4, 2, 0.5, 3);
  io::write_json(dir / "w.json", io::to_json(a, l));
  const auto [a2, l2] = io::conditioning_weights_from(io::read_json(dir / "w.json"));
  CHECK(a2.weights == a.weights);
  CHECK(a2.bias == a.bias);
  CHECK(a2.kernel == a.kernel);
  CHECK(a2.stride == a.stride);
  CHECK(l2.down == l.down);
  CHECK(l2.up == l.up);
  CHECK(l2.alpha == l.alpha);

  CalibrationParams cp{1.25, -0.125, 0.01, 77};
  const CalibrationParams cp2 = io::calibration_from(io::to_json(cp));
  CHECK(cp2.scale == cp.scale);
  CHECK(cp2.bias == cp.bias);
  CHECK(cp2.pixels_used == cp.pixels_used);

  NoiseModel n{0.01, 0.2, 42, 0.3, 0.15};
  const NoiseModel n2 = io::noise_model_from(io::to_json(n));
  CHECK(n2.depth_sigma == n.depth_sigma);
  CHECK(n2.dropout_ratio == n.dropout_ratio);
  CHECK(n2.seed == n.seed);
  CHECK(n2.collision_clearance == n.collision_clearance);
  CHECK(n2.collision_sigma == n.collision_sigma);

  SearchSpace sp2;
  sp2.azimuth_span_deg = 120;
  sp2.elevation_max_deg = 45;
  const SearchSpace sp3 = io::search_space_from(io::to_json(sp2));
  CHECK(sp3.azimuth_span_deg == 120);
  CHECK(sp3.elevation_max_deg == 45);
}

TEST_CASE("malformed JSON is an IO error") {
  const fs::path dir = testsupport::scratch_dir("io_bad_json");
  {
    std::ofstream out(dir / "x.json");
    out << "{ not json";
  }
  CHECK_THROWS_AS(io::read_json(dir / "x.json"), IoError);
}

}  // TEST_SUITE
