#include "navcrafter/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "navcrafter/errors.hpp"

namespace navcrafter::io {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  return in;
}

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in, const fs::path& path) {
  T v;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw IoError("unexpected end of file: " + path.string());
  return v;
}

std::uint8_t quantize(double c) {
  return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(c, 0.0, 1.0)));
}

}  // namespace

// ---------------------------------------------------------------- PLY

void write_ply(const fs::path& path, const PointCloud& cloud) {
  cloud.validate();
  auto out = open_out(path);
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << cloud.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n";
  if (cloud.has_colors())
    out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "end_header\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.positions[i];
    put(out, static_cast<float>(p.x()));
    put(out, static_cast<float>(p.y()));
    put(out, static_cast<float>(p.z()));
    if (cloud.has_colors()) {
      const Vec3& c = cloud.colors[i];
      put(out, quantize(c.x()));
      put(out, quantize(c.y()));
      put(out, quantize(c.z()));
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

namespace {

struct PlyProperty {
  std::string type;
  std::string name;
};

std::size_t ply_type_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "float" || t == "int32" || t == "uint32" ||
      t == "float32")
    return 4;
  if (t == "double" || t == "float64") return 8;
  return 0;
}

double ply_decode(const std::string& t, const char* p) {
  auto load = [p]<class T>(T) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return static_cast<double>(v);
  };
  if (t == "char" || t == "int8") return load(std::int8_t{});
  if (t == "uchar" || t == "uint8") return load(std::uint8_t{});
  if (t == "short" || t == "int16") return load(std::int16_t{});
  if (t == "ushort" || t == "uint16") return load(std::uint16_t{});
  if (t == "int" || t == "int32") return load(std::int32_t{});
  if (t == "uint" || t == "uint32") return load(std::uint32_t{});
  if (t == "float" || t == "float32") return load(float{});
  return load(double{});
}

}  // namespace

PointCloud read_ply(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  std::getline(in, line);
  if (line != "ply") throw IoError("not a PLY file: " + path.string());

  std::string format;
  std::size_t count = 0;
  bool in_vertex = false, seen_vertex = false;
  std::vector<PlyProperty> props;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "format") {
      ls >> format;
    } else if (key == "element") {
      std::string name;
      ls >> name;
      in_vertex = name == "vertex";
      if (in_vertex) {
        if (seen_vertex) throw IoError("PLY: duplicate vertex element");
        seen_vertex = true;
        ls >> count;
      } else if (!seen_vertex) {
        throw IoError("PLY: elements before vertex are not supported");
      }
    } else if (key == "property" && in_vertex) {
      PlyProperty p;
      ls >> p.type;
      if (p.type == "list") throw IoError("PLY: list properties on vertices are not supported");
      ls >> p.name;
      if (ply_type_size(p.type) == 0) throw IoError("PLY: unknown property type " + p.type);
      props.push_back(p);
    } else if (key == "end_header") {
      break;
    }
  }
  if (format != "binary_little_endian" && format != "ascii")
    throw IoError("PLY: unsupported format '" + format + "'");

  auto find = [&](const char* name) -> int {
    for (std::size_t i = 0; i < props.size(); ++i)
      if (props[i].name == name) return static_cast<int>(i);
    return -1;
  };
  const int ix = find("x"), iy = find("y"), iz = find("z");
  if (ix < 0 || iy < 0 || iz < 0) throw IoError("PLY: missing x/y/z properties");
  const int ir = find("red"), ig = find("green"), ib = find("blue");
  const bool colored = ir >= 0 && ig >= 0 && ib >= 0;

  PointCloud cloud;
  cloud.positions.reserve(count);
  if (colored) cloud.colors.reserve(count);
  std::vector<double> row(props.size());
  std::vector<std::size_t> offsets;
  std::size_t stride = 0;
  for (const auto& p : props) {
    offsets.push_back(stride);
    stride += ply_type_size(p.type);
  }
  std::vector<char> buf(stride);
  for (std::size_t n = 0; n < count; ++n) {
    if (format == "ascii") {
      for (double& v : row)
        if (!(in >> v)) throw IoError("PLY: truncated ascii body");
    } else {
      if (!in.read(buf.data(), static_cast<std::streamsize>(stride)))
        throw IoError("PLY: truncated binary body");
      for (std::size_t k = 0; k < props.size(); ++k)
        row[k] = ply_decode(props[k].type, buf.data() + offsets[k]);
    }
    cloud.positions.emplace_back(row[ix], row[iy], row[iz]);
    if (colored) {
      auto scale = [&](int k) {
        const std::string& t = props[k].type;
        return (t == "float" || t == "float32" || t == "double" || t == "float64") ? row[k]
                                                                                   : row[k] / 255.0;
      };
      cloud.colors.emplace_back(scale(ir), scale(ig), scale(ib));
    }
  }
  return cloud;
}

// ---------------------------------------------------------------- depth

void write_depth(const fs::path& path, const DepthMap& depth) {
  auto out = open_out(path);
  out.write("NAVD", 4);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(depth.width));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(depth.height));
  put<std::uint32_t>(out, 0);  // reserved
  for (std::size_t i = 0; i < depth.pixel_count(); ++i)
    put<float>(out, depth.valid[i] ? static_cast<float>(depth.values[i]) : 0.0f);
  if (!out) throw IoError("write failed: " + path.string());
}

DepthMap read_depth(const fs::path& path) {
  auto in = open_in(path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "NAVD", 4) != 0)
    throw IoError("not a depth file: " + path.string());
  const auto w = get<std::uint32_t>(in, path);
  const auto h = get<std::uint32_t>(in, path);
  get<std::uint32_t>(in, path);  // reserved
  if (w == 0 || h == 0 || w > (1u << 16) || h > (1u << 16))
    throw IoError("implausible depth dimensions in " + path.string());
  DepthMap d(static_cast<int>(w), static_cast<int>(h));
  for (int v = 0; v < d.height; ++v)
    for (int u = 0; u < d.width; ++u) d.set(u, v, get<float>(in, path));
  return d;
}

// ---------------------------------------------------------------- PNG

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void write_png_rows(const fs::path& path, int width, int height, int color_type, int channels,
                    const std::vector<std::uint8_t>& pixels) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot open for writing: " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encode failed: " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int v = 0; v < height; ++v)
    png_write_row(png, pixels.data() + static_cast<std::size_t>(v) * width * channels);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// Decodes to 8-bit RGB.
std::vector<std::uint8_t> read_png_rgb(const fs::path& path, int& width, int& height) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open for reading: " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw IoError("not a PNG file: " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  std::vector<std::uint8_t> pixels;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("PNG decode failed: " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  const int color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  if (png_get_rowbytes(png, info) != static_cast<std::size_t>(width) * 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("PNG: unexpected row layout in " + path.string());
  }
  pixels.resize(static_cast<std::size_t>(width) * height * 3);
  for (int v = 0; v < height; ++v)
    png_read_row(png, pixels.data() + static_cast<std::size_t>(v) * width * 3, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return pixels;
}

}  // namespace

void write_png(const fs::path& path, const RgbImage& image) {
  std::vector<std::uint8_t> px(image.data.size());
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = quantize(image.data[i]);
  write_png_rows(path, image.width, image.height, PNG_COLOR_TYPE_RGB, 3, px);
}

RgbImage read_png(const fs::path& path) {
  int w = 0, h = 0;
  const auto px = read_png_rgb(path, w, h);
  RgbImage img(w, h);
  for (std::size_t i = 0; i < px.size(); ++i) img.data[i] = px[i] / 255.0;
  return img;
}

Mask read_mask(const fs::path& path) {
  int w = 0, h = 0;
  const auto px = read_png_rgb(path, w, h);
  Mask m(w, h);
  for (std::size_t i = 0; i < m.values.size(); ++i)
    m.values[i] = (px[3 * i] | px[3 * i + 1] | px[3 * i + 2]) != 0 ? 1 : 0;
  return m;
}

void write_mask(const fs::path& path, const Mask& mask) {
  std::vector<std::uint8_t> px(mask.values.size());
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = mask.values[i] ? 255 : 0;
  write_png_rows(path, mask.width, mask.height, PNG_COLOR_TYPE_GRAY, 1, px);
}

// ---------------------------------------------------------------- JSON

json read_json(const fs::path& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw DomainError("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

namespace {

json mat3_json(const Mat3& m) {
  json a = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) a.push_back(m(r, c));
  return a;
}

Mat3 mat3_from(const json& j) {
  if (!j.is_array() || j.size() != 9) throw DomainError("expected 9 row-major reals");
  Mat3 m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = j[3 * r + c].get<double>();
  return m;
}

template <class T>
void read_opt(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

}  // namespace

json to_json(const Intrinsics& intr) {
  return {{"fx", intr.fx}, {"fy", intr.fy},         {"cx", intr.cx},
          {"cy", intr.cy}, {"width", intr.width}, {"height", intr.height}};
}

Intrinsics intrinsics_from(const json& j) {
  Intrinsics intr;
  intr.fx = j.at("fx").get<double>();
  intr.fy = j.at("fy").get<double>();
  intr.cx = j.at("cx").get<double>();
  intr.cy = j.at("cy").get<double>();
  intr.width = j.at("width").get<int>();
  intr.height = j.at("height").get<int>();
  intr.validate();
  return intr;
}

json to_json(const CameraPose& pose) {
  return {{"rotation", mat3_json(pose.rotation)}, {"center", to_json(pose.center)}};
}

CameraPose pose_from(const json& j) {
  CameraPose p;
  p.rotation = mat3_from(j.at("rotation"));
  p.center = vec3_from(j.at("center"));
  p.validate();
  return p;
}

json to_json(const Trajectory& traj, const Intrinsics& intr) {
  json frames = json::array();
  for (const CameraPose& p : traj.poses) frames.push_back(to_json(p));
  return {{"frames", frames}, {"intrinsics", to_json(intr)}};
}

TrajectoryFile trajectory_from(const json& j) {
  TrajectoryFile f;
  for (const json& fr : j.at("frames")) f.trajectory.poses.push_back(pose_from(fr));
  f.intrinsics = intrinsics_from(j.at("intrinsics"));
  return f;
}

json to_json(const SyntheticScene& scene) {
  json prims = json::array();
  for (const Primitive& prim : scene.primitives) {
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Sphere>) {
            prims.push_back({{"type", "sphere"},
                             {"center", to_json(p.center)},
                             {"radius", p.radius},
                             {"color", to_json(p.color)}});
          } else if constexpr (std::is_same_v<T, Box>) {
            prims.push_back({{"type", "box"},
                             {"min", to_json(p.min)},
                             {"max", to_json(p.max)},
                             {"color", to_json(p.color)}});
          } else {
            json o = {{"type", "plane"},
                      {"point", to_json(p.point)},
                      {"normal", to_json(p.normal)},
                      {"tangent", to_json(p.tangent)},
                      {"color", to_json(p.color)}};
            if (p.half_extent) o["half_extent"] = {p.half_extent->x(), p.half_extent->y()};
            prims.push_back(o);
          }
        },
        prim);
  }
  return {{"primitives", prims}, {"background", to_json(scene.background)}};
}

SyntheticScene synthetic_scene_from(const json& j) {
  SyntheticScene scene;
  if (j.contains("background")) scene.background = vec3_from(j.at("background"));
  for (const json& o : j.at("primitives")) {
    const std::string type = o.at("type").get<std::string>();
    const Vec3 color = o.contains("color") ? vec3_from(o.at("color")) : Vec3::Constant(0.5);
    if (type == "sphere") {
      scene.primitives.push_back(
          Sphere{vec3_from(o.at("center")), o.at("radius").get<double>(), color});
    } else if (type == "box") {
      scene.primitives.push_back(Box{vec3_from(o.at("min")), vec3_from(o.at("max")), color});
    } else if (type == "plane") {
      Plane p;
      p.point = vec3_from(o.at("point"));
      p.normal = vec3_from(o.at("normal")).normalized();
      p.color = color;
      p.tangent = o.contains("tangent") ? vec3_from(o.at("tangent")) : default_tangent(p.normal);
      if (o.contains("half_extent")) {
        const json& he = o.at("half_extent");
        if (!he.is_array() || he.size() != 2) throw DomainError("plane half_extent needs 2 reals");
        p.half_extent = Eigen::Vector2d(he[0].get<double>(), he[1].get<double>());
      }
      scene.primitives.push_back(p);
    } else {
      throw DomainError("unknown primitive type '" + type + "'");
    }
  }
  scene.validate();
  return scene;
}

json to_json(const GaussianScene& scene) {
  json gs = json::array();
  for (const Gaussian3D& g : scene.gaussians) {
    gs.push_back({{"mu", to_json(g.mu)},
                  {"color", to_json(g.color)},
                  {"opacity", g.opacity},
                  {"scale", to_json(g.scale)},
                  {"rotation", mat3_json(g.rotation)}});
  }
  return {{"gaussians", gs}, {"background", to_json(scene.background)}};
}

GaussianScene gaussian_scene_from(const json& j) {
  GaussianScene scene;
  // Either a bare array of Gaussians or {"gaussians": [...], "background": ...}.
  const bool bare = j.is_array();
  if (!bare && j.contains("background")) scene.background = vec3_from(j.at("background"));
  for (const json& o : bare ? j : j.at("gaussians")) {
    Gaussian3D g;
    g.mu = vec3_from(o.at("mu"));
    if (o.contains("color")) g.color = vec3_from(o.at("color"));
    read_opt(o, "opacity", g.opacity);
    if (o.contains("scale")) g.scale = vec3_from(o.at("scale"));
    if (o.contains("rotation")) g.rotation = mat3_from(o.at("rotation"));
    g.validate();
    scene.gaussians.push_back(g);
  }
  return scene;
}

json to_json(const ConvAdapter& a, const LoraWeights& l) {
  return {{"adapter",
           {{"kernel", a.kernel},
            {"stride", a.stride},
            {"padding", a.padding},
            {"in_channels", a.in_channels},
            {"out_channels", a.out_channels},
            {"weights", a.weights},
            {"bias", a.bias}}},
          {"lora",
           {{"rank", l.rank},
            {"channels", l.channels},
            {"alpha", l.alpha},
            {"down", l.down},
            {"up", l.up}}}};
}

std::pair<ConvAdapter, LoraWeights> conditioning_weights_from(const json& j) {
  ConvAdapter a;
  const json& ja = j.at("adapter");
  a.kernel = ja.at("kernel").get<std::array<int, 3>>();
  a.stride = ja.at("stride").get<std::array<int, 3>>();
  a.padding = ja.at("padding").get<std::array<int, 3>>();
  a.in_channels = ja.at("in_channels").get<int>();
  a.out_channels = ja.at("out_channels").get<int>();
  a.weights = ja.at("weights").get<std::vector<double>>();
  a.bias = ja.at("bias").get<std::vector<double>>();
  a.validate();
  LoraWeights l;
  const json& jl = j.at("lora");
  l.rank = jl.at("rank").get<int>();
  l.channels = jl.at("channels").get<int>();
  l.alpha = jl.at("alpha").get<double>();
  l.down = jl.at("down").get<std::vector<double>>();
  l.up = jl.at("up").get<std::vector<double>>();
  l.validate();
  return {a, l};
}

json to_json(const CalibrationParams& p) {
  return {{"scale", p.scale},
          {"bias", p.bias},
          {"residual", p.residual},
          {"pixels_used", p.pixels_used}};
}

CalibrationParams calibration_from(const json& j) {
  CalibrationParams p;
  p.scale = j.at("scale").get<double>();
  p.bias = j.at("bias").get<double>();
  read_opt(j, "residual", p.residual);
  read_opt(j, "pixels_used", p.pixels_used);
  return p;
}

json to_json(const ReconReport& r) {
  return {{"coverage", r.coverage},
          {"noise_ratio", r.noise_ratio},
          {"fscore", r.fscore},
          {"tau", r.tau},
          {"runtime", r.runtime}};
}

json to_json(const NoiseModel& n) {
  return {{"depth_sigma", n.depth_sigma},
          {"dropout_ratio", n.dropout_ratio},
          {"seed", n.seed},
          {"collision_clearance", n.collision_clearance},
          {"collision_sigma", n.collision_sigma}};
}

NoiseModel noise_model_from(const json& j) {
  NoiseModel n;
  read_opt(j, "depth_sigma", n.depth_sigma);
  read_opt(j, "dropout_ratio", n.dropout_ratio);
  read_opt(j, "seed", n.seed);
  read_opt(j, "collision_clearance", n.collision_clearance);
  read_opt(j, "collision_sigma", n.collision_sigma);
  n.validate();
  return n;
}

json to_json(const SearchSpace& s) {
  return {{"azimuth_center_deg", s.azimuth_center_deg},
          {"azimuth_span_deg", s.azimuth_span_deg},
          {"elevation_min_deg", s.elevation_min_deg},
          {"elevation_max_deg", s.elevation_max_deg},
          {"azimuth_step_deg", s.azimuth_step_deg},
          {"elevation_step_deg", s.elevation_step_deg},
          {"up", to_json(s.up)}};
}

SearchSpace search_space_from(const json& j) {
  SearchSpace s;
  read_opt(j, "azimuth_center_deg", s.azimuth_center_deg);
  read_opt(j, "azimuth_span_deg", s.azimuth_span_deg);
  read_opt(j, "elevation_min_deg", s.elevation_min_deg);
  read_opt(j, "elevation_max_deg", s.elevation_max_deg);
  read_opt(j, "azimuth_step_deg", s.azimuth_step_deg);
  read_opt(j, "elevation_step_deg", s.elevation_step_deg);
  if (j.contains("up")) s.up = vec3_from(j.at("up"));
  return s;
}

}  // namespace navcrafter::io
