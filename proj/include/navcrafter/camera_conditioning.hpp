#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "navcrafter/camera_geometry.hpp"

namespace navcrafter {

/// T x H x W grid of C-channel tokens, channel-fastest layout.
struct TokenGrid {
  int frames = 0;
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> values;

  TokenGrid() = default;
  TokenGrid(int t, int h, int w, int c)
      : frames(t), height(h), width(w), channels(c),
        values(static_cast<std::size_t>(t) * h * w * c, 0.0) {}

  std::size_t tokens() const { return static_cast<std::size_t>(frames) * height * width; }
  std::size_t offset(int t, int h, int w) const {
    return ((static_cast<std::size_t>(t) * height + h) * width + w) * channels;
  }
  double& at(int t, int h, int w, int c) { return values[offset(t, h, w) + c]; }
  double at(int t, int h, int w, int c) const { return values[offset(t, h, w) + c]; }

  bool same_shape(const TokenGrid& o) const {
    return frames == o.frames && height == o.height && width == o.width && channels == o.channels;
  }
  bool operator==(const TokenGrid&) const = default;
};

/// Strided, zero-padded 3D convolution from 6 Plücker channels to C
/// channels. Weights are laid out [out][kt][kh][kw][in].
struct ConvAdapter {
  std::array<int, 3> kernel{3, 3, 3};   // t, h, w
  std::array<int, 3> stride{2, 4, 4};
  std::array<int, 3> padding{1, 1, 1};
  int in_channels = 6;
  int out_channels = 8;
  std::vector<double> weights;
  std::vector<double> bias;

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization, zero bias.
  static ConvAdapter seeded(int out_channels, std::uint64_t seed,
                            std::array<int, 3> kernel = {3, 3, 3},
                            std::array<int, 3> stride = {2, 4, 4},
                            std::array<int, 3> padding = {1, 1, 1});

  void validate() const;
  std::array<int, 3> output_dims(int t, int h, int w) const;
  std::size_t weight_index(int o, int dt, int dh, int dw, int i) const {
    return ((((static_cast<std::size_t>(o) * kernel[0] + dt) * kernel[1] + dh) * kernel[2] + dw) *
                in_channels) +
           i;
  }
};

struct LoraWeights {
  int rank = 1;
  int channels = 2;
  std::vector<double> down;  // rank x channels, row-major
  std::vector<double> up;    // channels x rank, row-major
  double alpha = 1.0;

  static LoraWeights seeded(int channels, int rank, double alpha, std::uint64_t seed);
  void validate() const;
};

TokenGrid plucker_tokens(const PluckerImage& p);

/// x_c = A(p).
TokenGrid encode_camera(const PluckerImage& p, const ConvAdapter& adapter);
TokenGrid encode_camera_serial(const PluckerImage& p, const ConvAdapter& adapter);

/// Elementwise x_v + x_c.
TokenGrid inject(const TokenGrid& x_v, const TokenGrid& x_c);

/// Q + alpha * W_u (W_d x_l), per token.
TokenGrid lora_modulate(const TokenGrid& q, const TokenGrid& x_l, const LoraWeights& w);

}  // namespace navcrafter
