#include "navcrafter/camera_conditioning.hpp"

#include <cmath>

#include "navcrafter/errors.hpp"
#include "navcrafter/parallel.hpp"
#include "navcrafter/rng.hpp"

namespace navcrafter {

ConvAdapter ConvAdapter::seeded(int out_channels, std::uint64_t seed, std::array<int, 3> kernel,
                                std::array<int, 3> stride, std::array<int, 3> padding) {
  ConvAdapter a;
  a.kernel = kernel;
  a.stride = stride;
  a.padding = padding;
  a.out_channels = out_channels;
  const std::size_t fan_in = static_cast<std::size_t>(kernel[0]) * kernel[1] * kernel[2] * 6;
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  auto rng = make_rng({seed, 0x61646170ULL});
  a.weights.resize(fan_in * out_channels);
  for (double& w : a.weights) w = uniform(rng, -bound, bound);
  a.bias.assign(out_channels, 0.0);
  return a;
}

void ConvAdapter::validate() const {
  for (int d = 0; d < 3; ++d) {
    if (kernel[d] < 1 || stride[d] < 1 || padding[d] < 0)
      throw DomainError("adapter: kernel/stride must be >= 1 and padding >= 0");
  }
  if (in_channels != 6) throw DomainError("adapter: input channels must be 6");
  if (out_channels < 1) throw DomainError("adapter: output channels must be >= 1");
  const std::size_t expect =
      static_cast<std::size_t>(out_channels) * kernel[0] * kernel[1] * kernel[2] * in_channels;
  if (weights.size() != expect) throw DomainError("adapter: weight count does not match shape");
  if (bias.size() != static_cast<std::size_t>(out_channels))
    throw DomainError("adapter: bias count does not match output channels");
}

std::array<int, 3> ConvAdapter::output_dims(int t, int h, int w) const {
  const std::array<int, 3> in{t, h, w};
  std::array<int, 3> out{};
  for (int d = 0; d < 3; ++d) {
    const int span = in[d] + 2 * padding[d] - kernel[d];
    if (span < 0) throw DomainError("adapter: input smaller than the kernel");
    out[d] = span / stride[d] + 1;
  }
  return out;
}

LoraWeights LoraWeights::seeded(int channels, int rank, double alpha, std::uint64_t seed) {
  LoraWeights w;
  w.channels = channels;
  w.rank = rank;
  w.alpha = alpha;
  auto rng = make_rng({seed, 0x6c6f7261ULL});
  const double bd = 1.0 / std::sqrt(static_cast<double>(channels));
  const double bu = 1.0 / std::sqrt(static_cast<double>(rank));
  w.down.resize(static_cast<std::size_t>(rank) * channels);
  w.up.resize(static_cast<std::size_t>(channels) * rank);
  for (double& x : w.down) x = uniform(rng, -bd, bd);
  for (double& x : w.up) x = uniform(rng, -bu, bu);
  return w;
}

void LoraWeights::validate() const {
  if (rank < 1 || rank >= channels) throw DomainError("lora: need 1 <= rank < channels");
  if (!(alpha >= 0.0)) throw DomainError("lora: alpha must be >= 0");
  const auto n = static_cast<std::size_t>(rank) * channels;
  if (down.size() != n || up.size() != n) throw DomainError("lora: weight sizes do not match");
}

TokenGrid plucker_tokens(const PluckerImage& p) {
  TokenGrid g(p.frames(), p.height(), p.width(), 6);
  std::copy(p.values().begin(), p.values().end(), g.values.begin());
  return g;
}

namespace {

void convolve_frame(const PluckerImage& p, const ConvAdapter& a, int ot, TokenGrid& out) {
  for (int oh = 0; oh < out.height; ++oh) {
    for (int ow = 0; ow < out.width; ++ow) {
      for (int o = 0; o < a.out_channels; ++o) {
        double acc = a.bias[o];
        for (int dt = 0; dt < a.kernel[0]; ++dt) {
          const int t = ot * a.stride[0] - a.padding[0] + dt;
          if (t < 0 || t >= p.frames()) continue;
          for (int dh = 0; dh < a.kernel[1]; ++dh) {
            const int h = oh * a.stride[1] - a.padding[1] + dh;
            if (h < 0 || h >= p.height()) continue;
            for (int dw = 0; dw < a.kernel[2]; ++dw) {
              const int w = ow * a.stride[2] - a.padding[2] + dw;
              if (w < 0 || w >= p.width()) continue;
              const auto px = p.at(t, h, w);
              for (int i = 0; i < 6; ++i) acc += a.weights[a.weight_index(o, dt, dh, dw, i)] * px[i];
            }
          }
        }
        out.at(ot, oh, ow, o) = acc;
      }
    }
  }
}

TokenGrid prepare(const PluckerImage& p, const ConvAdapter& a) {
  a.validate();
  if (p.frames() < 1) throw DomainError("encode_camera: empty Plücker image");
  const auto dims = a.output_dims(p.frames(), p.height(), p.width());
  return TokenGrid(dims[0], dims[1], dims[2], a.out_channels);
}

}  // namespace

TokenGrid encode_camera_serial(const PluckerImage& p, const ConvAdapter& adapter) {
  TokenGrid out = prepare(p, adapter);
  for (int t = 0; t < out.frames; ++t) convolve_frame(p, adapter, t, out);
  return out;
}

TokenGrid encode_camera(const PluckerImage& p, const ConvAdapter& adapter) {
  TokenGrid out = prepare(p, adapter);
  NAVCRAFTER_OMP(parallel for schedule(static))
  for (int t = 0; t < out.frames; ++t) convolve_frame(p, adapter, t, out);
  return out;
}

TokenGrid inject(const TokenGrid& x_v, const TokenGrid& x_c) {
  if (!x_v.same_shape(x_c)) throw DomainError("inject: token grids differ in shape");
  TokenGrid out = x_v;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += x_c.values[i];
  return out;
}

TokenGrid lora_modulate(const TokenGrid& q, const TokenGrid& x_l, const LoraWeights& w) {
  w.validate();
  if (q.frames != x_l.frames || q.height != x_l.height || q.width != x_l.width)
    throw DomainError("lora_modulate: query and control tokens differ in dims");
  if (q.channels != w.channels || x_l.channels != w.channels)
    throw DomainError("lora_modulate: channel count does not match the LoRA weights");
  TokenGrid out = q;
  if (w.alpha == 0.0) return out;

  const int c = w.channels;
  std::vector<double> hidden(w.rank);
  for (std::size_t tok = 0; tok < q.tokens(); ++tok) {
    const double* x = x_l.values.data() + tok * c;
    double* y = out.values.data() + tok * c;
    for (int r = 0; r < w.rank; ++r) {
      double acc = 0.0;
      for (int k = 0; k < c; ++k) acc += w.down[static_cast<std::size_t>(r) * c + k] * x[k];
      hidden[r] = acc;
    }
    for (int k = 0; k < c; ++k) {
      double acc = 0.0;
      for (int r = 0; r < w.rank; ++r) acc += w.up[static_cast<std::size_t>(k) * w.rank + r] * hidden[r];
      const double delta = w.alpha * acc;
      if (delta != 0.0) y[k] += delta;
    }
  }
  return out;
}

}  // namespace navcrafter
