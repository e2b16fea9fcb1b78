#include "navcrafter/depth_calibration.hpp"

#include <array>
#include <cmath>
#include <utility>

#include "navcrafter/errors.hpp"

namespace navcrafter {

namespace {

class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

constexpr double kMaxCondition = 1e12;

}  // namespace

CalibrationParams calibrate(const DepthMap& d_m, const DepthMap& d_v, const Mask& mask) {
  if (d_m.width != d_v.width || d_m.height != d_v.height || mask.width != d_m.width ||
      mask.height != d_m.height)
    throw DomainError("calibrate: depth maps and mask must share a shape");

  CompensatedSum sxx, sx, sxy, sy;
  std::size_t n = 0;
  for (int v = 0; v < d_m.height; ++v) {
    for (int u = 0; u < d_m.width; ++u) {
      if (!mask.at(u, v) || !d_m.is_valid(u, v) || !d_v.is_valid(u, v)) continue;
      const double x = 1.0 / d_m.at(u, v);
      const double y = 1.0 / d_v.at(u, v);
      sxx.add(x * x);
      sx.add(x);
      sxy.add(x * y);
      sy.add(y);
      ++n;
    }
  }
  if (n < 2) throw DomainError("calibrate: need at least 2 usable pixels");

  // [a b; b c] [scale; bias] = [r0; r1]
  const double a = sxx.value();
  const double b = sx.value();
  const double c = static_cast<double>(n);
  const double r0 = sxy.value();
  const double r1 = sy.value();

  // Condition number of the symmetric PSD system from its eigenvalues.
  const double mean = 0.5 * (a + c);
  const double spread = std::hypot(0.5 * (a - c), b);
  const double lmax = mean + spread;
  const double lmin = (a * c - b * b) / lmax;
  if (!(lmin > 0.0) || lmax / lmin > kMaxCondition)
    throw DegenerateInputError("calibrate: inverse depth is constant over the mask");

  // Partial pivoting on the first column.
  std::array<std::array<double, 3>, 2> m{{{a, b, r0}, {b, c, r1}}};
  if (std::abs(m[1][0]) > std::abs(m[0][0])) std::swap(m[0], m[1]);
  const double f = m[1][0] / m[0][0];
  const double m11 = m[1][1] - f * m[0][1];
  const double rhs1 = m[1][2] - f * m[0][2];
  CalibrationParams p;
  p.bias = rhs1 / m11;
  p.scale = (m[0][2] - m[0][1] * p.bias) / m[0][0];
  p.pixels_used = n;

  CompensatedSum sq;
  for (int v = 0; v < d_m.height; ++v) {
    for (int u = 0; u < d_m.width; ++u) {
      if (!mask.at(u, v) || !d_m.is_valid(u, v) || !d_v.is_valid(u, v)) continue;
      const double r = p.scale / d_m.at(u, v) + p.bias - 1.0 / d_v.at(u, v);
      sq.add(r * r);
    }
  }
  p.residual = std::sqrt(std::max(0.0, sq.value()) / c);
  return p;
}

DepthMap apply_calibration(const DepthMap& d_m, const CalibrationParams& params) {
  if (!std::isfinite(params.scale) || !std::isfinite(params.bias))
    throw DomainError("apply_calibration: parameters must be finite");
  DepthMap out(d_m.width, d_m.height);
  for (int v = 0; v < d_m.height; ++v) {
    for (int u = 0; u < d_m.width; ++u) {
      if (!d_m.is_valid(u, v)) continue;
      const double inv = params.scale / d_m.at(u, v) + params.bias;
      if (inv > 0.0) out.set(u, v, 1.0 / inv);
    }
  }
  return out;
}

}  // namespace navcrafter
