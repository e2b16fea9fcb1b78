#pragma once

#include <cstddef>

#include "navcrafter/image.hpp"

namespace navcrafter {

/// Fit of scale / d_m + bias to 1 / d_v, both in inverse-depth space.
struct CalibrationParams {
  double scale = 1.0;
  double bias = 0.0;
  double residual = 0.0;  // RMS of the inverse-depth residual over used pixels
  std::size_t pixels_used = 0;
};

/// Least-squares scale/bias over pixels that are masked in and valid in both
/// maps, via the 2x2 normal equations. Sums use Neumaier compensation in
/// row-major order so results are reproducible.
CalibrationParams calibrate(const DepthMap& d_m, const DepthMap& d_v, const Mask& mask);

/// Per valid pixel 1 / (scale / d_m + bias); pixels whose calibrated inverse
/// depth is not positive become invalid.
DepthMap apply_calibration(const DepthMap& d_m, const CalibrationParams& params);

}  // namespace navcrafter
