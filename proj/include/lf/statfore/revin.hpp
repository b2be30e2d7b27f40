#pragma once

#include <vector>

#include "lf/core/tensor.hpp"

namespace lf::statfore {

inline constexpr double kScaleFloor = 1e-6;

// Per-channel statistics of one context window.
struct RevinState {
  std::vector<double> mean;
  std::vector<double> scale;  // population std, floored at kScaleFloor
};

struct Normalized {
  core::Tensor values;
  RevinState state;
};

// Standardises each row of an N x W window by its own mean and population
// standard deviation. Throws WindowError when W < 2.
Normalized revin_normalize(const core::Tensor& window, double floor = kScaleFloor);

// Inverse map: values * scale + mean, row by row.
core::Tensor revin_denormalize(const core::Tensor& normalized, const RevinState& state);

}  // namespace lf::statfore
