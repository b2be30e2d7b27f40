#include "lf/statfore/revin.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lf/core/errors.hpp"

namespace lf::statfore {

Normalized revin_normalize(const core::Tensor& window, double floor) {
  const std::size_t n = window.rows(), w = window.cols();
  if (w < 2) throw WindowError("revin: window of " + std::to_string(w) + " steps, need at least 2");
  Normalized out{core::Tensor(window.shape()), {std::vector<double>(n), std::vector<double>(n)}};
  for (std::size_t i = 0; i < n; ++i) {
    const double* x = window.data() + i * w;
    double mean = 0.0;
    for (std::size_t t = 0; t < w; ++t) mean += x[t];
    mean /= static_cast<double>(w);
    double var = 0.0;
    for (std::size_t t = 0; t < w; ++t) var += (x[t] - mean) * (x[t] - mean);
    const double scale = std::max(std::sqrt(var / static_cast<double>(w)), floor);
    out.state.mean[i] = mean;
    out.state.scale[i] = scale;
    for (std::size_t t = 0; t < w; ++t) out.values[i * w + t] = (x[t] - mean) / scale;
  }
  return out;
}

core::Tensor revin_denormalize(const core::Tensor& normalized, const RevinState& state) {
  const std::size_t n = normalized.rows(), h = normalized.cols();
  if (state.mean.size() != n || state.scale.size() != n) {
    throw DimensionError("revin: state has " + std::to_string(state.mean.size()) + " channels, input has " +
                         std::to_string(n));
  }
  core::Tensor out(normalized.shape());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < h; ++t) out[i * h + t] = normalized[i * h + t] * state.scale[i] + state.mean[i];
  return out;
}

}  // namespace lf::statfore
