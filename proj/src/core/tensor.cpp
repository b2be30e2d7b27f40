#include "lf/core/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "lf/core/errors.hpp"

namespace lf::core {

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

namespace {
void validate_shape(const Shape& shape) {
  if (shape.empty()) throw DimensionError("tensor shape must have at least one dimension");
  for (auto d : shape) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_string(shape));
  }
}
}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  validate_shape(shape_);
  data_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), data_(std::move(values)) {
  validate_shape(shape_);
  if (data_.size() != shape_size(shape_)) {
    throw DimensionError("tensor of shape " + shape_string(shape_) + " needs " +
                         std::to_string(shape_size(shape_)) + " values, got " + std::to_string(data_.size()));
  }
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

std::size_t Tensor::rows() const noexcept {
  if (shape_.empty()) return 0;
  return data_.size() / shape_.back();
}

std::size_t Tensor::cols() const noexcept { return shape_.empty() ? 0 : shape_.back(); }

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    throw DimensionError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

}  // namespace lf::core
