#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace lf::core {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

// Dense row-major array of doubles. Every tensor is also viewed as a matrix:
// rows() is the product of all leading dimensions, cols() the last one.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t rows() const noexcept;
  std::size_t cols() const noexcept;

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }
  double& at(std::size_t r, std::size_t c) noexcept { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const noexcept { return data_[r * cols() + c]; }

  void fill(double v);
  bool all_finite() const noexcept;
  // Same data, new shape; sizes must agree.
  Tensor reshaped(Shape shape) const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

}  // namespace lf::core
