#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "lf/core/tensor.hpp"

namespace lf::core {

struct Parameter {
  Tensor value;
  Tensor grad;  // empty until populated by zero_grad() or accumulate_grad()
  Tensor first_moment;
  Tensor second_moment;
};

// Named trainable tensors with their gradients and Adam moments. Iteration
// order is lexicographic by name, which keeps every pass over it deterministic.
class ParamStore {
 public:
  using Map = std::map<std::string, Parameter, std::less<>>;

  void add(std::string name, Tensor init);
  bool contains(std::string_view name) const;

  const Tensor& value(std::string_view name) const;
  Tensor& mutable_value(std::string_view name);
  const Tensor& grad(std::string_view name) const;
  bool has_grad(std::string_view name) const;

  void zero_grad();
  void clear_grad();
  void accumulate_grad(std::string_view name, const Tensor& g);
  void scale_grad(double factor);

  std::uint64_t step() const noexcept { return step_; }
  std::size_t size() const noexcept { return params_.size(); }
  std::size_t parameter_count() const;
  std::vector<std::string> names() const;

  Map::const_iterator begin() const { return params_.begin(); }
  Map::const_iterator end() const { return params_.end(); }

  // Only the optimizer and checkpoint loader touch these.
  Map& entries() noexcept { return params_; }
  void set_step(std::uint64_t step) noexcept { step_ = step; }

 private:
  Parameter& entry(std::string_view name);
  const Parameter& entry(std::string_view name) const;

  Map params_;
  std::uint64_t step_ = 0;
};

}  // namespace lf::core
