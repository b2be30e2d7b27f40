#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <string>
#include <string_view>

#include "lf/core/param_store.hpp"
#include "lf/core/tensor.hpp"

namespace lf::core {

class Tape;

// Handle to a value recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

// Reverse-mode recorder for the handful of layers the models use. A tape is
// built per forward pass, run backward once, then discarded.
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t out)>;

  Var constant(Tensor value);
  Var variable(Tensor value);
  // Leaf bound to a named parameter; its gradient is returned by accumulate_into().
  Var param(const ParamStore& store, std::string_view name);

  Var record(Tensor value, bool requires_grad, Backward backward);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  // Gradient buffer of a node, zero-initialised on first access.
  Tensor& grad_ref(std::size_t id);
  const Tensor& grad(Var v) const { return nodes_[v.id].grad; }

  void backward(Var loss);
  void accumulate_into(ParamStore& store) const;

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Backward backward;
    std::string param;
    bool requires_grad = false;
  };
  std::deque<Node> nodes_;
};

}  // namespace lf::core
