#include "lf/core/tape.hpp"

#include "lf/core/errors.hpp"

namespace lf::core {

const Tensor& Var::value() const { return tape->value(id); }

Var Tape::constant(Tensor value) { return record(std::move(value), false, nullptr); }

Var Tape::variable(Tensor value) { return record(std::move(value), true, nullptr); }

Var Tape::param(const ParamStore& store, std::string_view name) {
  Var v = record(store.value(name), true, nullptr);
  nodes_[v.id].param = std::string(name);
  return v;
}

Var Tape::record(Tensor value, bool requires_grad, Backward backward) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  if (requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Tensor& Tape::grad_ref(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw StateError("loss belongs to a different tape");
  if (nodes_[loss.id].value.size() != 1) {
    throw DimensionError("backward needs a scalar loss, got " + shape_string(nodes_[loss.id].value.shape()));
  }
  if (!nodes_[loss.id].requires_grad) return;
  grad_ref(loss.id)[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty() || !n.backward) continue;
    n.backward(*this, i);
  }
}

void Tape::accumulate_into(ParamStore& store) const {
  for (const auto& n : nodes_) {
    if (n.param.empty()) continue;
    if (n.grad.empty()) {
      store.accumulate_grad(n.param, Tensor(n.value.shape()));
    } else {
      store.accumulate_grad(n.param, n.grad);
    }
  }
}

}  // namespace lf::core
