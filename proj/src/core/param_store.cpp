#include "lf/core/param_store.hpp"

#include "lf/core/errors.hpp"

namespace lf::core {

void ParamStore::add(std::string name, Tensor init) {
  if (params_.count(name)) throw ConfigError("duplicate parameter '" + name + "'");
  Parameter p;
  p.first_moment = Tensor(init.shape());
  p.second_moment = Tensor(init.shape());
  p.value = std::move(init);
  params_.emplace(std::move(name), std::move(p));
}

bool ParamStore::contains(std::string_view name) const { return params_.find(name) != params_.end(); }

Parameter& ParamStore::entry(std::string_view name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw IndexError("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

const Parameter& ParamStore::entry(std::string_view name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw IndexError("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

const Tensor& ParamStore::value(std::string_view name) const { return entry(name).value; }
Tensor& ParamStore::mutable_value(std::string_view name) { return entry(name).value; }

const Tensor& ParamStore::grad(std::string_view name) const {
  const auto& p = entry(name);
  if (p.grad.empty()) throw StateError("parameter '" + std::string(name) + "' has no gradient");
  return p.grad;
}

bool ParamStore::has_grad(std::string_view name) const { return !entry(name).grad.empty(); }

void ParamStore::zero_grad() {
  for (auto& [name, p] : params_) p.grad = Tensor(p.value.shape());
}

void ParamStore::clear_grad() {
  for (auto& [name, p] : params_) p.grad = Tensor();
}

void ParamStore::accumulate_grad(std::string_view name, const Tensor& g) {
  auto& p = entry(name);
  if (g.shape() != p.value.shape()) {
    throw DimensionError("gradient for '" + std::string(name) + "' has shape " + shape_string(g.shape()) +
                         ", parameter is " + shape_string(p.value.shape()));
  }
  if (p.grad.empty()) {
    p.grad = g;
    return;
  }
  for (std::size_t i = 0; i < g.size(); ++i) p.grad[i] += g[i];
}

void ParamStore::scale_grad(double factor) {
  for (auto& [name, p] : params_)
    for (auto& g : p.grad.values()) g *= factor;
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += p.value.size();
  return n;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, p] : params_) out.push_back(name);
  return out;
}

}  // namespace lf::core
