#include "lf/core/optim.hpp"

#include <cmath>

#include "lf/core/errors.hpp"

namespace lf::core {

void adam_step(ParamStore& store, const AdamConfig& cfg) {
  for (const auto& [name, p] : store.entries()) {
    if (p.grad.empty()) throw StateError("adam_step: missing gradient for parameter '" + name + "'");
  }
  const std::uint64_t step = store.step() + 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  const double shrink = 1.0 - cfg.lr * cfg.weight_decay;
  for (auto& [name, p] : store.entries()) {
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      p.value[i] *= shrink;
      const double g = p.grad[i];
      double& m = p.first_moment[i];
      double& v = p.second_moment[i];
      m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
      v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
      p.value[i] -= cfg.lr * (m / bc1) / (std::sqrt(v / bc2) + cfg.eps);
    }
  }
  store.set_step(step);
}

}  // namespace lf::core
