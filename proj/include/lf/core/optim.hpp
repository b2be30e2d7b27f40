#pragma once

#include "lf/core/param_store.hpp"

namespace lf::core {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled: value *= 1 - lr * weight_decay before each update
};

// Bias-corrected Adam over every parameter in the store. Throws StateError
// if any parameter has no populated gradient.
void adam_step(ParamStore& store, const AdamConfig& cfg = {});

}  // namespace lf::core
