#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

#include "lf/core/param_store.hpp"
#include "lf/core/tape.hpp"

namespace lf::core {

// Builds a scalar loss on the given tape from the given parameters.
using LossClosure = std::function<Var(Tape&, const ParamStore&)>;

struct GradCheckOptions {
  double epsilon = 1e-5;
  // Every coordinate is checked when the model has at most this many;
  // otherwise a seeded sample of this size is drawn (never below 64).
  std::size_t max_coordinates = 2048;
  std::uint64_t seed = 7;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates_checked = 0;
};

// Central-difference gradient oracle. Relative error per coordinate is
// |a - n| / max(|a|, |n|, 1e-8). Throws OracleError if the closure is not
// deterministic.
GradCheckResult grad_check(const LossClosure& loss, const ParamStore& params,
                           const GradCheckOptions& options = {});

}  // namespace lf::core
