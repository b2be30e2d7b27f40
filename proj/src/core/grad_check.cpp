#include "lf/core/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "lf/core/errors.hpp"

namespace lf::core {

namespace {

double evaluate(const LossClosure& loss, const ParamStore& params) {
  Tape tape;
  Var out = loss(tape, params);
  if (out.value().size() != 1) throw OracleError("grad_check: closure must return a scalar loss");
  return out.value()[0];
}

}  // namespace

GradCheckResult grad_check(const LossClosure& loss, const ParamStore& params, const GradCheckOptions& options) {
  if (!(options.epsilon >= 1e-6 && options.epsilon <= 1e-4)) {
    throw ConfigError("grad_check: epsilon must lie in [1e-6, 1e-4]");
  }
  const double first = evaluate(loss, params);
  const double second = evaluate(loss, params);
  if (std::memcmp(&first, &second, sizeof first) != 0) {
    throw OracleError("grad_check: closure is not deterministic (" + std::to_string(first) + " vs " +
                      std::to_string(second) + ")");
  }

  ParamStore work = params;
  work.clear_grad();
  {
    Tape tape;
    Var out = loss(tape, work);
    tape.backward(out);
    tape.accumulate_into(work);
  }

  std::vector<std::pair<std::string, std::size_t>> coords;
  const std::size_t total = work.parameter_count();
  if (total <= options.max_coordinates) {
    for (const auto& [name, p] : work)
      for (std::size_t i = 0; i < p.value.size(); ++i) coords.emplace_back(name, i);
  } else {
    std::mt19937_64 rng(options.seed);
    // One coordinate from every parameter, then uniform draws over all of them.
    std::vector<std::pair<std::string, std::size_t>> sizes;
    for (const auto& [name, p] : work) {
      coords.emplace_back(name, std::uniform_int_distribution<std::size_t>(0, p.value.size() - 1)(rng));
      sizes.emplace_back(name, p.value.size());
    }
    const std::size_t target = std::max<std::size_t>(64, options.max_coordinates);
    std::uniform_int_distribution<std::size_t> pick(0, total - 1);
    while (coords.size() < target) {
      std::size_t flat = pick(rng);
      for (const auto& [name, n] : sizes) {
        if (flat < n) {
          coords.emplace_back(name, flat);
          break;
        }
        flat -= n;
      }
    }
  }

  GradCheckResult result;
  const double eps = options.epsilon;
  for (const auto& [name, i] : coords) {
    Tensor& value = work.mutable_value(name);
    const double saved = value[i];
    value[i] = saved + eps;
    const double up = evaluate(loss, work);
    value[i] = saved - eps;
    const double down = evaluate(loss, work);
    value[i] = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double analytic = work.grad(name)[i];
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    result.max_relative_error = std::max(result.max_relative_error, std::abs(analytic - numeric) / denom);
    ++result.coordinates_checked;
  }
  return result;
}

}  // namespace lf::core
