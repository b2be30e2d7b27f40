#include "lf/metrics/metrics.hpp"

#include <algorithm>
#include <map>
#include <string>

#include "lf/core/errors.hpp"

namespace lf::metrics {

double auc(std::span<const Impression> set) {
  std::vector<std::pair<double, int>> scored;
  scored.reserve(set.size());
  double positives = 0.0, negatives = 0.0;
  for (const auto& imp : set) {
    if (imp.label != 0 && imp.label != 1) throw LabelError("auc: label " + std::to_string(imp.label) + " is not binary");
    scored.emplace_back(imp.score, imp.label);
    (imp.label ? positives : negatives) += 1.0;
  }
  if (positives == 0.0 || negatives == 0.0) throw MetricError("auc: undefined without both classes");
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  // Walk tie groups in ascending score order; every positive beats the
  // negatives already passed and splits ties with the ones in its group.
  double wins = 0.0, negatives_below = 0.0;
  for (std::size_t i = 0; i < scored.size();) {
    std::size_t j = i;
    double pos = 0.0, neg = 0.0;
    while (j < scored.size() && scored[j].first == scored[i].first) {
      (scored[j].second ? pos : neg) += 1.0;
      ++j;
    }
    wins += pos * negatives_below + 0.5 * pos * neg;
    negatives_below += neg;
    i = j;
  }
  return wins / (positives * negatives);
}

namespace {

GroupedAuc grouped(std::span<const Impression> set, bool weighted) {
  std::map<std::int64_t, std::vector<Impression>> by_user;
  for (const auto& imp : set) {
    if (!(imp.weight > 0.0)) throw MetricError("gauc: exposure weights must be positive");
    by_user[imp.user_id].push_back(imp);
  }
  GroupedAuc out;
  double num = 0.0, den = 0.0;
  for (const auto& [user, imps] : by_user) {
    const bool has_pos = std::any_of(imps.begin(), imps.end(), [](const auto& i) { return i.label == 1; });
    const bool has_neg = std::any_of(imps.begin(), imps.end(), [](const auto& i) { return i.label == 0; });
    if (!has_pos || !has_neg) {
      ++out.excluded_users;
      continue;
    }
    double w = 1.0;
    if (weighted) {
      w = 0.0;
      for (const auto& i : imps) w += i.weight;
    }
    num += w * auc(imps);
    den += w;
    ++out.eligible_users;
  }
  if (out.eligible_users == 0) throw MetricError("no user has both a positive and a negative impression");
  out.value = num / den;
  return out;
}

}  // namespace

GroupedAuc uauc(std::span<const Impression> set) { return grouped(set, false); }

GroupedAuc gauc(std::span<const Impression> set) { return grouped(set, true); }

double mse(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) {
    throw DimensionError("mse: " + std::to_string(pred.size()) + " predictions vs " + std::to_string(truth.size()) +
                         " targets");
  }
  if (pred.empty()) throw DimensionError("mse: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  return sum / static_cast<double>(pred.size());
}

}  // namespace lf::metrics
