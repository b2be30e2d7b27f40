#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace lf::metrics {

struct Impression {
  std::int64_t user_id = 0;
  double score = 0.0;
  int label = 0;
  double weight = 1.0;  // exposure weight, used by gauc
};

using ScoredLabelSet = std::vector<Impression>;

// ROC-AUC as the Mann-Whitney statistic, ties worth half. O(n log n).
double auc(std::span<const Impression> set);

struct GroupedAuc {
  double value = 0.0;
  std::size_t eligible_users = 0;
  std::size_t excluded_users = 0;  // users with a single class
};

// Unweighted mean of per-user AUC over users with both classes.
GroupedAuc uauc(std::span<const Impression> set);
// Per-user AUC weighted by each user's summed exposure weight.
GroupedAuc gauc(std::span<const Impression> set);

double mse(std::span<const double> pred, std::span<const double> truth);

}  // namespace lf::metrics
