#include "lf/ranker/sample.hpp"

#include "lf/core/errors.hpp"

namespace lf::ranker {

std::size_t RankDataset::task_index(const std::string& task) const {
  for (std::size_t i = 0; i < tasks.size(); ++i)
    if (tasks[i] == task) return i;
  throw ConfigError("dataset has no task '" + task + "'");
}

void RankDataset::validate() const {
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto& r = samples[s];
    if (r.labels.size() != tasks.size()) {
      throw DimensionError("sample " + std::to_string(s) + " has " + std::to_string(r.labels.size()) +
                           " labels for " + std::to_string(tasks.size()) + " tasks");
    }
    for (int y : r.labels)
      if (y != 0 && y != 1) throw LabelError("sample " + std::to_string(s) + " has non-binary label " + std::to_string(y));
    const auto f = r.fields();
    for (std::size_t i = 0; i < kFieldCount; ++i) {
      if (f[i] >= vocab[i]) {
        throw IndexError("sample " + std::to_string(s) + ": " + kFieldNames[i] + " " + std::to_string(f[i]) +
                         " outside vocabulary of " + std::to_string(vocab[i]));
      }
    }
    if (!(r.exposure_weight > 0.0)) throw DatasetError("sample " + std::to_string(s) + " has non-positive weight");
  }
}

}  // namespace lf::ranker
