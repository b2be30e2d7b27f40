#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lf/core/param_store.hpp"
#include "lf/core/tape.hpp"
#include "lf/ranker/foresight.hpp"
#include "lf/ranker/sample.hpp"

namespace lf::ranker {

enum class Variant { Base, Stat, Prod, Both };
inline constexpr Variant kAllVariants[] = {Variant::Base, Variant::Stat, Variant::Prod, Variant::Both};

std::string_view variant_name(Variant v);  // base, +stat, +prod, +both
Variant parse_variant(std::string_view name);  // also accepts stat, prod, both
constexpr bool uses_stat(Variant v) { return v == Variant::Stat || v == Variant::Both; }
constexpr bool uses_prod(Variant v) { return v == Variant::Prod || v == Variant::Both; }

struct RankConfig {
  std::size_t embed = 16;
  std::size_t hidden = 64;
  std::size_t category_width = 32;  // width of the learned finest-category table
  std::size_t epochs = 4;
  std::size_t batch = 128;
  double lr = 2e-3;
  double weight_decay = 1.0;  // decoupled, see core::AdamConfig
  std::uint64_t seed = 1;
};
void to_json(nlohmann::json& j, const RankConfig& c);
void from_json(const nlohmann::json& j, RankConfig& c);

// Widths of the foresight parts a model consumes.
struct ForesightLayout {
  std::size_t stat_forecast = 0;
  std::size_t stat_encoding = 0;
  std::size_t categories = 0;     // |C3|; zero when the product part is absent
  std::size_t prod_encoding = 0;

  friend bool operator==(const ForesightLayout&, const ForesightLayout&) = default;
};
ForesightLayout layout_of(const ForesightVector& v, Variant variant);

// Per-column standardisation of a real-valued foresight block, fitted on
// training data. With `unit_block` every column is further divided by
// sqrt(width), so a wide encoding block carries the variance of one column.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const std::vector<std::vector<double>>& rows, std::size_t width, bool unit_block = false);
  void apply(std::span<const double> in, std::span<double> out) const;
};

// Field embeddings, optional foresight inputs and a two-layer ReLU trunk with
// one logit per task. Foresight model parameters never live here; the
// finest-category table that turns a predicted distribution into a vector does.
class RankerModel {
 public:
  RankerModel(RankConfig config, std::vector<std::string> tasks, std::array<std::size_t, kFieldCount> vocab,
              Variant variant, ForesightLayout layout);

  const RankConfig& config() const noexcept { return config_; }
  Variant variant() const noexcept { return variant_; }
  const ForesightLayout& layout() const noexcept { return layout_; }
  const std::vector<std::string>& tasks() const noexcept { return tasks_; }
  const core::ParamStore& params() const noexcept { return params_; }
  core::ParamStore& mutable_params() noexcept { return params_; }

  std::size_t base_width() const noexcept { return kFieldCount * config_.embed; }
  std::size_t input_width() const noexcept;

  // Fits the foresight standardisers on these training vectors.
  void fit_inputs(std::span<const ForesightVector* const> train);

  // Batch of assembled inputs, one row per sample. Standardisation is applied
  // to the real-valued foresight columns.
  core::Var assemble(core::Tape& tape, const core::ParamStore& params, std::span<const RankSample* const> samples,
                     std::span<const ForesightVector* const> foresight) const;
  core::Var logits(core::Tape& tape, const core::ParamStore& params, core::Var input) const;

 private:
  RankConfig config_;
  std::vector<std::string> tasks_;
  std::array<std::size_t, kFieldCount> vocab_;
  Variant variant_;
  ForesightLayout layout_;
  core::ParamStore params_;
  Standardizer stat_forecast_norm_, stat_encoding_norm_, prod_encoding_norm_;
};

// One assembled input row for a sample.
core::Tensor assemble_input(const RankerModel& model, const RankSample& sample, const ForesightVector& foresight);
// Per-task probabilities for each input row; DimensionError on width mismatch.
core::Tensor rank_forward(const core::Tensor& input, const core::ParamStore& params);
// Summed over tasks, averaged over rows; probabilities clamped to [1e-7, 1 - 1e-7].
double rank_loss(const core::Tensor& predictions, const std::vector<std::vector<int>>& labels);

struct TaskMetrics {
  std::string task;
  double auc = 0.0;
  double uauc = 0.0;
  double gauc = 0.0;
};

struct RankResult {
  RankerModel model;
  std::vector<double> epoch_loss;
  std::vector<TaskMetrics> metrics;  // on the evaluation indices
};

// Foresight comes from `cache` (may be null for the base variant).
RankResult train_ranker(const RankDataset& dataset, std::span<const std::size_t> train,
                        std::span<const std::size_t> eval, const ForesightCache* cache, Variant variant,
                        const RankConfig& config);

// Builds the cache from the foresight models first; they must be frozen.
RankResult train_ranker(const RankDataset& dataset, std::span<const std::size_t> train,
                        std::span<const std::size_t> eval, std::span<const RoomHistory> rooms,
                        const statfore::StatisticModel* stat, const prodfore::ProductModel* prod, Variant variant,
                        const RankConfig& config);

std::vector<TaskMetrics> evaluate_ranker(const RankerModel& model, const RankDataset& dataset,
                                         std::span<const std::size_t> eval, const ForesightCache* cache);

}  // namespace lf::ranker
