#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "lf/core/param_store.hpp"
#include "lf/core/tape.hpp"
#include "lf/prodfore/hierarchy.hpp"

namespace lf::prodfore {

struct ProdConfig {
  std::size_t width = 32;  // D
  std::size_t blocks = 2;
  std::size_t heads = 4;
  std::size_t ffn_hidden = 64;
  std::size_t max_context = 64;
  std::size_t encoding_positions = 8;  // K_enc, positions exported to the ranker
  std::size_t epochs = 10;
  std::size_t batch = 8;  // sequences per optimizer step
  double lr = 1e-3;
  std::uint64_t seed = 1;
};
void to_json(nlohmann::json& j, const ProdConfig& c);
void from_json(const nlohmann::json& j, ProdConfig& c);

// Causal transformer over sold-product events. Each event is the
// concatenation of its product and three category embeddings, projected
// to D and given a learned position embedding; the head scores the next
// event's finest category.
class ProductModel {
 public:
  ProductModel(ProdConfig config, CategoryHierarchy hierarchy);
  ProductModel(ProdConfig config, CategoryHierarchy hierarchy, core::ParamStore params);

  const ProdConfig& config() const noexcept { return config_; }
  const CategoryHierarchy& hierarchy() const noexcept { return hierarchy_; }
  const core::ParamStore& params() const noexcept { return params_; }
  core::ParamStore& mutable_params();

  void freeze() noexcept { frozen_ = true; }
  bool frozen() const noexcept { return frozen_; }

  // L x 4D concatenated embedding rows.
  core::Var embed(core::Tape& tape, const core::ParamStore& params, std::span<const ProductEvent> events) const;

  struct Graph {
    core::Var logits;    // L x |C3|, row t scores the event after position t
    core::Var encoding;  // L x D
  };
  // Events beyond max_context are dropped from the front.
  Graph forward(core::Tape& tape, const core::ParamStore& params, std::span<const ProductEvent> events) const;

  void save(const std::filesystem::path& path) const;
  static ProductModel load(const std::filesystem::path& path);

 private:
  ProdConfig config_;
  CategoryHierarchy hierarchy_;
  core::ParamStore params_;
  bool frozen_ = false;
};

core::Tensor embed_sequence(std::span<const ProductEvent> events, const ProductModel& model);

struct ProdOutputs {
  core::Tensor logits;    // |C3|, from the last position
  core::Tensor encoding;  // L x D
};
ProdOutputs product_forward(std::span<const ProductEvent> events, const ProductModel& model);

struct ProdForecast {
  core::Tensor distribution;  // |C3| probabilities
  core::Tensor encoding;      // L x D
  std::size_t top1 = 0;
};
ProdForecast forecast_product(std::span<const ProductEvent> events, const ProductModel& model);

// forecast_product(events.first(n)) for n = 1..L, sharing one causal pass
// while L fits max_context. Each encoding keeps at most `encoding_rows`
// trailing rows.
std::vector<ProdForecast> forecast_prefixes(std::span<const ProductEvent> events, const ProductModel& model,
                                            std::size_t encoding_rows);

struct ProdTrainReport {
  std::vector<double> epoch_loss;
  std::size_t used = 0;
  std::size_t skipped = 0;  // sequences shorter than 2
};

// Teacher-forced next-category training: every prefix predicts the finest
// category of the event that follows it.
ProdTrainReport train_product(ProductModel& model, std::span<const ProductSequence> sequences);

enum class CategoryBaseline { MostFrequent, Latest };
std::size_t baseline_category(std::span<const ProductEvent> events, CategoryBaseline method);

double hitrate(std::span<const std::size_t> predictions, std::span<const std::size_t> truths);

// stop(dist) . table (D values) followed by the flattened encodings of the
// last min(L, K_enc) positions.
std::vector<double> build_prod_foresight(const ProdForecast& forecast, const core::Tensor& category_table,
                                         std::size_t encoding_positions);

}  // namespace lf::prodfore
