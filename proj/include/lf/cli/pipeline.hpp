#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lf/prodfore/model.hpp"
#include "lf/ranker/model.hpp"
#include "lf/simgen/world.hpp"
#include "lf/statfore/model.hpp"

namespace lf::cli {

struct ExperimentConfig {
  std::uint64_t seed = 1;
  simgen::SimConfig sim;
  statfore::StatConfig stat;
  prodfore::ProdConfig prod;
  ranker::RankConfig rank;
  std::vector<std::string> variants = {"base", "+stat", "+prod", "+both"};
  std::string ablation;  // empty, or one of kAblations
  std::size_t ablation_restarts = 3;  // ablation AUCs average this many ranker seeds
  double train_fraction = 0.7;  // leading share of buckets used for training
  std::size_t window_stride = 8;  // buckets between consecutive training panels
  std::size_t eval_stride = 1;  // buckets between consecutive evaluation windows
  std::size_t forecast_horizon = 3;  // statistic steps used at inference; at most stat.horizon
  std::filesystem::path out = "out";

  // Copies `seed` into every stage config.
  void apply_seed();
};
nlohmann::json to_json(const ExperimentConfig& c);
// Missing keys keep their defaults; ConfigError on malformed values.
ExperimentConfig config_from_json(const nlohmann::json& j);
// Covers everything but the output directory.
std::string config_hash(const ExperimentConfig& c);

inline const std::vector<std::string> kAblations = {"accuracy-stat", "accuracy-prod", "channels", "steps"};

struct ForecastMetrics {
  double mse_mean = 0.0, mse_latest = 0.0, mse_model = 0.0;
  std::vector<double> mse_by_step;  // model, lead 1..stat.horizon
  double hit_most = 0.0, hit_latest = 0.0, hit_model = 0.0;
  std::size_t stat_windows = 0, prod_targets = 0;
};

struct RankRow {
  std::string variant;
  ranker::TaskMetrics metrics;
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::string to_csv(const std::string& comment) const;
  // Cell by row label (first column) and column name.
  const std::string& cell(const std::string& row, const std::string& column) const;
  double number(const std::string& row, const std::string& column) const;
};

// One experiment. Every stage runs lazily and at most once.
class Experiment {
 public:
  explicit Experiment(ExperimentConfig config);

  const ExperimentConfig& config() const noexcept { return config_; }
  std::string hash() const { return config_hash(config_); }

  const simgen::World& world();
  void use_world(simgen::World world);
  std::size_t split_bucket() const;
  const std::vector<std::size_t>& train_samples();
  const std::vector<std::size_t>& eval_samples();
  std::span<const ranker::RoomHistory> rooms();

  // Trained and frozen. With a model cache directory set, checkpoints keyed
  // by stat_key()/prod_key() are reused when present and written otherwise.
  const statfore::StatisticModel& stat_model();
  const prodfore::ProductModel& prod_model();
  void set_model_cache(std::filesystem::path dir) { cache_dir_ = std::move(dir); }
  std::string stat_key() const;
  std::string prod_key() const;
  // Training curves; empty when the model came from the cache.
  const std::vector<double>& stat_losses() const noexcept { return stat_losses_; }
  const std::vector<double>& prod_losses() const noexcept { return prod_losses_; }

  const ForecastMetrics& forecasts();
  // Ranker trained for `variant` on model foresight, evaluated on the eval split.
  ranker::RankResult train_rank(ranker::Variant variant);
  const std::vector<RankRow>& rank(ranker::Variant variant);

  Table rank_table();
  Table forecast_table();
  Table ablation(const std::string& which);

 private:
  struct RawForesight {
    core::Tensor stat_pred, stat_enc, stat_mean, stat_latest;
    core::Tensor prod_dist, prod_enc;  // prod_enc keeps the last K_enc rows
    std::size_t prod_most = 0, prod_latest = 0;
  };
  using RawMap = std::map<ranker::ForesightCache::Key, RawForesight>;

  const RawMap& raw_foresight();
  // Features from the raw forecasts. A null options pointer leaves that part out.
  ranker::ForesightCache feature_cache(const ranker::StatFeatureOptions* stat, const ranker::ProdFeatureOptions* prod);
  const ranker::ForesightCache& full_cache();
  ranker::RankResult train_with(const ranker::ForesightCache* cache, ranker::Variant variant, std::uint64_t seed_offset = 0);
  // Per-task AUC averaged over ablation_restarts ranker seeds.
  std::map<std::string, double> mean_auc(const ranker::ForesightCache* cache, ranker::Variant variant);
  std::vector<RankRow> rows_of(const ranker::RankResult& r, ranker::Variant variant) const;

  ExperimentConfig config_;
  std::optional<simgen::World> world_;
  std::vector<ranker::RoomHistory> rooms_;
  std::vector<std::size_t> train_, eval_;
  std::vector<double> stat_losses_, prod_losses_;
  std::optional<statfore::StatisticModel> stat_;
  std::optional<prodfore::ProductModel> prod_;
  std::optional<ForecastMetrics> forecasts_;
  std::optional<RawMap> raw_;
  std::optional<ranker::ForesightCache> full_cache_;
  std::map<ranker::Variant, std::vector<RankRow>> rank_rows_;
  std::optional<std::filesystem::path> cache_dir_;
};

struct PipelineOutputs {
  std::filesystem::path rank_report;
  std::filesystem::path forecast_report;
  std::vector<RankRow> rank;
  ForecastMetrics forecast;
};

// gen -> train-stat -> train-prod -> train-rank -> eval. Writes
// rank_report.csv, forecast_report.csv and manifest.json under config.out;
// a failed stage is recorded in the manifest before the error propagates.
PipelineOutputs run_pipeline(const ExperimentConfig& config);
// Writes ablation_<which>.csv under config.out; ConfigError for unknown names.
Table run_ablation(const ExperimentConfig& config, const std::string& which);

// Writes `table` after a "# config_hash=<hash> seed=<seed>" line.
void write_report(const std::filesystem::path& path, const Table& table, const ExperimentConfig& config);

std::string format_number(double v);

}  // namespace lf::cli
