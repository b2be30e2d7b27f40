#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "lf/core/param_store.hpp"
#include "lf/core/tape.hpp"
#include "lf/statfore/panel.hpp"
#include "lf/statfore/revin.hpp"

namespace lf::statfore {

struct StatConfig {
  std::size_t context = 32;  // W, buckets of history per forecast
  std::size_t horizon = 5;   // width of the prediction head; training target length
  std::size_t width = 32;    // D
  std::size_t blocks = 2;
  std::size_t heads = 4;
  std::size_t ffn_hidden = 64;
  std::size_t epochs = 3;
  std::size_t batch = 32;
  double lr = 1e-3;
  std::uint64_t seed = 1;
};
void to_json(nlohmann::json& j, const StatConfig& c);
void from_json(const nlohmann::json& j, StatConfig& c);

// Channel-as-token encoder: each channel's normalised history becomes one
// token, tokens attend to each other without a mask, and a linear head maps
// every final token to `horizon` normalised future values.
class StatisticModel {
 public:
  StatisticModel(StatConfig config, std::size_t channels);
  StatisticModel(StatConfig config, std::size_t channels, core::ParamStore params);

  const StatConfig& config() const noexcept { return config_; }
  std::size_t channels() const noexcept { return channels_; }
  const core::ParamStore& params() const noexcept { return params_; }
  core::ParamStore& mutable_params();

  void freeze() noexcept { frozen_ = true; }
  bool frozen() const noexcept { return frozen_; }

  struct Graph {
    core::Var prediction;  // (groups * N) x horizon, normalised scale
    core::Var encoding;    // (groups * N) x D
  };
  // `normalized` stacks `groups` windows of N rows x context columns.
  Graph forward(core::Tape& tape, const core::ParamStore& params, const core::Tensor& normalized,
                std::size_t groups) const;

  void save(const std::filesystem::path& path) const;
  static StatisticModel load(const std::filesystem::path& path);

 private:
  StatConfig config_;
  std::size_t channels_;
  core::ParamStore params_;
  bool frozen_ = false;
};

struct StatOutputs {
  core::Tensor prediction;  // N x horizon, normalised
  core::Tensor encoding;    // N x D
};
StatOutputs statistic_forward(const core::Tensor& normalized, const StatisticModel& model);

struct StatForecast {
  core::Tensor predicted;  // N x h, original count scale
  core::Tensor encoding;   // N x D
  std::size_t horizon = 0;
};

// Forecast from the most recent `context` buckets of a panel.
StatForecast forecast_statistic(const StatPanel& panel, const StatisticModel& model, std::size_t horizon);
// Same, from an N x context raw-count window.
StatForecast forecast_statistic(const core::Tensor& window, const StatisticModel& model, std::size_t horizon);

// forecast_statistic over many N x context windows, run in batches.
std::vector<StatForecast> forecast_statistic_batch(std::span<const core::Tensor> windows, const StatisticModel& model,
                                                   std::size_t horizon);

struct StatTrainReport {
  std::vector<double> epoch_loss;  // mean original-scale MSE per epoch
  std::size_t used = 0;
  std::size_t skipped = 0;  // panels shorter than context + horizon
};

// Trains on the last context + horizon buckets of every panel: the first
// `context` are the input, the remaining `horizon` the target. Loss is MSE in
// count scale after restoring the ReVIN statistics.
StatTrainReport train_statistic(StatisticModel& model, std::span<const StatPanel> panels);

enum class BaselineMethod { MeanValue, LatestValue };
core::Tensor baseline_forecast(const core::Tensor& window, BaselineMethod method, std::size_t horizon);

// Row-major predictions followed by row-major encodings: N*h + N*D values.
std::vector<double> build_stat_foresight(const StatForecast& forecast);

}  // namespace lf::statfore
