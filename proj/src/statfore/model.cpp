#include "lf/statfore/model.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "lf/core/checkpoint.hpp"
#include "lf/core/errors.hpp"
#include "lf/core/nn.hpp"
#include "lf/core/ops.hpp"
#include "lf/core/optim.hpp"

namespace lf::statfore {

void to_json(nlohmann::json& j, const StatConfig& c) {
  j = {{"context", c.context}, {"horizon", c.horizon}, {"width", c.width},   {"blocks", c.blocks},
       {"heads", c.heads},     {"ffn_hidden", c.ffn_hidden}, {"epochs", c.epochs}, {"batch", c.batch},
       {"lr", c.lr},           {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, StatConfig& c) {
  StatConfig d;
  c.context = j.value("context", d.context);
  c.horizon = j.value("horizon", d.horizon);
  c.width = j.value("width", d.width);
  c.blocks = j.value("blocks", d.blocks);
  c.heads = j.value("heads", d.heads);
  c.ffn_hidden = j.value("ffn_hidden", d.ffn_hidden);
  c.epochs = j.value("epochs", d.epochs);
  c.batch = j.value("batch", d.batch);
  c.lr = j.value("lr", d.lr);
  c.seed = j.value("seed", d.seed);
}

namespace {

core::BlockConfig block_config(const StatConfig& c) {
  return {c.width, c.heads, c.ffn_hidden, /*causal=*/false};
}

void validate(const StatConfig& c, std::size_t channels) {
  if (channels == 0) throw ConfigError("statistic model needs at least one channel");
  if (c.context < 2) throw ConfigError("statistic model context must be at least 2");
  if (c.horizon == 0) throw ConfigError("statistic model horizon must be positive");
  if (c.heads == 0 || c.width % c.heads != 0) {
    throw ConfigError("statistic model width " + std::to_string(c.width) + " is not divisible by " +
                      std::to_string(c.heads) + " heads");
  }
  if (c.batch == 0) throw ConfigError("statistic model batch must be positive");
}

}  // namespace

StatisticModel::StatisticModel(StatConfig config, std::size_t channels) : config_(config), channels_(channels) {
  validate(config_, channels_);
  core::Rng rng(config_.seed);
  core::add_dense(params_, "stat.embed", config_.context, config_.width, rng);
  for (std::size_t b = 0; b < config_.blocks; ++b)
    core::add_transformer_block(params_, "stat.block" + std::to_string(b), block_config(config_), rng);
  core::add_layer_norm(params_, "stat.norm", config_.width);
  core::add_dense(params_, "stat.head", config_.width, config_.horizon, rng);
}

StatisticModel::StatisticModel(StatConfig config, std::size_t channels, core::ParamStore params)
    : config_(config), channels_(channels), params_(std::move(params)) {
  validate(config_, channels_);
  StatisticModel fresh(config_, channels_);
  for (const auto& [name, p] : fresh.params()) {
    if (!params_.contains(name) || params_.value(name).shape() != p.value.shape()) {
      throw ConfigError("statistic checkpoint does not match config at '" + name + "'");
    }
  }
}

core::ParamStore& StatisticModel::mutable_params() {
  if (frozen_) throw ContractError("statistic model is frozen");
  return params_;
}

StatisticModel::Graph StatisticModel::forward(core::Tape& tape, const core::ParamStore& params,
                                              const core::Tensor& normalized, std::size_t groups) const {
  if (normalized.cols() != config_.context) {
    throw ConfigError("statistic model expects a context of " + std::to_string(config_.context) + " buckets, got " +
                      std::to_string(normalized.cols()));
  }
  if (normalized.rows() != groups * channels_) {
    throw DimensionError("statistic model expects " + std::to_string(groups * channels_) + " channel rows, got " +
                         std::to_string(normalized.rows()));
  }
  core::Var x = core::dense(tape, params, "stat.embed", tape.constant(normalized));
  for (std::size_t b = 0; b < config_.blocks; ++b)
    x = core::transformer_block(tape, params, "stat.block" + std::to_string(b), x, channels_, block_config(config_));
  core::Var enc = core::layer_norm(tape, params, "stat.norm", x);
  return {core::dense(tape, params, "stat.head", enc), enc};
}

void StatisticModel::save(const std::filesystem::path& path) const {
  nlohmann::json manifest;
  manifest["kind"] = "statistic";
  manifest["config"] = config_;
  manifest["channels"] = channels_;
  core::save_checkpoint(params_, path, manifest);
}

StatisticModel StatisticModel::load(const std::filesystem::path& path) {
  auto ck = core::load_checkpoint(path);
  if (ck.manifest.value("kind", "") != "statistic") throw ParseError(path.string() + " is not a statistic checkpoint");
  return StatisticModel(ck.manifest.at("config").get<StatConfig>(), ck.manifest.at("channels").get<std::size_t>(),
                        std::move(ck.store));
}

StatOutputs statistic_forward(const core::Tensor& normalized, const StatisticModel& model) {
  core::Tape tape;
  auto g = model.forward(tape, model.params(), normalized, 1);
  return {g.prediction.value(), g.encoding.value()};
}

StatForecast forecast_statistic(const core::Tensor& window, const StatisticModel& model, std::size_t horizon) {
  const auto& cfg = model.config();
  if (horizon == 0 || horizon > cfg.horizon) {
    throw ConfigError("forecast horizon " + std::to_string(horizon) + " exceeds trained head width " +
                      std::to_string(cfg.horizon));
  }
  if (window.cols() != cfg.context) {
    throw ConfigError("forecast window has " + std::to_string(window.cols()) + " buckets, model context is " +
                      std::to_string(cfg.context));
  }
  auto norm = revin_normalize(window);
  auto out = statistic_forward(norm.values, model);
  const std::size_t n = window.rows();
  core::Tensor head({n, horizon});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < horizon; ++t) head.at(i, t) = out.prediction.at(i, t);
  return {revin_denormalize(head, norm.state), std::move(out.encoding), horizon};
}

std::vector<StatForecast> forecast_statistic_batch(std::span<const core::Tensor> windows, const StatisticModel& model,
                                                   std::size_t horizon) {
  const auto& cfg = model.config();
  if (horizon == 0 || horizon > cfg.horizon) {
    throw ConfigError("forecast horizon " + std::to_string(horizon) + " exceeds trained head width " +
                      std::to_string(cfg.horizon));
  }
  constexpr std::size_t kChunk = 64;
  const std::size_t n = model.channels(), w = cfg.context;
  std::vector<StatForecast> out;
  out.reserve(windows.size());
  for (std::size_t begin = 0; begin < windows.size(); begin += kChunk) {
    const std::size_t g = std::min(kChunk, windows.size() - begin);
    core::Tensor input({g * n, w});
    std::vector<RevinState> states;
    for (std::size_t k = 0; k < g; ++k) {
      const auto& win = windows[begin + k];
      if (win.cols() != w || win.rows() != n) {
        throw ConfigError("forecast window has shape " + core::shape_string(win.shape()) + ", model expects " +
                          std::to_string(n) + "x" + std::to_string(w));
      }
      auto norm = revin_normalize(win);
      std::copy_n(norm.values.data(), n * w, input.data() + k * n * w);
      states.push_back(std::move(norm.state));
    }
    core::Tape tape;
    const auto graph = model.forward(tape, model.params(), input, g);
    const auto& pred = graph.prediction.value();
    const auto& enc = graph.encoding.value();
    const std::size_t d = enc.cols();
    for (std::size_t k = 0; k < g; ++k) {
      core::Tensor head({n, horizon});
      core::Tensor e({n, d});
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t t = 0; t < horizon; ++t) head.at(i, t) = pred.at(k * n + i, t);
        for (std::size_t j = 0; j < d; ++j) e.at(i, j) = enc.at(k * n + i, j);
      }
      out.push_back({revin_denormalize(head, states[k]), std::move(e), horizon});
    }
  }
  return out;
}

StatForecast forecast_statistic(const StatPanel& panel, const StatisticModel& model, std::size_t horizon) {
  const std::size_t w = model.config().context;
  if (panel.length() < w) {
    throw WindowError("panel has " + std::to_string(panel.length()) + " buckets, forecasting needs " +
                      std::to_string(w));
  }
  return forecast_statistic(panel.window(panel.length() - w, w), model, horizon);
}

StatTrainReport train_statistic(StatisticModel& model, std::span<const StatPanel> panels) {
  const auto cfg = model.config();
  core::ParamStore& params = model.mutable_params();
  const std::size_t w = cfg.context, h = cfg.horizon, n = model.channels();

  struct Example {
    core::Tensor normalized;
    RevinState state;
    core::Tensor target;  // N x h raw counts
  };
  std::vector<Example> examples;
  StatTrainReport report;
  for (const auto& panel : panels) {
    if (panel.length() < w + h) {
      ++report.skipped;
      continue;
    }
    if (panel.channel_count() != n) {
      throw DimensionError("panel has " + std::to_string(panel.channel_count()) + " channels, model expects " +
                           std::to_string(n));
    }
    const std::size_t start = panel.length() - w - h;
    auto norm = revin_normalize(panel.window(start, w));
    examples.push_back({std::move(norm.values), std::move(norm.state), panel.window(start + w, h)});
  }
  report.used = examples.size();
  if (examples.empty()) throw DatasetError("train_statistic: every panel is shorter than context + horizon");

  std::mt19937_64 rng(cfg.seed ^ 0x5157a7ULL);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  const core::AdamConfig adam{cfg.lr};

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch) {
      const std::size_t g = std::min(cfg.batch, order.size() - b);
      core::Tensor input({g * n, w});
      core::Tensor target({g * n, h});
      std::vector<double> scale(g * n), shift(g * n);
      for (std::size_t k = 0; k < g; ++k) {
        const auto& ex = examples[order[b + k]];
        std::copy_n(ex.normalized.data(), n * w, input.data() + k * n * w);
        std::copy_n(ex.target.data(), n * h, target.data() + k * n * h);
        std::copy_n(ex.state.scale.data(), n, scale.data() + k * n);
        std::copy_n(ex.state.mean.data(), n, shift.data() + k * n);
      }
      core::Tape tape;
      auto graph = model.forward(tape, params, input, g);
      auto loss = core::mse_loss(core::rows_affine(graph.prediction, scale, shift), target);
      tape.backward(loss);
      params.zero_grad();
      tape.accumulate_into(params);
      core::adam_step(params, adam);
      loss_sum += loss.value()[0] * static_cast<double>(g);
    }
    report.epoch_loss.push_back(loss_sum / static_cast<double>(order.size()));
  }
  return report;
}

core::Tensor baseline_forecast(const core::Tensor& window, BaselineMethod method, std::size_t horizon) {
  if (window.empty()) throw WindowError("baseline forecast: empty window");
  if (horizon == 0) throw ConfigError("baseline forecast: horizon must be positive");
  const std::size_t n = window.rows(), w = window.cols();
  core::Tensor out({n, horizon});
  for (std::size_t i = 0; i < n; ++i) {
    double v = window.at(i, w - 1);
    if (method == BaselineMethod::MeanValue) {
      v = 0.0;
      for (std::size_t t = 0; t < w; ++t) v += window.at(i, t);
      v /= static_cast<double>(w);
    }
    for (std::size_t t = 0; t < horizon; ++t) out.at(i, t) = v;
  }
  return out;
}

std::vector<double> build_stat_foresight(const StatForecast& forecast) {
  std::vector<double> out(forecast.predicted.values().begin(), forecast.predicted.values().end());
  out.insert(out.end(), forecast.encoding.values().begin(), forecast.encoding.values().end());
  return out;
}

}  // namespace lf::statfore
