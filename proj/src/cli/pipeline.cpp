#include "lf/cli/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lf/core/errors.hpp"
#include "lf/core/hash.hpp"
#include "lf/metrics/metrics.hpp"

namespace lf::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using ranker::Variant;

void ExperimentConfig::apply_seed() {
  sim.seed = seed;
  stat.seed = seed;
  prod.seed = seed;
  rank.seed = seed;
}

json to_json(const ExperimentConfig& c) {
  return {{"seed", c.seed},
          {"sim", c.sim},
          {"stat", c.stat},
          {"prod", c.prod},
          {"rank", c.rank},
          {"variants", c.variants},
          {"ablation", c.ablation},
          {"ablation_restarts", c.ablation_restarts},
          {"train_fraction", c.train_fraction},
          {"window_stride", c.window_stride},
          {"eval_stride", c.eval_stride},
          {"forecast_horizon", c.forecast_horizon},
          {"out", c.out.string()}};
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  try {
    if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
    c.seed = j.value("seed", c.seed);
    if (j.contains("sim")) c.sim = j.at("sim").get<simgen::SimConfig>();
    if (j.contains("stat")) c.stat = j.at("stat").get<statfore::StatConfig>();
    if (j.contains("prod")) c.prod = j.at("prod").get<prodfore::ProdConfig>();
    if (j.contains("rank")) c.rank = j.at("rank").get<ranker::RankConfig>();
    if (j.contains("variants")) c.variants = j.at("variants").get<std::vector<std::string>>();
    c.ablation = j.value("ablation", c.ablation);
    c.ablation_restarts = j.value("ablation_restarts", c.ablation_restarts);
    c.train_fraction = j.value("train_fraction", c.train_fraction);
    c.window_stride = j.value("window_stride", c.window_stride);
    c.eval_stride = j.value("eval_stride", c.eval_stride);
    c.forecast_horizon = j.value("forecast_horizon", c.forecast_horizon);
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  for (const auto& v : c.variants) ranker::parse_variant(v);
  if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0)) throw ConfigError("train_fraction must lie in (0, 1)");
  if (c.window_stride == 0 || c.eval_stride == 0) throw ConfigError("window_stride and eval_stride must be positive");
  if (c.ablation_restarts == 0) throw ConfigError("ablation_restarts must be positive");
  if (c.forecast_horizon == 0 || c.forecast_horizon > c.stat.horizon) {
    throw ConfigError("forecast_horizon must lie in [1, stat.horizon]");
  }
  return c;
}

std::string config_hash(const ExperimentConfig& c) {
  json j = to_json(c);
  j.erase("out");
  return core::hash_hex(j.dump());
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string Table::to_csv(const std::string& comment) const {
  std::ostringstream out;
  out << "# " << comment << '\n';
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(columns);
  for (const auto& r : rows) line(r);
  return out.str();
}

const std::string& Table::cell(const std::string& row, const std::string& column) const {
  const auto c = std::find(columns.begin(), columns.end(), column);
  if (c == columns.end()) throw IndexError("table has no column '" + column + "'");
  for (const auto& r : rows)
    if (!r.empty() && r.front() == row) return r.at(static_cast<std::size_t>(c - columns.begin()));
  throw IndexError("table has no row '" + row + "'");
}

double Table::number(const std::string& row, const std::string& column) const {
  return std::stod(cell(row, column));
}

void write_report(const fs::path& path, const Table& table, const ExperimentConfig& config) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << table.to_csv("config_hash=" + config_hash(config) + " seed=" + std::to_string(config.seed));
  if (!out.flush()) throw IoError("write failed: " + path.string());
}

Experiment::Experiment(ExperimentConfig config) : config_(std::move(config)) {
  if (!(config_.train_fraction > 0.0 && config_.train_fraction < 1.0)) {
    throw ConfigError("train_fraction must lie in (0, 1)");
  }
  if (config_.forecast_horizon == 0 || config_.forecast_horizon > config_.stat.horizon) {
    throw ConfigError("forecast_horizon must lie in [1, stat.horizon]");
  }
  if (config_.sim.context != config_.stat.context) {
    throw ConfigError("simulator exposure context must equal the statistic model context");
  }
}

const simgen::World& Experiment::world() {
  if (!world_) use_world(simgen::gen_world(config_.sim));
  return *world_;
}

void Experiment::use_world(simgen::World world) {
  world_ = std::move(world);
  rooms_.clear();
  for (const auto& s : world_->streams) {
    if (s.room_id != rooms_.size()) throw DatasetError("streams must be ordered by consecutive room id");
    rooms_.push_back({&s.panel, s.events, s.event_buckets});
  }
  train_.clear();
  eval_.clear();
  const std::size_t split = split_bucket();
  for (std::size_t i = 0; i < world_->dataset.samples.size(); ++i)
    (world_->dataset.samples[i].bucket < split ? train_ : eval_).push_back(i);
}

std::size_t Experiment::split_bucket() const {
  return static_cast<std::size_t>(config_.train_fraction * static_cast<double>(config_.sim.buckets));
}

const std::vector<std::size_t>& Experiment::train_samples() {
  world();
  return train_;
}

const std::vector<std::size_t>& Experiment::eval_samples() {
  world();
  return eval_;
}

std::span<const ranker::RoomHistory> Experiment::rooms() {
  world();
  return rooms_;
}

std::string Experiment::stat_key() const {
  const json j = {{"sim", config_.sim}, {"stat", config_.stat}, {"split", config_.train_fraction},
                  {"stride", config_.window_stride}};
  return "stat-" + core::hash_hex(j.dump());
}

std::string Experiment::prod_key() const {
  const json j = {{"sim", config_.sim}, {"prod", config_.prod}, {"split", config_.train_fraction}};
  return "prod-" + core::hash_hex(j.dump());
}

const statfore::StatisticModel& Experiment::stat_model() {
  if (stat_) return *stat_;
  const auto path = cache_dir_ ? *cache_dir_ / (stat_key() + ".ckpt") : fs::path();
  if (cache_dir_ && fs::exists(path)) {
    stat_ = statfore::StatisticModel::load(path);
  } else {
    const auto& w = world();
    const std::size_t len = config_.stat.context + config_.stat.horizon, split = split_bucket();
    std::vector<statfore::StatPanel> panels;
    for (const auto& s : w.streams)
      for (std::size_t end = len; end <= split; end += config_.window_stride) panels.push_back(s.panel.slice(end - len, len));
    statfore::StatisticModel model(config_.stat, statfore::default_channels().size());
    stat_losses_ = statfore::train_statistic(model, panels).epoch_loss;
    stat_ = std::move(model);
    if (cache_dir_) {
      fs::create_directories(*cache_dir_);
      stat_->save(path);
    }
  }
  stat_->freeze();
  return *stat_;
}

const prodfore::ProductModel& Experiment::prod_model() {
  if (prod_) return *prod_;
  const auto path = cache_dir_ ? *cache_dir_ / (prod_key() + ".ckpt") : fs::path();
  if (cache_dir_ && fs::exists(path)) {
    prod_ = prodfore::ProductModel::load(path);
  } else {
    const auto& w = world();
    std::vector<prodfore::ProductSequence> sequences;
    for (const auto& s : w.streams) {
      const auto before = s.events_before(split_bucket());
      sequences.emplace_back(before.begin(), before.end());
    }
    prodfore::ProductModel model(config_.prod, w.hierarchy);
    prod_losses_ = prodfore::train_product(model, sequences).epoch_loss;
    prod_ = std::move(model);
    if (cache_dir_) {
      fs::create_directories(*cache_dir_);
      prod_->save(path);
    }
  }
  prod_->freeze();
  return *prod_;
}

const ForecastMetrics& Experiment::forecasts() {
  if (forecasts_) return *forecasts_;
  const auto& w = world();
  const auto& sm = stat_model();
  const auto& pm = prod_model();
  const std::size_t ctx = config_.stat.context, h = config_.stat.horizon, split = split_bucket();

  ForecastMetrics m;
  m.mse_by_step.assign(h, 0.0);
  std::vector<double> truth, p_mean, p_latest, p_model;
  std::vector<std::vector<double>> step_truth(h), step_model(h);
  std::vector<core::Tensor> windows, targets;
  for (const auto& s : w.streams) {
    const std::size_t first = split >= ctx ? split - ctx : 0;
    for (std::size_t begin = first; begin + ctx + h <= s.panel.length(); begin += config_.eval_stride) {
      windows.push_back(s.panel.window(begin, ctx));
      targets.push_back(s.panel.window(begin + ctx, h));
    }
  }
  const auto forecasts = statfore::forecast_statistic_batch(windows, sm, h);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto& target = targets[i];
    const auto& model = forecasts[i].predicted;
    const auto mean = statfore::baseline_forecast(windows[i], statfore::BaselineMethod::MeanValue, h);
    const auto latest = statfore::baseline_forecast(windows[i], statfore::BaselineMethod::LatestValue, h);
    for (std::size_t c = 0; c < target.rows(); ++c) {
      for (std::size_t k = 0; k < h; ++k) {
        if (k < config_.forecast_horizon) {
          truth.push_back(target.at(c, k));
          p_model.push_back(model.at(c, k));
          p_mean.push_back(mean.at(c, k));
          p_latest.push_back(latest.at(c, k));
        }
        step_truth[k].push_back(target.at(c, k));
        step_model[k].push_back(model.at(c, k));
      }
    }
    ++m.stat_windows;
  }
  if (m.stat_windows == 0) throw DatasetError("no evaluation windows after the split");
  m.mse_model = metrics::mse(p_model, truth);
  m.mse_mean = metrics::mse(p_mean, truth);
  m.mse_latest = metrics::mse(p_latest, truth);
  for (std::size_t k = 0; k < h; ++k) m.mse_by_step[k] = metrics::mse(step_model[k], step_truth[k]);

  std::vector<std::size_t> truths, most, latest, model;
  for (const auto& s : w.streams) {
    if (s.event_buckets.empty() || s.event_buckets.back() < split) continue;
    const auto prefixes = prodfore::forecast_prefixes(std::span<const prodfore::ProductEvent>(s.events).first(s.events.size() - 1), pm, 0);
    for (std::size_t i = 1; i < s.events.size(); ++i) {
      if (s.event_buckets[i] < split) continue;
      const auto prefix = std::span<const prodfore::ProductEvent>(s.events).first(i);
      truths.push_back(s.events[i].c3);
      most.push_back(prodfore::baseline_category(prefix, prodfore::CategoryBaseline::MostFrequent));
      latest.push_back(prodfore::baseline_category(prefix, prodfore::CategoryBaseline::Latest));
      model.push_back(prefixes[i - 1].top1);
    }
  }
  if (truths.empty()) throw DatasetError("no product events after the split");
  m.prod_targets = truths.size();
  m.hit_most = prodfore::hitrate(most, truths);
  m.hit_latest = prodfore::hitrate(latest, truths);
  m.hit_model = prodfore::hitrate(model, truths);
  forecasts_ = m;
  return *forecasts_;
}

const Experiment::RawMap& Experiment::raw_foresight() {
  if (raw_) return *raw_;
  const auto& w = world();
  const auto& sm = stat_model();
  const auto& pm = prod_model();
  const std::size_t ctx = config_.stat.context, h = config_.stat.horizon;
  const std::size_t k_enc = config_.prod.encoding_positions;
  RawMap raw;
  std::map<std::size_t, std::vector<std::size_t>> buckets_by_room;
  for (const auto& s : w.dataset.samples) {
    if (raw.count({s.room_id, s.bucket})) continue;
    if (s.bucket < ctx) throw WindowError("sample bucket precedes the statistic context");
    raw.emplace(ranker::ForesightCache::Key{s.room_id, s.bucket}, RawForesight{});
    buckets_by_room[s.room_id].push_back(s.bucket);
  }

  std::vector<core::Tensor> windows;
  windows.reserve(raw.size());
  for (const auto& [key, r] : raw) windows.push_back(rooms_.at(key.first).panel->window(key.second - ctx, ctx));
  auto stat = statfore::forecast_statistic_batch(windows, sm, h);
  std::size_t next = 0;
  for (auto& [key, r] : raw) {
    r.stat_pred = std::move(stat[next].predicted);
    r.stat_enc = std::move(stat[next].encoding);
    r.stat_mean = statfore::baseline_forecast(windows[next], statfore::BaselineMethod::MeanValue, h);
    r.stat_latest = statfore::baseline_forecast(windows[next], statfore::BaselineMethod::LatestValue, h);
    ++next;
  }

  for (const auto& [room_id, buckets] : buckets_by_room) {
    const auto& room = rooms_.at(room_id);
    auto count_before = [&](std::size_t bucket) {
      return static_cast<std::size_t>(std::lower_bound(room.event_buckets.begin(), room.event_buckets.end(), bucket) -
                                      room.event_buckets.begin());
    };
    const std::size_t longest = count_before(*std::max_element(buckets.begin(), buckets.end()));
    const auto prefixes = prodfore::forecast_prefixes(room.events.first(longest), pm, k_enc);
    for (std::size_t bucket : buckets) {
      const std::size_t n = count_before(bucket);
      if (n == 0) throw SequenceError("sample precedes the room's first product");
      const auto events = room.events.first(n);
      auto& r = raw.at({room_id, bucket});
      r.prod_dist = prefixes[n - 1].distribution;
      r.prod_enc = prefixes[n - 1].encoding;
      r.prod_most = prodfore::baseline_category(events, prodfore::CategoryBaseline::MostFrequent);
      r.prod_latest = prodfore::baseline_category(events, prodfore::CategoryBaseline::Latest);
    }
  }
  raw_ = std::move(raw);
  return *raw_;
}

ranker::ForesightCache Experiment::feature_cache(const ranker::StatFeatureOptions* stat,
                                                 const ranker::ProdFeatureOptions* prod) {
  const auto& raw = raw_foresight();
  const auto channels = statfore::default_channels();
  const std::size_t categories = world().hierarchy.level3_size();
  const std::size_t k_enc = config_.prod.encoding_positions;
  ranker::ForesightCache cache;
  for (const auto& [key, r] : raw) {
    ranker::ForesightVector v;
    if (stat) {
      const core::Tensor* pred = &r.stat_pred;
      if (stat->baseline == statfore::BaselineMethod::MeanValue) pred = &r.stat_mean;
      if (stat->baseline == statfore::BaselineMethod::LatestValue) pred = &r.stat_latest;
      v.stat = ranker::stat_features(*pred, stat->baseline ? nullptr : &r.stat_enc, channels, *stat);
    }
    if (prod) {
      if (prod->baseline) {
        core::Tensor onehot = core::Tensor::vector(std::vector<double>(categories, 0.0));
        onehot[*prod->baseline == prodfore::CategoryBaseline::MostFrequent ? r.prod_most : r.prod_latest] = 1.0;
        v.prod = ranker::prod_features(onehot, nullptr, 0);
      } else {
        v.prod = ranker::prod_features(r.prod_dist, prod->encoding && k_enc > 0 ? &r.prod_enc : nullptr,
                                       prod->encoding ? config_.prod.encoding_positions : 0);
      }
    }
    cache.put(key.first, key.second, std::move(v));
  }
  return cache;
}

const ranker::ForesightCache& Experiment::full_cache() {
  if (!full_cache_) {
    ranker::StatFeatureOptions so;
    so.horizon = config_.forecast_horizon;
    ranker::ProdFeatureOptions po;
    full_cache_ = feature_cache(&so, &po);
  }
  return *full_cache_;
}

ranker::RankResult Experiment::train_with(const ranker::ForesightCache* cache, Variant variant, std::uint64_t seed_offset) {
  world();
  auto rank_config = config_.rank;
  rank_config.seed += seed_offset;
  return ranker::train_ranker(world_->dataset, train_, eval_, cache, variant, rank_config);
}

std::map<std::string, double> Experiment::mean_auc(const ranker::ForesightCache* cache, Variant variant) {
  std::map<std::string, double> auc;
  const std::size_t n = config_.ablation_restarts;
  for (std::size_t r = 0; r < n; ++r) {
    for (const auto& m : train_with(cache, variant, r).metrics) auc[m.task] += m.auc / static_cast<double>(n);
  }
  return auc;
}

std::vector<RankRow> Experiment::rows_of(const ranker::RankResult& r, Variant variant) const {
  std::vector<RankRow> rows;
  for (const auto& m : r.metrics) rows.push_back({std::string(ranker::variant_name(variant)), m});
  return rows;
}

ranker::RankResult Experiment::train_rank(Variant variant) {
  if (variant == Variant::Base) return train_with(nullptr, variant);
  return train_with(&full_cache(), variant);
}

const std::vector<RankRow>& Experiment::rank(Variant variant) {
  auto it = rank_rows_.find(variant);
  if (it == rank_rows_.end()) it = rank_rows_.emplace(variant, rows_of(train_rank(variant), variant)).first;
  return it->second;
}

Table Experiment::rank_table() {
  Table t{{"variant", "task", "auc", "uauc", "gauc"}, {}};
  for (const auto& name : config_.variants) {
    for (const auto& row : rank(ranker::parse_variant(name))) {
      t.rows.push_back({row.variant, row.metrics.task, format_number(row.metrics.auc), format_number(row.metrics.uauc),
                        format_number(row.metrics.gauc)});
    }
  }
  return t;
}

Table Experiment::forecast_table() {
  const auto& m = forecasts();
  Table t{{"method", "metric", "value"}, {}};
  t.rows.push_back({"stat-mean", "mse", format_number(m.mse_mean)});
  t.rows.push_back({"stat-latest", "mse", format_number(m.mse_latest)});
  t.rows.push_back({"stat-model", "mse", format_number(m.mse_model)});
  t.rows.push_back({"prod-most", "hitrate", format_number(m.hit_most)});
  t.rows.push_back({"prod-latest", "hitrate", format_number(m.hit_latest)});
  t.rows.push_back({"prod-model", "hitrate", format_number(m.hit_model)});
  return t;
}

Table Experiment::ablation(const std::string& which) {
  if (std::find(kAblations.begin(), kAblations.end(), which) == kAblations.end()) {
    throw ConfigError("unknown ablation '" + which + "' (accuracy-stat, accuracy-prod, channels, steps)");
  }
  const auto& tasks = world().dataset.tasks;
  const auto& fm = forecasts();
  const std::size_t h = config_.stat.horizon;

  Table t;
  if (which == "accuracy-stat") {
    t.columns = {"method", "mse"};
    for (const auto& task : tasks) t.columns.push_back(task + "_auc");
    const std::pair<const char*, std::optional<statfore::BaselineMethod>> methods[] = {
        {"mean", statfore::BaselineMethod::MeanValue}, {"latest", statfore::BaselineMethod::LatestValue}, {"model", {}}};
    for (const auto& [name, baseline] : methods) {
      ranker::StatFeatureOptions so;
      so.horizon = config_.forecast_horizon;
      so.encoding = false;
      so.baseline = baseline;
      const auto cache = feature_cache(&so, nullptr);
      const auto auc = mean_auc(&cache, Variant::Stat);
      const double mse = !baseline ? fm.mse_model
                         : *baseline == statfore::BaselineMethod::MeanValue ? fm.mse_mean
                                                                            : fm.mse_latest;
      std::vector<std::string> row = {name, format_number(mse)};
      for (const auto& task : tasks) row.push_back(format_number(auc.at(task)));
      t.rows.push_back(row);
    }
  } else if (which == "accuracy-prod") {
    t.columns = {"method", "hitrate"};
    for (const auto& task : tasks) t.columns.push_back(task + "_auc");
    const std::pair<const char*, std::optional<prodfore::CategoryBaseline>> methods[] = {
        {"most", prodfore::CategoryBaseline::MostFrequent}, {"latest", prodfore::CategoryBaseline::Latest}, {"model", {}}};
    for (const auto& [name, baseline] : methods) {
      ranker::ProdFeatureOptions po;
      po.encoding = false;
      po.baseline = baseline;
      const auto cache = feature_cache(nullptr, &po);
      const auto auc = mean_auc(&cache, Variant::Prod);
      const double hit = !baseline ? fm.hit_model
                         : *baseline == prodfore::CategoryBaseline::MostFrequent ? fm.hit_most
                                                                                 : fm.hit_latest;
      std::vector<std::string> row = {name, format_number(hit)};
      for (const auto& task : tasks) row.push_back(format_number(auc.at(task)));
      t.rows.push_back(row);
    }
  } else if (which == "channels") {
    const auto base = mean_auc(nullptr, Variant::Base);
    t.columns = {"group"};
    for (const auto& task : tasks) {
      t.columns.push_back(task + "_auc");
      t.columns.push_back(task + "_delta");
    }
    for (auto group : statfore::kAllGroups) {
      ranker::StatFeatureOptions so;
      so.horizon = config_.forecast_horizon;
      so.group = group;
      const auto cache = feature_cache(&so, nullptr);
      const auto auc = mean_auc(&cache, Variant::Stat);
      std::vector<std::string> row = {std::string(statfore::group_name(group))};
      for (const auto& task : tasks) {
        row.push_back(format_number(auc.at(task)));
        row.push_back(format_number(auc.at(task) - base.at(task)));
      }
      t.rows.push_back(row);
    }
  } else {
    const auto base = mean_auc(nullptr, Variant::Base);
    t.columns = {"step", "mse"};
    for (const auto& task : tasks) {
      t.columns.push_back(task + "_auc");
      t.columns.push_back(task + "_gain");
    }
    for (std::size_t step = 1; step <= h; ++step) {
      ranker::StatFeatureOptions so;
      so.horizon = h;
      so.steps = {step};
      so.encoding = false;
      const auto cache = feature_cache(&so, nullptr);
      const auto auc = mean_auc(&cache, Variant::Stat);
      std::vector<std::string> row = {std::to_string(step), format_number(fm.mse_by_step[step - 1])};
      for (const auto& task : tasks) {
        row.push_back(format_number(auc.at(task)));
        row.push_back(format_number(auc.at(task) - base.at(task)));
      }
      t.rows.push_back(row);
    }
  }
  return t;
}

namespace {

void write_manifest(const ExperimentConfig& config, const json& stages, const std::string& status,
                    const std::string& failed_stage = "", const std::string& error = "") {
  json m = {{"config_hash", config_hash(config)}, {"seed", config.seed}, {"config", to_json(config)},
            {"stages", stages},                   {"status", status}};
  if (!failed_stage.empty()) {
    m["failed_stage"] = failed_stage;
    m["error"] = error;
    m["partial"] = true;
  }
  std::ofstream out(config.out / "manifest.json", std::ios::binary);
  out << m.dump(2) << '\n';
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const auto probe = dir / ".write-probe";
  std::ofstream out(probe);
  if (!out) throw IoError("output directory " + dir.string() + " is not writable");
  out.close();
  fs::remove(probe, ec);
}

}  // namespace

PipelineOutputs run_pipeline(const ExperimentConfig& config) {
  ensure_dir(config.out);
  Experiment exp(config);
  exp.set_model_cache(config.out / "models");
  json stages = json::array();
  std::string stage;
  try {
    stage = "gen";
    exp.world();
    stages.push_back(stage);
    stage = "train-stat";
    exp.stat_model();
    stages.push_back(stage);
    stage = "train-prod";
    exp.prod_model();
    stages.push_back(stage);
    stage = "train-rank";
    const Table rank = exp.rank_table();
    stages.push_back(stage);
    stage = "eval";
    const Table forecast = exp.forecast_table();
    PipelineOutputs out{config.out / "rank_report.csv", config.out / "forecast_report.csv", {}, exp.forecasts()};
    write_report(out.rank_report, rank, config);
    write_report(out.forecast_report, forecast, config);
    for (const auto& name : config.variants) {
      const auto& rows = exp.rank(ranker::parse_variant(name));
      out.rank.insert(out.rank.end(), rows.begin(), rows.end());
    }
    stages.push_back(stage);
    write_manifest(config, stages, "ok");
    return out;
  } catch (const std::exception& e) {
    write_manifest(config, stages, "failed", stage, e.what());
    throw;
  }
}

Table run_ablation(const ExperimentConfig& config, const std::string& which) {
  if (std::find(kAblations.begin(), kAblations.end(), which) == kAblations.end()) {
    throw ConfigError("unknown ablation '" + which + "' (accuracy-stat, accuracy-prod, channels, steps)");
  }
  ensure_dir(config.out);
  Experiment exp(config);
  exp.set_model_cache(config.out / "models");
  Table t = exp.ablation(which);
  write_report(config.out / ("ablation_" + which + ".csv"), t, config);
  return t;
}

}  // namespace lf::cli
