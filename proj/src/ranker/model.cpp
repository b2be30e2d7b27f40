#include "lf/ranker/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "lf/core/errors.hpp"
#include "lf/core/nn.hpp"
#include "lf/core/ops.hpp"
#include "lf/core/optim.hpp"
#include "lf/metrics/metrics.hpp"

namespace lf::ranker {

using core::Shape;
using core::Tape;
using core::Tensor;
using core::Var;

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::Base: return "base";
    case Variant::Stat: return "+stat";
    case Variant::Prod: return "+prod";
    case Variant::Both: return "+both";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  if (!name.empty() && name.front() == '+') name.remove_prefix(1);
  if (name == "base") return Variant::Base;
  if (name == "stat") return Variant::Stat;
  if (name == "prod") return Variant::Prod;
  if (name == "both") return Variant::Both;
  throw ConfigError("unknown variant '" + std::string(name) + "' (base, stat, prod, both)");
}

void to_json(nlohmann::json& j, const RankConfig& c) {
  j = {{"embed", c.embed}, {"hidden", c.hidden}, {"category_width", c.category_width}, {"epochs", c.epochs},
       {"batch", c.batch}, {"lr", c.lr},         {"weight_decay", c.weight_decay}, {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, RankConfig& c) {
  RankConfig d;
  d.embed = j.value("embed", d.embed);
  d.hidden = j.value("hidden", d.hidden);
  d.category_width = j.value("category_width", d.category_width);
  d.epochs = j.value("epochs", d.epochs);
  d.batch = j.value("batch", d.batch);
  d.lr = j.value("lr", d.lr);
  d.weight_decay = j.value("weight_decay", d.weight_decay);
  d.seed = j.value("seed", d.seed);
  c = d;
}

ForesightLayout layout_of(const ForesightVector& v, Variant variant) {
  ForesightLayout l;
  if (uses_stat(variant)) {
    if (!v.stat) throw ConfigError(std::string("variant ") + std::string(variant_name(variant)) + " needs statistic foresight");
    l.stat_forecast = v.stat->forecast.size();
    l.stat_encoding = v.stat->encoding.size();
  }
  if (uses_prod(variant)) {
    if (!v.prod) throw ConfigError(std::string("variant ") + std::string(variant_name(variant)) + " needs product foresight");
    l.categories = v.prod->distribution.size();
    l.prod_encoding = v.prod->encoding.size();
  }
  return l;
}

Standardizer Standardizer::fit(const std::vector<std::vector<double>>& rows, std::size_t width, bool unit_block) {
  Standardizer s;
  s.mean.assign(width, 0.0);
  s.scale.assign(width, 1.0);
  if (rows.empty()) return s;
  for (const auto& r : rows)
    for (std::size_t j = 0; j < width; ++j) s.mean[j] += r[j];
  for (auto& m : s.mean) m /= static_cast<double>(rows.size());
  std::vector<double> var(width, 0.0);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < width; ++j) var[j] += (r[j] - s.mean[j]) * (r[j] - s.mean[j]);
  for (std::size_t j = 0; j < width; ++j) {
    const double sd = std::sqrt(var[j] / static_cast<double>(rows.size()));
    s.scale[j] = sd > 1e-8 ? sd : 1.0;
    if (unit_block) s.scale[j] *= std::sqrt(static_cast<double>(width));
  }
  return s;
}

void Standardizer::apply(std::span<const double> in, std::span<double> out) const {
  if (mean.empty()) {
    std::copy(in.begin(), in.end(), out.begin());
    return;
  }
  if (in.size() != mean.size()) {
    throw DimensionError("standardizer fitted on " + std::to_string(mean.size()) + " columns, got " +
                         std::to_string(in.size()));
  }
  for (std::size_t j = 0; j < in.size(); ++j) out[j] = (in[j] - mean[j]) / scale[j];
}

RankerModel::RankerModel(RankConfig config, std::vector<std::string> tasks, std::array<std::size_t, kFieldCount> vocab,
                         Variant variant, ForesightLayout layout)
    : config_(config), tasks_(std::move(tasks)), vocab_(vocab), variant_(variant), layout_(layout) {
  if (tasks_.empty()) throw ConfigError("ranker needs at least one task");
  if (!uses_stat(variant_)) layout_.stat_forecast = layout_.stat_encoding = 0;
  if (!uses_prod(variant_)) layout_.categories = layout_.prod_encoding = 0;
  if (uses_prod(variant_) && layout_.categories == 0) throw ConfigError("ranker: product variant needs |C3| > 0");
  core::Rng rng(config_.seed);
  for (std::size_t f = 0; f < kFieldCount; ++f) {
    if (vocab_[f] == 0) throw ConfigError(std::string("ranker: empty vocabulary for ") + kFieldNames[f]);
    params_.add(std::string("rank.emb.") + kFieldNames[f], core::normal_init({vocab_[f], config_.embed}, 0.05, rng));
  }
  core::add_dense(params_, "rank.fc1", input_width(), config_.hidden, rng);
  core::add_dense(params_, "rank.fc2", config_.hidden, config_.hidden, rng);
  core::add_dense(params_, "rank.head", config_.hidden, tasks_.size(), rng);
  if (uses_prod(variant_)) {
    params_.add("rank.cat_table", core::normal_init({layout_.categories, config_.category_width}, 1.0, rng));
  }
}

std::size_t RankerModel::input_width() const noexcept {
  std::size_t w = base_width() + layout_.stat_forecast + layout_.stat_encoding;
  if (uses_prod(variant_)) w += config_.category_width + layout_.prod_encoding;
  return w;
}

void RankerModel::fit_inputs(std::span<const ForesightVector* const> train) {
  std::vector<std::vector<double>> forecast, stat_enc, prod_enc;
  for (const auto* f : train) {
    if (uses_stat(variant_) && f->stat) {
      forecast.push_back(f->stat->forecast);
      stat_enc.push_back(f->stat->encoding);
    }
    if (uses_prod(variant_) && f->prod) prod_enc.push_back(f->prod->encoding);
  }
  stat_forecast_norm_ = Standardizer::fit(forecast, layout_.stat_forecast);
  stat_encoding_norm_ = Standardizer::fit(stat_enc, layout_.stat_encoding, true);
  prod_encoding_norm_ = Standardizer::fit(prod_enc, layout_.prod_encoding, true);
}

Var RankerModel::assemble(Tape& tape, const core::ParamStore& params, std::span<const RankSample* const> samples,
                          std::span<const ForesightVector* const> foresight) const {
  const std::size_t b = samples.size();
  if (b == 0) throw DimensionError("ranker: empty batch");
  if (variant_ != Variant::Base && foresight.size() != b) {
    throw DimensionError("ranker: " + std::to_string(foresight.size()) + " foresight vectors for " +
                         std::to_string(b) + " samples");
  }
  std::vector<Var> parts;
  for (std::size_t f = 0; f < kFieldCount; ++f) {
    std::vector<std::size_t> idx(b);
    for (std::size_t i = 0; i < b; ++i) {
      idx[i] = samples[i]->fields()[f];
      if (idx[i] >= vocab_[f]) {
        throw IndexError(std::string("ranker: ") + kFieldNames[f] + " " + std::to_string(idx[i]) +
                         " outside vocabulary of " + std::to_string(vocab_[f]));
      }
    }
    parts.push_back(core::gather_rows(tape.param(params, std::string("rank.emb.") + kFieldNames[f]), idx));
  }
  if (uses_stat(variant_)) {
    const std::size_t fw = layout_.stat_forecast, ew = layout_.stat_encoding;
    Tensor block({b, fw + ew});
    for (std::size_t i = 0; i < b; ++i) {
      if (!foresight[i]->stat) throw ConfigError("ranker: statistic foresight missing for a sample");
      const auto& v = *foresight[i]->stat;
      if (v.forecast.size() != fw || v.encoding.size() != ew) {
        throw DimensionError("ranker: statistic foresight has " + std::to_string(v.forecast.size()) + "+" +
                             std::to_string(v.encoding.size()) + " values, expected " + std::to_string(fw) + "+" +
                             std::to_string(ew));
      }
      double* row = block.data() + i * (fw + ew);
      stat_forecast_norm_.apply(v.forecast, std::span<double>(row, fw));
      stat_encoding_norm_.apply(v.encoding, std::span<double>(row + fw, ew));
    }
    parts.push_back(tape.constant(std::move(block)));
  }
  if (uses_prod(variant_)) {
    Tensor dist({b, layout_.categories});
    std::optional<Tensor> enc;
    if (layout_.prod_encoding > 0) enc = Tensor({b, layout_.prod_encoding});
    for (std::size_t i = 0; i < b; ++i) {
      if (!foresight[i]->prod) throw ConfigError("ranker: product foresight missing for a sample");
      const auto& p = *foresight[i]->prod;
      if (p.distribution.size() != layout_.categories || p.encoding.size() != layout_.prod_encoding) {
        throw DimensionError("ranker: product foresight width does not match the model layout");
      }
      std::copy(p.distribution.begin(), p.distribution.end(), dist.data() + i * layout_.categories);
      if (enc) {
        prod_encoding_norm_.apply(p.encoding,
                                  std::span<double>(enc->data() + i * layout_.prod_encoding, layout_.prod_encoding));
      }
    }
    // Distribution is a constant: gradients reach the table, never the product model.
    parts.push_back(core::matmul(tape.constant(std::move(dist)), tape.param(params, "rank.cat_table")));
    if (enc) parts.push_back(tape.constant(std::move(*enc)));
  }
  return core::concat_cols(parts);
}

Var RankerModel::logits(Tape& tape, const core::ParamStore& params, Var input) const {
  if (input.value().cols() != input_width()) {
    throw DimensionError("ranker input has width " + std::to_string(input.value().cols()) + ", expected " +
                         std::to_string(input_width()));
  }
  Var h = core::relu(core::dense(tape, params, "rank.fc1", input));
  h = core::relu(core::dense(tape, params, "rank.fc2", h));
  return core::dense(tape, params, "rank.head", h);
}

Tensor assemble_input(const RankerModel& model, const RankSample& sample, const ForesightVector& foresight) {
  Tape tape;
  const RankSample* s[] = {&sample};
  const ForesightVector* f[] = {&foresight};
  return model.assemble(tape, model.params(), s, f).value();
}

Tensor rank_forward(const Tensor& input, const core::ParamStore& params) {
  const Tensor& w1 = params.value("rank.fc1.w");
  if (input.cols() != w1.rows()) {
    throw DimensionError("ranker input has width " + std::to_string(input.cols()) + ", expected " +
                         std::to_string(w1.rows()));
  }
  auto relu = [](Tensor t) {
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::max(t[i], 0.0);
    return t;
  };
  Tensor h = relu(core::dense_forward(input, w1, params.value("rank.fc1.b")));
  h = relu(core::dense_forward(h, params.value("rank.fc2.w"), params.value("rank.fc2.b")));
  return core::sigmoid(core::dense_forward(h, params.value("rank.head.w"), params.value("rank.head.b")));
}

double rank_loss(const Tensor& predictions, const std::vector<std::vector<int>>& labels) {
  const std::size_t rows = predictions.rows(), tasks = predictions.cols();
  if (labels.size() != rows) {
    throw DimensionError("rank_loss: " + std::to_string(labels.size()) + " label rows for " + std::to_string(rows) +
                         " predictions");
  }
  constexpr double clamp = 1e-7;
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (labels[r].size() != tasks) throw DimensionError("rank_loss: label row width differs from task count");
    for (std::size_t k = 0; k < tasks; ++k) {
      const int y = labels[r][k];
      if (y != 0 && y != 1) throw LabelError("rank_loss: label " + std::to_string(y) + " is not binary");
      const double p = std::clamp(predictions.at(r, k), clamp, 1.0 - clamp);
      total -= y == 1 ? std::log(p) : std::log(1.0 - p);
    }
  }
  return total / static_cast<double>(rows);
}

namespace {

struct Batch {
  std::vector<const RankSample*> samples;
  std::vector<const ForesightVector*> foresight;
};

Batch make_batch(const RankDataset& ds, std::span<const std::size_t> idx, const ForesightCache* cache,
                 Variant variant) {
  Batch b;
  for (auto i : idx) {
    const auto& s = ds.samples.at(i);
    b.samples.push_back(&s);
    if (variant != Variant::Base) b.foresight.push_back(&cache->at(s.room_id, s.bucket));
  }
  return b;
}

}  // namespace

std::vector<TaskMetrics> evaluate_ranker(const RankerModel& model, const RankDataset& ds,
                                         std::span<const std::size_t> eval, const ForesightCache* cache) {
  if (model.variant() != Variant::Base && cache == nullptr) throw ConfigError("evaluate_ranker: foresight cache required");
  const std::size_t tasks = model.tasks().size();
  std::vector<metrics::ScoredLabelSet> sets(tasks);
  const std::size_t step = std::max<std::size_t>(model.config().batch, 256);
  for (std::size_t begin = 0; begin < eval.size(); begin += step) {
    const auto idx = eval.subspan(begin, std::min(step, eval.size() - begin));
    const Batch b = make_batch(ds, idx, cache, model.variant());
    Tape tape;
    const Tensor p = core::sigmoid(model.logits(tape, model.params(), model.assemble(tape, model.params(), b.samples, b.foresight)).value());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const auto& s = *b.samples[r];
      for (std::size_t k = 0; k < tasks; ++k) {
        const std::size_t task = ds.task_index(model.tasks()[k]);
        sets[k].push_back({static_cast<std::int64_t>(s.user_id), p.at(r, k), s.labels[task], s.exposure_weight});
      }
    }
  }
  std::vector<TaskMetrics> out;
  for (std::size_t k = 0; k < tasks; ++k)
    out.push_back({model.tasks()[k], metrics::auc(sets[k]), metrics::uauc(sets[k]).value, metrics::gauc(sets[k]).value});
  return out;
}

RankResult train_ranker(const RankDataset& ds, std::span<const std::size_t> train, std::span<const std::size_t> eval,
                        const ForesightCache* cache, Variant variant, const RankConfig& config) {
  if (train.empty()) throw DatasetError("train_ranker: empty training split");
  if (variant != Variant::Base && cache == nullptr) {
    throw ConfigError(std::string("train_ranker: variant ") + std::string(variant_name(variant)) +
                      " needs foresight features");
  }
  ForesightLayout layout;
  if (variant != Variant::Base) {
    const auto& first = ds.samples.at(train.front());
    layout = layout_of(cache->at(first.room_id, first.bucket), variant);
  }
  RankResult result{RankerModel(config, ds.tasks, ds.vocab, variant, layout), {}, {}};
  RankerModel& model = result.model;

  if (variant != Variant::Base) {
    std::vector<const ForesightVector*> rows;
    for (auto i : train) {
      const auto& s = ds.samples.at(i);
      rows.push_back(&cache->at(s.room_id, s.bucket));
    }
    model.fit_inputs(rows);
  }

  std::vector<std::size_t> order(train.begin(), train.end());
  std::mt19937_64 shuffle_rng(config.seed ^ 0x5eedULL);
  core::AdamConfig adam{config.lr};
  adam.weight_decay = config.weight_decay;
  const std::size_t tasks = ds.tasks.size();
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double total = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch) {
      const auto idx = std::span<const std::size_t>(order).subspan(begin, std::min(config.batch, order.size() - begin));
      const Batch b = make_batch(ds, idx, cache, variant);
      Tensor labels({idx.size(), tasks});
      for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t k = 0; k < tasks; ++k) labels.at(r, k) = b.samples[r]->labels[k];
      auto& params = model.mutable_params();
      Tape tape;
      Var loss = core::sigmoid_bce(model.logits(tape, params, model.assemble(tape, params, b.samples, b.foresight)), labels);
      tape.backward(loss);
      params.zero_grad();
      tape.accumulate_into(params);
      core::adam_step(params, adam);
      total += loss.value()[0] * static_cast<double>(idx.size());
    }
    result.epoch_loss.push_back(total / static_cast<double>(order.size()));
  }
  if (!eval.empty()) result.metrics = evaluate_ranker(model, ds, eval, cache);
  return result;
}

RankResult train_ranker(const RankDataset& ds, std::span<const std::size_t> train, std::span<const std::size_t> eval,
                        std::span<const RoomHistory> rooms, const statfore::StatisticModel* stat,
                        const prodfore::ProductModel* prod, Variant variant, const RankConfig& config) {
  if (variant == Variant::Base) return train_ranker(ds, train, eval, nullptr, variant, config);
  ForesightSources src;
  src.stat = stat;
  src.prod = prod;
  src.with_stat = uses_stat(variant);
  src.with_prod = uses_prod(variant);
  if (stat) src.stat_options.horizon = stat->config().horizon;
  std::vector<RankSample> needed;
  for (auto i : train) needed.push_back(ds.samples.at(i));
  for (auto i : eval) needed.push_back(ds.samples.at(i));
  const ForesightCache cache = build_foresight_cache(needed, rooms, src);
  return train_ranker(ds, train, eval, &cache, variant, config);
}

}  // namespace lf::ranker
