#include "lf/prodfore/model.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <string>

#include "lf/core/checkpoint.hpp"
#include "lf/core/errors.hpp"
#include "lf/core/nn.hpp"
#include "lf/core/ops.hpp"
#include "lf/core/optim.hpp"

namespace lf::prodfore {

void to_json(nlohmann::json& j, const ProdConfig& c) {
  j = {{"width", c.width},
       {"blocks", c.blocks},
       {"heads", c.heads},
       {"ffn_hidden", c.ffn_hidden},
       {"max_context", c.max_context},
       {"encoding_positions", c.encoding_positions},
       {"epochs", c.epochs},
       {"batch", c.batch},
       {"lr", c.lr},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, ProdConfig& c) {
  ProdConfig d;
  c.width = j.value("width", d.width);
  c.blocks = j.value("blocks", d.blocks);
  c.heads = j.value("heads", d.heads);
  c.ffn_hidden = j.value("ffn_hidden", d.ffn_hidden);
  c.max_context = j.value("max_context", d.max_context);
  c.encoding_positions = j.value("encoding_positions", d.encoding_positions);
  c.epochs = j.value("epochs", d.epochs);
  c.batch = j.value("batch", d.batch);
  c.lr = j.value("lr", d.lr);
  c.seed = j.value("seed", d.seed);
}

namespace {

constexpr double kEmbeddingStd = 0.02;

core::BlockConfig block_config(const ProdConfig& c) { return {c.width, c.heads, c.ffn_hidden, /*causal=*/true}; }

void validate(const ProdConfig& c) {
  if (c.heads == 0 || c.width % c.heads != 0) {
    throw ConfigError("product model width " + std::to_string(c.width) + " is not divisible by " +
                      std::to_string(c.heads) + " heads");
  }
  if (c.max_context == 0) throw ConfigError("product model max_context must be positive");
  if (c.batch == 0) throw ConfigError("product model batch must be positive");
}

std::span<const ProductEvent> recent(std::span<const ProductEvent> events, std::size_t max_context) {
  if (events.size() > max_context) return events.subspan(events.size() - max_context);
  return events;
}

}  // namespace

ProductModel::ProductModel(ProdConfig config, CategoryHierarchy hierarchy)
    : config_(config), hierarchy_(std::move(hierarchy)) {
  validate(config_);
  core::Rng rng(config_.seed);
  const std::size_t d = config_.width;
  params_.add("prod.emb.product", core::normal_init({hierarchy_.product_count(), d}, kEmbeddingStd, rng));
  params_.add("prod.emb.c1", core::normal_init({hierarchy_.level1_size(), d}, kEmbeddingStd, rng));
  params_.add("prod.emb.c2", core::normal_init({hierarchy_.level2_size(), d}, kEmbeddingStd, rng));
  params_.add("prod.emb.c3", core::normal_init({hierarchy_.level3_size(), d}, kEmbeddingStd, rng));
  core::add_dense(params_, "prod.in", 4 * d, d, rng);
  params_.add("prod.pos", core::normal_init({config_.max_context, d}, kEmbeddingStd, rng));
  for (std::size_t b = 0; b < config_.blocks; ++b)
    core::add_transformer_block(params_, "prod.block" + std::to_string(b), block_config(config_), rng);
  core::add_layer_norm(params_, "prod.norm", d);
  core::add_dense(params_, "prod.head", d, hierarchy_.level3_size(), rng);
}

ProductModel::ProductModel(ProdConfig config, CategoryHierarchy hierarchy, core::ParamStore params)
    : config_(config), hierarchy_(std::move(hierarchy)), params_(std::move(params)) {
  validate(config_);
  ProductModel fresh(config_, hierarchy_);
  for (const auto& [name, p] : fresh.params()) {
    if (!params_.contains(name) || params_.value(name).shape() != p.value.shape()) {
      throw ConfigError("product checkpoint does not match config at '" + name + "'");
    }
  }
}

core::ParamStore& ProductModel::mutable_params() {
  if (frozen_) throw ContractError("product model is frozen");
  return params_;
}

core::Var ProductModel::embed(core::Tape& tape, const core::ParamStore& params,
                              std::span<const ProductEvent> events) const {
  if (events.empty()) throw SequenceError("product sequence is empty");
  std::vector<std::size_t> p, c1, c2, c3;
  for (const auto& e : events) {
    hierarchy_.validate(e);
    p.push_back(e.product);
    c1.push_back(e.c1);
    c2.push_back(e.c2);
    c3.push_back(e.c3);
  }
  const core::Var parts[] = {
      core::gather_rows(tape.param(params, "prod.emb.product"), p),
      core::gather_rows(tape.param(params, "prod.emb.c1"), c1),
      core::gather_rows(tape.param(params, "prod.emb.c2"), c2),
      core::gather_rows(tape.param(params, "prod.emb.c3"), c3),
  };
  return core::concat_cols(parts);
}

ProductModel::Graph ProductModel::forward(core::Tape& tape, const core::ParamStore& params,
                                          std::span<const ProductEvent> events) const {
  events = recent(events, config_.max_context);
  const std::size_t len = events.size();
  core::Var x = core::dense(tape, params, "prod.in", embed(tape, params, events));
  x = core::add(x, core::slice_rows(tape.param(params, "prod.pos"), 0, len));
  for (std::size_t b = 0; b < config_.blocks; ++b)
    x = core::transformer_block(tape, params, "prod.block" + std::to_string(b), x, len, block_config(config_));
  core::Var enc = core::layer_norm(tape, params, "prod.norm", x);
  return {core::dense(tape, params, "prod.head", enc), enc};
}

void ProductModel::save(const std::filesystem::path& path) const {
  nlohmann::json manifest;
  manifest["kind"] = "product";
  manifest["config"] = config_;
  manifest["hierarchy"] = hierarchy_.to_json();
  core::save_checkpoint(params_, path, manifest);
}

ProductModel ProductModel::load(const std::filesystem::path& path) {
  auto ck = core::load_checkpoint(path);
  if (ck.manifest.value("kind", "") != "product") throw ParseError(path.string() + " is not a product checkpoint");
  return ProductModel(ck.manifest.at("config").get<ProdConfig>(),
                      CategoryHierarchy::from_json(ck.manifest.at("hierarchy")), std::move(ck.store));
}

core::Tensor embed_sequence(std::span<const ProductEvent> events, const ProductModel& model) {
  core::Tape tape;
  return model.embed(tape, model.params(), events).value();
}

ProdOutputs product_forward(std::span<const ProductEvent> events, const ProductModel& model) {
  core::Tape tape;
  auto g = model.forward(tape, model.params(), events);
  const auto& logits = g.logits.value();
  const std::size_t last = logits.rows() - 1, k = logits.cols();
  core::Tensor out({k});
  std::copy_n(logits.data() + last * k, k, out.data());
  return {std::move(out), g.encoding.value()};
}

ProdForecast forecast_product(std::span<const ProductEvent> events, const ProductModel& model) {
  if (events.empty()) throw SequenceError("forecast_product: empty sequence");
  auto out = product_forward(events, model);
  core::Tensor dist = core::softmax_rows(out.logits);
  const auto top = static_cast<std::size_t>(std::max_element(dist.values().begin(), dist.values().end()) -
                                            dist.values().begin());
  return {std::move(dist), std::move(out.encoding), top};
}

std::vector<ProdForecast> forecast_prefixes(std::span<const ProductEvent> events, const ProductModel& model,
                                            std::size_t encoding_rows) {
  std::vector<ProdForecast> out;
  out.reserve(events.size());
  auto trailing = [&](const core::Tensor& enc, std::size_t end) {
    const std::size_t keep = std::min(encoding_rows, end), d = enc.cols();
    if (keep == 0) return core::Tensor();
    core::Tensor t({keep, d});
    std::copy_n(enc.data() + (end - keep) * d, keep * d, t.data());
    return t;
  };
  const std::size_t shared = std::min(events.size(), model.config().max_context);
  if (shared > 0) {
    core::Tape tape;
    const auto g = model.forward(tape, model.params(), events.first(shared));
    const auto& logits = g.logits.value();
    for (std::size_t n = 1; n <= shared; ++n) {
      core::Tensor row({1, logits.cols()});
      std::copy_n(logits.data() + (n - 1) * logits.cols(), logits.cols(), row.data());
      core::Tensor dist = core::softmax_rows(row).reshaped({logits.cols()});
      const auto top = static_cast<std::size_t>(std::max_element(dist.values().begin(), dist.values().end()) -
                                                dist.values().begin());
      out.push_back({std::move(dist), trailing(g.encoding.value(), n), top});
    }
  }
  for (std::size_t n = shared + 1; n <= events.size(); ++n) {
    auto f = forecast_product(events.first(n), model);
    f.encoding = trailing(f.encoding, f.encoding.rows());
    out.push_back(std::move(f));
  }
  return out;
}

ProdTrainReport train_product(ProductModel& model, std::span<const ProductSequence> sequences) {
  const auto cfg = model.config();
  core::ParamStore& params = model.mutable_params();
  ProdTrainReport report;
  std::vector<std::span<const ProductEvent>> usable;
  for (const auto& s : sequences) {
    if (s.size() < 2) {
      ++report.skipped;
      continue;
    }
    usable.push_back(recent(s, cfg.max_context + 1));
  }
  report.used = usable.size();
  if (usable.empty()) throw DatasetError("train_product: no sequence has at least 2 events");

  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(usable.size());
  std::iota(order.begin(), order.end(), 0);
  const core::AdamConfig adam{cfg.lr};
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch) {
      const std::size_t count = std::min(cfg.batch, order.size() - b);
      params.zero_grad();
      for (std::size_t k = 0; k < count; ++k) {
        const auto seq = usable[order[b + k]];
        const auto inputs = seq.first(seq.size() - 1);
        std::vector<std::size_t> targets;
        for (std::size_t t = 1; t < seq.size(); ++t) targets.push_back(seq[t].c3);
        core::Tape tape;
        auto g = model.forward(tape, params, inputs);
        auto loss = core::softmax_cross_entropy(g.logits, targets);
        tape.backward(loss);
        tape.accumulate_into(params);
        loss_sum += loss.value()[0];
      }
      params.scale_grad(1.0 / static_cast<double>(count));
      core::adam_step(params, adam);
    }
    report.epoch_loss.push_back(loss_sum / static_cast<double>(order.size()));
  }
  return report;
}

std::size_t baseline_category(std::span<const ProductEvent> events, CategoryBaseline method) {
  if (events.empty()) throw SequenceError("baseline_category: empty sequence");
  if (method == CategoryBaseline::Latest) return events.back().c3;
  std::map<std::size_t, std::size_t> counts;
  for (const auto& e : events) ++counts[e.c3];
  std::size_t best = counts.begin()->first, best_count = 0;
  for (const auto& [c3, n] : counts) {
    if (n > best_count) {  // ascending keys: ties keep the smallest index
      best = c3;
      best_count = n;
    }
  }
  return best;
}

double hitrate(std::span<const std::size_t> predictions, std::span<const std::size_t> truths) {
  if (predictions.size() != truths.size()) {
    throw DimensionError("hitrate: " + std::to_string(predictions.size()) + " predictions vs " +
                         std::to_string(truths.size()) + " truths");
  }
  if (predictions.empty()) throw DimensionError("hitrate: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) hits += predictions[i] == truths[i];
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

std::vector<double> build_prod_foresight(const ProdForecast& forecast, const core::Tensor& category_table,
                                         std::size_t encoding_positions) {
  const std::size_t k = forecast.distribution.size();
  if (category_table.rows() != k) {
    throw DimensionError("build_prod_foresight: category table has " + std::to_string(category_table.rows()) +
                         " rows, distribution has " + std::to_string(k));
  }
  const std::size_t d = category_table.cols();
  std::vector<double> out(d, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    const double w = forecast.distribution[c];
    for (std::size_t j = 0; j < d; ++j) out[j] += w * category_table.at(c, j);
  }
  const auto& enc = forecast.encoding;
  const std::size_t keep = std::min(enc.rows(), encoding_positions);
  out.insert(out.end(), enc.values().end() - static_cast<std::ptrdiff_t>(keep * enc.cols()), enc.values().end());
  return out;
}

}  // namespace lf::prodfore
