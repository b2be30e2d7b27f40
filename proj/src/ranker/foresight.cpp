#include "lf/ranker/foresight.hpp"

#include <algorithm>
#include <string>

#include "lf/core/errors.hpp"

namespace lf::ranker {

const ForesightVector& ForesightCache::at(std::size_t room, std::size_t bucket) const {
  auto it = entries_.find({room, bucket});
  if (it == entries_.end()) {
    throw IndexError("no foresight cached for room " + std::to_string(room) + " at bucket " + std::to_string(bucket));
  }
  return it->second;
}

std::vector<double> StatPart::flat() const {
  std::vector<double> out(forecast);
  out.insert(out.end(), encoding.begin(), encoding.end());
  return out;
}

StatPart stat_features(const core::Tensor& predicted, const core::Tensor* encoding,
                       const std::vector<statfore::Channel>& channels, const StatFeatureOptions& options) {
  if (predicted.rows() != channels.size()) throw DimensionError("stat features: one prediction row per channel required");
  std::vector<std::size_t> steps = options.steps;
  if (steps.empty())
    for (std::size_t s = 1; s <= options.horizon; ++s) steps.push_back(s);
  for (auto s : steps)
    if (s == 0 || s > predicted.cols()) throw ConfigError("stat features: lead " + std::to_string(s) + " out of range");
  std::vector<std::size_t> rows;
  for (std::size_t c = 0; c < channels.size(); ++c)
    if (!options.group || channels[c].group == *options.group) rows.push_back(c);
  StatPart out;
  for (auto c : rows)
    for (auto s : steps) out.forecast.push_back(predicted.at(c, s - 1));
  if (options.encoding && encoding != nullptr) {
    for (auto c : rows)
      for (std::size_t j = 0; j < encoding->cols(); ++j) out.encoding.push_back(encoding->at(c, j));
  }
  return out;
}

ProdPart prod_features(const core::Tensor& distribution, const core::Tensor* encoding, std::size_t positions) {
  ProdPart part;
  part.distribution.assign(distribution.values().begin(), distribution.values().end());
  if (encoding != nullptr && positions > 0) {
    const std::size_t d = encoding->cols();
    const std::size_t keep = std::min(positions, encoding->rows());
    part.encoding.assign((positions - keep) * d, 0.0);
    const auto vals = encoding->values();
    part.encoding.insert(part.encoding.end(), vals.end() - static_cast<std::ptrdiff_t>(keep * d), vals.end());
  }
  return part;
}

StatPart stat_foresight(const RoomHistory& room, std::size_t bucket, std::size_t context,
                        const statfore::StatisticModel* model, const StatFeatureOptions& options) {
  if (room.panel == nullptr) throw ConfigError("stat foresight: room has no panel");
  if (bucket < context || bucket > room.panel->length()) {
    throw WindowError("stat foresight: bucket " + std::to_string(bucket) + " leaves fewer than " +
                      std::to_string(context) + " buckets of history");
  }
  const core::Tensor window = room.panel->window(bucket - context, context);
  if (options.baseline) {
    return stat_features(statfore::baseline_forecast(window, *options.baseline, options.horizon), nullptr,
                         room.panel->channels(), options);
  }
  if (model == nullptr) throw ConfigError("stat foresight: no statistic model");
  const auto f = statfore::forecast_statistic(window, *model, options.horizon);
  return stat_features(f.predicted, &f.encoding, room.panel->channels(), options);
}

ProdPart prod_foresight(const RoomHistory& room, std::size_t bucket, const prodfore::ProductModel* model,
                        std::size_t categories, const ProdFeatureOptions& options) {
  const auto n = static_cast<std::size_t>(
      std::lower_bound(room.event_buckets.begin(), room.event_buckets.end(), bucket) - room.event_buckets.begin());
  const auto events = room.events.first(n);
  if (events.empty()) throw SequenceError("prod foresight: no product before bucket " + std::to_string(bucket));
  if (options.baseline) {
    core::Tensor onehot = core::Tensor::vector(std::vector<double>(categories, 0.0));
    onehot[prodfore::baseline_category(events, *options.baseline)] = 1.0;
    return prod_features(onehot, nullptr, 0);
  }
  if (model == nullptr) throw ConfigError("prod foresight: no product model");
  const auto f = prodfore::forecast_product(events, *model);
  return prod_features(f.distribution, options.encoding ? &f.encoding : nullptr, model->config().encoding_positions);
}

ForesightCache build_foresight_cache(std::span<const RankSample> samples, std::span<const RoomHistory> rooms,
                                     const ForesightSources& src) {
  if (src.with_stat && !src.stat_options.baseline) {
    if (src.stat == nullptr) throw ConfigError("foresight cache: statistic features need a statistic model");
    if (!src.stat->frozen()) throw ContractError("foresight cache: statistic model must be frozen");
  }
  if (src.with_prod && !src.prod_options.baseline) {
    if (src.prod == nullptr) throw ConfigError("foresight cache: product features need a product model");
    if (!src.prod->frozen()) throw ContractError("foresight cache: product model must be frozen");
  }
  const std::size_t context = src.stat ? src.stat->config().context : src.stat_context;
  const std::size_t categories = src.prod ? src.prod->hierarchy().level3_size() : src.categories;
  ForesightCache cache;
  for (const auto& s : samples) {
    if (cache.contains(s.room_id, s.bucket)) continue;
    if (s.room_id >= rooms.size()) throw IndexError("foresight cache: unknown room " + std::to_string(s.room_id));
    const RoomHistory& room = rooms[s.room_id];
    ForesightVector v;
    if (src.with_stat) v.stat = stat_foresight(room, s.bucket, context, src.stat, src.stat_options);
    if (src.with_prod) v.prod = prod_foresight(room, s.bucket, src.prod, categories, src.prod_options);
    cache.put(s.room_id, s.bucket, std::move(v));
  }
  return cache;
}

}  // namespace lf::ranker
