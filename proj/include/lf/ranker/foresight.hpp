#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "lf/prodfore/model.hpp"
#include "lf/ranker/sample.hpp"
#include "lf/statfore/model.hpp"

namespace lf::ranker {

struct StatPart {
  std::vector<double> forecast;  // kept leads of the kept channels, channel-major
  std::vector<double> encoding;  // their channel encodings, possibly empty

  std::vector<double> flat() const;  // forecast then encoding
};

struct ProdPart {
  std::vector<double> distribution;  // next finest-category probabilities
  std::vector<double> encoding;      // last K_enc encoding rows, zero-padded at the front
};

// Foresight for one (room, bucket). A part the variant does not use may be absent.
struct ForesightVector {
  std::optional<StatPart> stat;
  std::optional<ProdPart> prod;
};

// What a room looked like up to some bucket.
struct RoomHistory {
  const statfore::StatPanel* panel = nullptr;
  std::span<const prodfore::ProductEvent> events;
  std::span<const std::size_t> event_buckets;
};

struct StatFeatureOptions {
  std::size_t horizon = 5;
  std::vector<std::size_t> steps;  // 1-based lead times kept; empty keeps 1..horizon
  bool encoding = true;
  std::optional<statfore::ChannelGroup> group;  // keep only this group's channel rows
  std::optional<statfore::BaselineMethod> baseline;  // forecast with a baseline instead of the model
};

struct ProdFeatureOptions {
  bool encoding = true;
  std::optional<prodfore::CategoryBaseline> baseline;  // one-hot baseline category instead of the model
};

class ForesightCache {
 public:
  using Key = std::pair<std::size_t, std::size_t>;  // room, bucket

  void put(std::size_t room, std::size_t bucket, ForesightVector v) { entries_[{room, bucket}] = std::move(v); }
  bool contains(std::size_t room, std::size_t bucket) const { return entries_.count({room, bucket}) != 0; }
  const ForesightVector& at(std::size_t room, std::size_t bucket) const;
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::map<Key, ForesightVector> entries_;
};

// Feature layout from forecasts already computed: predictions for the kept
// leads of the kept channels, then (if given and wanted) their encodings.
StatPart stat_features(const core::Tensor& predicted, const core::Tensor* encoding,
                       const std::vector<statfore::Channel>& channels, const StatFeatureOptions& options);
// Distribution plus the last `positions` encoding rows (zero-padded at the
// front); `encoding` may be null.
ProdPart prod_features(const core::Tensor& distribution, const core::Tensor* encoding, std::size_t positions);

// Statistic foresight from buckets [bucket - W, bucket) of the room.
StatPart stat_foresight(const RoomHistory& room, std::size_t bucket, std::size_t context,
                        const statfore::StatisticModel* model, const StatFeatureOptions& options);
// Product foresight from events emitted before `bucket`.
ProdPart prod_foresight(const RoomHistory& room, std::size_t bucket, const prodfore::ProductModel* model,
                        std::size_t categories, const ProdFeatureOptions& options);

struct ForesightSources {
  const statfore::StatisticModel* stat = nullptr;
  const prodfore::ProductModel* prod = nullptr;
  std::size_t stat_context = 32;   // used when stat features come from a baseline
  std::size_t categories = 0;      // |C3|, used when prod features come from a baseline
  std::size_t encoding_positions = 8;
  std::size_t encoding_width = 32;
  StatFeatureOptions stat_options;
  ProdFeatureOptions prod_options;
  bool with_stat = false;
  bool with_prod = false;
};

// One entry per distinct (room, bucket) among the samples. Model-backed parts
// require frozen models (ContractError otherwise).
ForesightCache build_foresight_cache(std::span<const RankSample> samples, std::span<const RoomHistory> rooms,
                                     const ForesightSources& sources);

}  // namespace lf::ranker
