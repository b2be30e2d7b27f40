#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "lf/prodfore/hierarchy.hpp"
#include "lf/ranker/sample.hpp"
#include "lf/statfore/panel.hpp"

namespace lf::simgen {

enum class Phase : std::uint8_t { Steady = 0, Highlight = 1, Grab = 2 };
inline constexpr std::size_t kPhaseCount = 3;

using TransitionMatrix = std::array<std::array<double, kPhaseCount>, kPhaseCount>;

struct LabelCoefficients {
  double affinity = 2.0;  // a
  double phase = 1.5;     // b
  double intercept = -2.5;  // c0

  friend bool operator==(const LabelCoefficients&, const LabelCoefficients&) = default;
};

// Every generative constant. Defaults reproduce the audience spikes of
// high-light moments and the category persistence of authors.
struct SimConfig {
  std::uint64_t seed = 1;
  std::size_t streams = 400;
  std::size_t buckets = 320;
  std::size_t users = 100;
  std::size_t exposures = 120000;
  std::size_t context = 32;  // earliest exposure bucket; foresight needs this much history

  std::size_t level1 = 5, level2 = 20, level3 = 100, products = 200;

  TransitionMatrix transition = {{{0.85, 0.10, 0.05}, {0.40, 0.60, 0.00}, {0.60, 0.00, 0.40}}};
  // Per channel (default_channels order): base rate, highlight and grab multipliers.
  std::vector<double> base_rates = {60, 12, 40, 3, 5, 8, 25, 6};
  std::vector<double> highlight_multiplier = {1.6, 4.0, 1.3, 1.2, 2.5, 2.5, 3.0, 1.2};
  std::vector<double> grab_multiplier = {1.3, 1.5, 4.0, 4.0, 1.0, 1.5, 1.2, 5.0};
  double author_rate_spread = 0.4;  // lognormal sigma of per-author rate factors

  std::size_t min_gap = 4, max_gap = 8;  // buckets between product events
  double stay_level2 = 0.6;
  double stay_level1 = 0.3;  // jump probability is the remainder
  double repeat_within_level2 = 0.4;  // else move to the next sibling

  double preference_concentration = 0.6;  // mean Dirichlet alpha over level-1 categories
  double popularity_decay = 0.5;  // level-1 category k gets alpha share decay^k; 1 is symmetric
  std::size_t future_events = 3;
  std::size_t future_buckets = 5;
  LabelCoefficients ctr{2.0, 1.5, -2.7};
  LabelCoefficients cvr{3.0, 3.0, -4.5};
  LabelCoefficients lvtr{2.0, 1.5, -3.5};

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};
void to_json(nlohmann::json& j, const SimConfig& c);
void from_json(const nlohmann::json& j, SimConfig& c);

struct AuthorStyle {
  std::size_t home_category = 0;  // level-1
  double stay_level2 = 0.6;
  double stay_level1 = 0.3;
  double repeat_within_level2 = 0.4;
  std::vector<double> base_rates;  // per channel

  double jump() const { return 1.0 - stay_level2 - stay_level1; }
  void validate() const;

  friend bool operator==(const AuthorStyle&, const AuthorStyle&) = default;
};

struct PhasePath {
  std::vector<Phase> phases;  // one per bucket
  TransitionMatrix transition{};

  friend bool operator==(const PhasePath&, const PhasePath&) = default;
};

struct Stream {
  std::size_t room_id = 0;
  AuthorStyle author;
  statfore::StatPanel panel;
  prodfore::ProductSequence events;
  std::vector<std::size_t> event_buckets;  // bucket each event was emitted in
  PhasePath path;

  // Events emitted strictly before `bucket`.
  std::span<const prodfore::ProductEvent> events_before(std::size_t bucket) const;

  friend bool operator==(const Stream&, const Stream&) = default;
};

struct User {
  std::vector<double> preference;  // over level-1 categories, sums to 1
  std::size_t favourite = 0;

  friend bool operator==(const User&, const User&) = default;
};

// Hidden drivers behind each sample's labels; not exported.
struct SampleTruth {
  double affinity_now = 0.0;     // preference for the product on sale at the exposure
  double future_affinity = 0.0;  // mean preference over the next events
  bool highlight_now = false;
  bool highlight_soon = false;
  bool grab_soon = false;
  Phase previous_phase = Phase::Steady;
};

struct Interactions {
  ranker::RankDataset dataset;
  std::vector<User> users;
  std::vector<SampleTruth> truth;
};

struct World {
  SimConfig config;
  prodfore::CategoryHierarchy hierarchy;
  std::vector<Stream> streams;
  std::vector<User> users;
  ranker::RankDataset dataset;

  friend bool operator==(const World&, const World&) = default;
};

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

AuthorStyle sample_author(const SimConfig& config, std::uint64_t seed);
Stream gen_stream(const AuthorStyle& author, const prodfore::CategoryHierarchy& hierarchy, std::size_t length,
                  std::uint64_t seed, const SimConfig& config = {});
Interactions gen_interactions(std::span<const Stream> streams, std::size_t n_users, std::uint64_t seed,
                              const SimConfig& config = {});
World gen_world(const SimConfig& config);

std::string dataset_hash(const ranker::RankDataset& dataset);
std::string world_hash(const World& world);

}  // namespace lf::simgen
