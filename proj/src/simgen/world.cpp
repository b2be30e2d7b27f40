#include "lf/simgen/world.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "lf/core/errors.hpp"
#include "lf/core/hash.hpp"

namespace lf::simgen {

using prodfore::CategoryHierarchy;
using prodfore::ProductEvent;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 over (seed, index)
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void AuthorStyle::validate() const {
  for (double p : {stay_level2, stay_level1, repeat_within_level2}) {
    if (p < 0.0 || p > 1.0) throw ConfigError("author style: probabilities must lie in [0, 1]");
  }
  if (jump() < -1e-12) throw ConfigError("author style: stay probabilities exceed 1");
  for (double r : base_rates)
    if (!(r > 0.0)) throw ConfigError("author style: channel rates must be positive");
}

std::span<const ProductEvent> Stream::events_before(std::size_t bucket) const {
  const auto n = static_cast<std::size_t>(std::lower_bound(event_buckets.begin(), event_buckets.end(), bucket) -
                                          event_buckets.begin());
  return std::span<const ProductEvent>(events).first(n);
}

namespace {

void validate_config(const SimConfig& c) {
  const std::size_t n = statfore::default_channels().size();
  if (c.base_rates.size() != n || c.highlight_multiplier.size() != n || c.grab_multiplier.size() != n) {
    throw ConfigError("simulator: channel rate vectors need " + std::to_string(n) + " entries");
  }
  for (const auto& row : c.transition) {
    double sum = 0.0;
    for (double p : row) {
      if (p < 0.0) throw ConfigError("simulator: negative transition probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("simulator: transition rows must sum to 1");
  }
  for (const auto* v : {&c.base_rates, &c.highlight_multiplier, &c.grab_multiplier})
    for (double r : *v)
      if (!(r > 0.0)) throw ConfigError("simulator: rates and multipliers must be positive");
  if (c.min_gap == 0 || c.max_gap < c.min_gap) throw ConfigError("simulator: bad product gap range");
  if (!(c.preference_concentration > 0.0)) throw ConfigError("simulator: preference_concentration must be positive");
  if (!(c.popularity_decay > 0.0 && c.popularity_decay <= 1.0)) {
    throw ConfigError("simulator: popularity_decay must lie in (0, 1]");
  }
}

std::size_t uniform_index(std::size_t n, std::mt19937_64& rng) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

Phase next_phase(Phase current, const TransitionMatrix& m, std::mt19937_64& rng) {
  const auto& row = m[static_cast<std::size_t>(current)];
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (std::size_t k = 0; k < kPhaseCount; ++k) {
    acc += row[k];
    if (u < acc) return static_cast<Phase>(k);
  }
  return current;
}

std::size_t next_category(std::size_t c3, const AuthorStyle& author, const CategoryHierarchy& h,
                          std::mt19937_64& rng) {
  const std::size_t c2 = h.parent_of_level3(c3);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (u < author.stay_level2) {
    const double r = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    return r < author.repeat_within_level2 ? c3 : h.next_sibling(c3);
  }
  if (u < author.stay_level2 + author.stay_level1) {
    // another level-2 node of the author's home category
    std::vector<std::size_t> options;
    for (auto c : h.level2_children(author.home_category))
      if (c != c2) options.push_back(c);
    if (options.empty()) options.push_back(c2);
    const auto& leaves = h.level3_children(options[uniform_index(options.size(), rng)]);
    return leaves[uniform_index(leaves.size(), rng)];
  }
  // uniform jump to any leaf outside the current level-2 node
  std::vector<std::size_t> options;
  for (std::size_t c = 0; c < h.level3_size(); ++c)
    if (h.parent_of_level3(c) != c2) options.push_back(c);
  if (options.empty()) return c3;
  return options[uniform_index(options.size(), rng)];
}

double mean_preference(const User& user, std::span<const ProductEvent> events) {
  double sum = 0.0;
  for (const auto& e : events) sum += user.preference[e.c1];
  return sum / static_cast<double>(events.size());
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

AuthorStyle sample_author(const SimConfig& config, std::uint64_t seed) {
  validate_config(config);
  std::mt19937_64 rng(seed);
  AuthorStyle a;
  a.home_category = uniform_index(config.level1, rng);
  a.stay_level2 = config.stay_level2;
  a.stay_level1 = config.stay_level1;
  a.repeat_within_level2 = config.repeat_within_level2;
  std::lognormal_distribution<double> spread(0.0, config.author_rate_spread);
  for (double r : config.base_rates) a.base_rates.push_back(r * spread(rng));
  a.validate();
  return a;
}

Stream gen_stream(const AuthorStyle& author, const CategoryHierarchy& hierarchy, std::size_t length,
                  std::uint64_t seed, const SimConfig& config) {
  validate_config(config);
  author.validate();
  if (length < 48) throw ConfigError("gen_stream: need at least 48 buckets, got " + std::to_string(length));
  if (author.home_category >= hierarchy.level1_size()) throw ConfigError("gen_stream: home category out of range");
  const auto channels = statfore::default_channels();
  if (author.base_rates.size() != channels.size()) throw ConfigError("gen_stream: one base rate per channel required");

  std::mt19937_64 rng(seed);
  Stream s;
  s.author = author;
  s.path.transition = config.transition;
  s.path.phases.resize(length, Phase::Steady);
  for (std::size_t t = 1; t < length; ++t) s.path.phases[t] = next_phase(s.path.phases[t - 1], config.transition, rng);

  std::vector<std::int64_t> counts(channels.size() * length);
  for (std::size_t c = 0; c < channels.size(); ++c) {
    for (std::size_t t = 0; t < length; ++t) {
      double rate = author.base_rates[c];
      if (s.path.phases[t] == Phase::Highlight) rate *= config.highlight_multiplier[c];
      if (s.path.phases[t] == Phase::Grab) rate *= config.grab_multiplier[c];
      counts[c * length + t] = std::poisson_distribution<std::int64_t>(rate)(rng);
    }
  }
  s.panel = statfore::StatPanel(channels, length, std::move(counts));

  std::uniform_int_distribution<std::size_t> gap(config.min_gap, config.max_gap);
  std::size_t bucket = uniform_index(config.max_gap, rng);
  const auto& home_leaves = hierarchy.level2_children(author.home_category);
  const auto& first_leaves = hierarchy.level3_children(home_leaves[uniform_index(home_leaves.size(), rng)]);
  std::size_t c3 = first_leaves[uniform_index(first_leaves.size(), rng)];
  while (bucket < length) {
    const auto& products = hierarchy.products_of(c3);
    s.events.push_back(hierarchy.event_for(products[uniform_index(products.size(), rng)]));
    s.event_buckets.push_back(bucket);
    bucket += gap(rng);
    c3 = next_category(c3, author, hierarchy, rng);
  }
  return s;
}

Interactions gen_interactions(std::span<const Stream> streams, std::size_t n_users, std::uint64_t seed,
                              const SimConfig& config) {
  if (streams.empty()) throw DatasetError("gen_interactions: no streams");
  if (n_users < 50) throw ConfigError("gen_interactions: need at least 50 users");
  std::mt19937_64 rng(seed);
  const std::size_t level1 = config.level1;

  validate_config(config);
  Interactions out;
  // Dirichlet over level-1 categories with mean proportional to decay^k, so
  // some categories appeal to most users.
  std::vector<double> alpha(level1);
  double popularity = 0.0;
  for (std::size_t k = 0; k < level1; ++k) popularity += std::pow(config.popularity_decay, static_cast<double>(k));
  for (std::size_t k = 0; k < level1; ++k) {
    alpha[k] = config.preference_concentration * static_cast<double>(level1) *
               std::pow(config.popularity_decay, static_cast<double>(k)) / popularity;
  }
  for (std::size_t u = 0; u < n_users; ++u) {
    User user;
    double sum = 0.0;
    for (std::size_t k = 0; k < level1; ++k) {
      user.preference.push_back(std::max(std::gamma_distribution<double>(alpha[k], 1.0)(rng), 1e-12));
      sum += user.preference.back();
    }
    for (auto& p : user.preference) p /= sum;
    user.favourite = static_cast<std::size_t>(std::max_element(user.preference.begin(), user.preference.end()) -
                                              user.preference.begin());
    out.users.push_back(std::move(user));
  }

  // Exposure buckets leave `context` buckets of history and enough future
  // for every label.
  std::vector<std::size_t> eligible, last_bucket;
  for (std::size_t s = 0; s < streams.size(); ++s) {
    const auto& st = streams[s];
    const std::size_t len = st.panel.length();
    if (st.events.size() < config.future_events + 1 || len < config.context + config.future_buckets + 1) continue;
    const std::size_t by_events = st.event_buckets[st.events.size() - config.future_events];
    const std::size_t hi = std::min(len - config.future_buckets, by_events);
    if (hi <= config.context) continue;
    eligible.push_back(s);
    last_bucket.push_back(hi - 1);
  }
  if (eligible.empty()) throw DatasetError("gen_interactions: no stream is long enough to host exposures");

  auto& ds = out.dataset;
  ds.tasks = {"ctr", "cvr", "lvtr"};
  std::size_t max_room = 0;
  for (const auto& st : streams) max_room = std::max(max_room, st.room_id);
  ds.vocab = {n_users, level1, max_room + 1, level1, 2, 4};

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < config.exposures; ++i) {
    const std::size_t pick = uniform_index(eligible.size(), rng);
    const Stream& st = streams[eligible[pick]];
    const std::size_t t = std::uniform_int_distribution<std::size_t>(config.context, last_bucket[pick])(rng);
    const std::size_t u = uniform_index(n_users, rng);
    const User& user = out.users[u];

    SampleTruth truth;
    const auto before = st.events_before(t + 1);  // product on sale at t is the latest one emitted
    truth.affinity_now = user.preference[before.back().c1];
    const std::size_t next = before.size();
    truth.future_affinity =
        mean_preference(user, std::span<const ProductEvent>(st.events).subspan(next, config.future_events));
    truth.highlight_now = st.path.phases[t] == Phase::Highlight;
    truth.previous_phase = st.path.phases[t - 1];
    for (std::size_t k = t; k < t + config.future_buckets; ++k) {
      truth.grab_soon = truth.grab_soon || st.path.phases[k] == Phase::Grab;
      truth.highlight_soon = truth.highlight_soon || st.path.phases[k] == Phase::Highlight;
    }

    ranker::RankSample r;
    r.user_id = u;
    r.user_category = user.favourite;
    r.author_id = st.room_id;
    r.room_category = st.author.home_category;
    r.category_match = user.favourite == st.author.home_category ? 1 : 0;
    r.click_bucket = std::min<std::size_t>(
        3, std::poisson_distribution<std::size_t>(3.0 * user.preference[st.author.home_category])(rng));
    r.room_id = st.room_id;
    r.bucket = t;
    r.exposure_weight = 1.0;
    const double p_ctr = sigmoid(config.ctr.affinity * truth.affinity_now + config.ctr.phase * truth.highlight_now +
                                 config.ctr.intercept);
    const double p_cvr = sigmoid(config.cvr.affinity * truth.future_affinity + config.cvr.phase * truth.grab_soon +
                                 config.cvr.intercept);
    const double p_lvtr = sigmoid(config.lvtr.affinity * truth.future_affinity +
                                  config.lvtr.phase * truth.highlight_soon + config.lvtr.intercept);
    r.labels = {unit(rng) < p_ctr, unit(rng) < p_cvr, unit(rng) < p_lvtr};
    ds.samples.push_back(std::move(r));
    out.truth.push_back(truth);
  }
  return out;
}

World gen_world(const SimConfig& config) {
  validate_config(config);
  World w;
  w.config = config;
  w.hierarchy = CategoryHierarchy::blocks(config.level1, config.level2, config.level3, config.products);
  for (std::size_t i = 0; i < config.streams; ++i) {
    auto author = sample_author(config, derive_seed(config.seed, 2 * i));
    auto stream = gen_stream(author, w.hierarchy, config.buckets, derive_seed(config.seed, 2 * i + 1), config);
    stream.room_id = i;
    w.streams.push_back(std::move(stream));
  }
  auto inter = gen_interactions(w.streams, config.users, derive_seed(config.seed, 0xfeedULL << 20), config);
  w.users = std::move(inter.users);
  w.dataset = std::move(inter.dataset);
  return w;
}

std::string dataset_hash(const ranker::RankDataset& dataset) {
  core::Fnv1a h;
  for (const auto& t : dataset.tasks) h.update(t + ";");
  for (auto v : dataset.vocab) h.update_u64(v);
  for (const auto& s : dataset.samples) {
    for (auto f : s.fields()) h.update_u64(f);
    h.update_u64(s.room_id);
    h.update_u64(s.bucket);
    const double w[] = {s.exposure_weight};
    h.update(w);
    for (int y : s.labels) h.update_u64(static_cast<std::uint64_t>(y));
  }
  return h.hex();
}

std::string world_hash(const World& world) {
  core::Fnv1a h;
  h.update(world.hierarchy.to_json().dump());
  for (const auto& s : world.streams) {
    h.update_u64(s.room_id);
    for (auto v : s.panel.values()) h.update_u64(static_cast<std::uint64_t>(v));
    for (const auto& e : s.events) {
      for (auto v : {e.product, e.c1, e.c2, e.c3}) h.update_u64(v);
    }
    for (auto b : s.event_buckets) h.update_u64(b);
    for (auto p : s.path.phases) h.update_u64(static_cast<std::uint64_t>(p));
  }
  for (const auto& u : world.users) h.update(u.preference);
  h.update(dataset_hash(world.dataset));
  return h.hex();
}

}  // namespace lf::simgen

namespace lf::simgen {

void to_json(nlohmann::json& j, const SimConfig& c) {
  auto coeff = [](const LabelCoefficients& l) { return nlohmann::json::array({l.affinity, l.phase, l.intercept}); };
  j = nlohmann::json{{"seed", c.seed},
                     {"streams", c.streams},
                     {"buckets", c.buckets},
                     {"users", c.users},
                     {"exposures", c.exposures},
                     {"context", c.context},
                     {"level_sizes", {c.level1, c.level2, c.level3, c.products}},
                     {"transition", c.transition},
                     {"base_rates", c.base_rates},
                     {"highlight_multiplier", c.highlight_multiplier},
                     {"grab_multiplier", c.grab_multiplier},
                     {"author_rate_spread", c.author_rate_spread},
                     {"gap", {c.min_gap, c.max_gap}},
                     {"stay_level2", c.stay_level2},
                     {"stay_level1", c.stay_level1},
                     {"repeat_within_level2", c.repeat_within_level2},
                     {"preference_concentration", c.preference_concentration},
                     {"popularity_decay", c.popularity_decay},
                     {"future_events", c.future_events},
                     {"future_buckets", c.future_buckets},
                     {"ctr", coeff(c.ctr)},
                     {"cvr", coeff(c.cvr)},
                     {"lvtr", coeff(c.lvtr)}};
}

void from_json(const nlohmann::json& j, SimConfig& c) {
  try {
    SimConfig d;
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    get("seed", d.seed);
    get("streams", d.streams);
    get("buckets", d.buckets);
    get("users", d.users);
    get("exposures", d.exposures);
    get("context", d.context);
    if (j.contains("level_sizes")) {
      const auto& s = j.at("level_sizes");
      d.level1 = s.at(0);
      d.level2 = s.at(1);
      d.level3 = s.at(2);
      d.products = s.at(3);
    }
    get("transition", d.transition);
    get("base_rates", d.base_rates);
    get("highlight_multiplier", d.highlight_multiplier);
    get("grab_multiplier", d.grab_multiplier);
    get("author_rate_spread", d.author_rate_spread);
    if (j.contains("gap")) {
      d.min_gap = j.at("gap").at(0);
      d.max_gap = j.at("gap").at(1);
    }
    get("stay_level2", d.stay_level2);
    get("stay_level1", d.stay_level1);
    get("repeat_within_level2", d.repeat_within_level2);
    get("preference_concentration", d.preference_concentration);
    get("popularity_decay", d.popularity_decay);
    get("future_events", d.future_events);
    get("future_buckets", d.future_buckets);
    for (auto [key, field] : {std::pair{"ctr", &d.ctr}, std::pair{"cvr", &d.cvr}, std::pair{"lvtr", &d.lvtr}}) {
      if (!j.contains(key)) continue;
      const auto& a = j.at(key);
      *field = LabelCoefficients{a.at(0), a.at(1), a.at(2)};
    }
    c = std::move(d);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("simulator config: ") + e.what());
  }
}

}  // namespace lf::simgen
