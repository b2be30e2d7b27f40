#include "lf/simgen/io.hpp"

#include <fstream>
#include <functional>
#include <string>

#include "lf/core/errors.hpp"
#include "lf/core/hash.hpp"

namespace lf::simgen {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.filename().string() + ": " + e.what());
  }
}

// Calls `fn` for each line of a JSON Lines file; any failure is reported
// against the file name and 1-based line number.
std::size_t read_lines(const fs::path& path, const std::function<void(const json&)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      throw ParseError(path.filename().string() + " line " + std::to_string(n) + ": " + e.what());
    } catch (const Error& e) {
      throw ParseError(path.filename().string() + " line " + std::to_string(n) + ": " + e.what());
    }
  }
  return n;
}

void expect_count(const fs::path& path, std::size_t got, std::size_t want) {
  if (got != want) {
    throw ParseError(path.filename().string() + " line " + std::to_string(got + 1) + ": expected " +
                     std::to_string(want) + " records, file ends after " + std::to_string(got));
  }
}

json author_json(const AuthorStyle& a) {
  return {{"home_category", a.home_category},
          {"stay_level2", a.stay_level2},
          {"stay_level1", a.stay_level1},
          {"repeat_within_level2", a.repeat_within_level2},
          {"base_rates", a.base_rates}};
}

AuthorStyle author_from(const json& j) {
  AuthorStyle a;
  a.home_category = j.at("home_category");
  a.stay_level2 = j.at("stay_level2");
  a.stay_level1 = j.at("stay_level1");
  a.repeat_within_level2 = j.at("repeat_within_level2");
  a.base_rates = j.at("base_rates").get<std::vector<double>>();
  a.validate();
  return a;
}

}  // namespace

std::string integrity_hash(std::uint64_t seed, const World& world) {
  core::Fnv1a h;
  h.update_u64(seed);
  h.update(world_hash(world));
  return h.hex();
}

void export_dataset(const World& world, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  std::size_t events = 0;
  for (const auto& s : world.streams) events += s.events.size();
  write_json(dir / "manifest.json", {{"seed", world.config.seed},
                                     {"config", world.config},
                                     {"counts",
                                      {{"streams", world.streams.size()},
                                       {"users", world.users.size()},
                                       {"samples", world.dataset.samples.size()},
                                       {"events", events}}},
                                     {"tasks", world.dataset.tasks},
                                     {"vocab", world.dataset.vocab},
                                     {"data_hash", integrity_hash(world.config.seed, world)}});
  write_json(dir / "hierarchy.json", world.hierarchy.to_json());

  auto panels = open_out(dir / "panels.jsonl");
  auto products = open_out(dir / "products.jsonl");
  for (const auto& s : world.streams) {
    json order = json::array(), groups = json::array(), channels = json::object();
    for (std::size_t c = 0; c < s.panel.channel_count(); ++c) {
      const auto& ch = s.panel.channels()[c];
      order.push_back(ch.name);
      groups.push_back(statfore::group_name(ch.group));
      json row = json::array();
      for (std::size_t t = 0; t < s.panel.length(); ++t) row.push_back(s.panel.at(c, t));
      channels[ch.name] = std::move(row);
    }
    json phases = json::array();
    for (auto p : s.path.phases) phases.push_back(static_cast<int>(p));
    panels << json{{"room_id", s.room_id},
                   {"t0_bucket", 0},
                   {"channel_order", order},
                   {"channel_groups", groups},
                   {"channels", channels},
                   {"phases", phases},
                   {"author", author_json(s.author)}}
                  .dump()
           << '\n';
    json ev = json::array();
    for (const auto& e : s.events) ev.push_back({e.product, e.c1, e.c2, e.c3});
    products << json{{"room_id", s.room_id}, {"events", ev}, {"buckets", s.event_buckets}}.dump() << '\n';
  }

  auto users = open_out(dir / "users.jsonl");
  for (std::size_t u = 0; u < world.users.size(); ++u) {
    users << json{{"user_id", u}, {"preference", world.users[u].preference}, {"favourite", world.users[u].favourite}}
                 .dump()
          << '\n';
  }

  auto samples = open_out(dir / "samples.jsonl");
  for (const auto& r : world.dataset.samples) {
    json j;
    const auto f = r.fields();
    for (std::size_t k = 0; k < ranker::kFieldCount; ++k) j[ranker::kFieldNames[k]] = f[k];
    j["room_id"] = r.room_id;
    j["bucket"] = r.bucket;
    j["exposure_weight"] = r.exposure_weight;
    json labels;
    for (std::size_t k = 0; k < world.dataset.tasks.size(); ++k) labels[world.dataset.tasks[k]] = r.labels[k];
    j["labels"] = labels;
    samples << j.dump() << '\n';
  }
  for (auto* out : {&panels, &products, &users, &samples})
    if (!out->flush()) throw IoError("write failed under " + dir.string());
}

Imported import_dataset(const fs::path& dir) {
  Imported result;
  World& w = result.world;
  const json manifest = read_json(dir / "manifest.json");
  std::uint64_t seed = 0;
  std::size_t n_streams = 0, n_users = 0, n_samples = 0;
  try {
    w.config = manifest.at("config").get<SimConfig>();
    seed = manifest.at("seed");
    n_streams = manifest.at("counts").at("streams");
    n_users = manifest.at("counts").at("users");
    n_samples = manifest.at("counts").at("samples");
    w.dataset.tasks = manifest.at("tasks").get<std::vector<std::string>>();
    w.dataset.vocab = manifest.at("vocab").get<std::array<std::size_t, ranker::kFieldCount>>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("manifest.json: ") + e.what());
  }
  try {
    w.hierarchy = prodfore::CategoryHierarchy::from_json(read_json(dir / "hierarchy.json"));
  } catch (const json::exception& e) {
    throw ParseError(std::string("hierarchy.json: ") + e.what());
  }

  const auto panels_path = dir / "panels.jsonl";
  const std::size_t panel_lines = read_lines(panels_path, [&](const json& j) {
    Stream s;
    s.room_id = j.at("room_id");
    std::vector<statfore::Channel> channels;
    const auto& order = j.at("channel_order");
    const auto& groups = j.at("channel_groups");
    const auto& counts = j.at("channels");
    if (groups.size() != order.size() || counts.size() != order.size()) {
      throw ParseError("channel_order, channel_groups and channels disagree in size");
    }
    for (std::size_t c = 0; c < order.size(); ++c)
      channels.push_back({order.at(c).get<std::string>(), statfore::parse_group(groups.at(c).get<std::string>())});
    const std::size_t length = channels.empty() ? 0 : counts.at(channels.front().name).size();
    std::vector<std::int64_t> values;
    for (const auto& ch : channels) {
      const auto& row = counts.at(ch.name);
      if (row.size() != length) throw ParseError("ragged channel series");
      for (const auto& v : row) values.push_back(v.get<std::int64_t>());
    }
    s.panel = statfore::StatPanel(std::move(channels), length, std::move(values));
    for (const auto& p : j.at("phases")) {
      const int k = p.get<int>();
      if (k < 0 || k >= static_cast<int>(kPhaseCount)) throw ParseError("unknown phase " + std::to_string(k));
      s.path.phases.push_back(static_cast<Phase>(k));
    }
    s.path.transition = w.config.transition;
    s.author = author_from(j.at("author"));
    w.streams.push_back(std::move(s));
  });
  expect_count(panels_path, panel_lines, n_streams);

  const auto products_path = dir / "products.jsonl";
  std::size_t index = 0;
  const std::size_t product_lines = read_lines(products_path, [&](const json& j) {
    if (index >= w.streams.size()) throw ParseError("more product lines than panels");
    Stream& s = w.streams[index++];
    if (j.at("room_id").get<std::size_t>() != s.room_id) throw ParseError("room_id does not match panels.jsonl");
    for (const auto& e : j.at("events")) {
      prodfore::ProductEvent ev{e.at(0), e.at(1), e.at(2), e.at(3)};
      w.hierarchy.validate(ev);
      s.events.push_back(ev);
    }
    s.event_buckets = j.at("buckets").get<std::vector<std::size_t>>();
    if (s.event_buckets.size() != s.events.size()) throw ParseError("one bucket per event required");
  });
  expect_count(products_path, product_lines, n_streams);

  const auto users_path = dir / "users.jsonl";
  const std::size_t user_lines = read_lines(users_path, [&](const json& j) {
    if (j.at("user_id").get<std::size_t>() != w.users.size()) throw ParseError("user ids must be consecutive");
    w.users.push_back(User{j.at("preference").get<std::vector<double>>(), j.at("favourite")});
  });
  expect_count(users_path, user_lines, n_users);

  const auto samples_path = dir / "samples.jsonl";
  const std::size_t sample_lines = read_lines(samples_path, [&](const json& j) {
    ranker::RankSample r;
    std::array<std::size_t, ranker::kFieldCount> f{};
    for (std::size_t k = 0; k < ranker::kFieldCount; ++k) f[k] = j.at(ranker::kFieldNames[k]);
    r.user_id = f[ranker::kUser];
    r.user_category = f[ranker::kUserCategory];
    r.author_id = f[ranker::kAuthor];
    r.room_category = f[ranker::kRoomCategory];
    r.category_match = f[ranker::kCategoryMatch];
    r.click_bucket = f[ranker::kClickBucket];
    r.room_id = j.at("room_id");
    r.bucket = j.at("bucket");
    r.exposure_weight = j.at("exposure_weight");
    for (const auto& task : w.dataset.tasks) r.labels.push_back(j.at("labels").at(task).get<int>());
    w.dataset.samples.push_back(std::move(r));
  });
  expect_count(samples_path, sample_lines, n_samples);
  w.dataset.validate();

  // The generator seed is carried in config too; the manifest's top-level copy is what users edit.
  if (integrity_hash(seed, w) != manifest.value("data_hash", std::string())) {
    result.warnings.push_back("integrity: manifest seed " + std::to_string(seed) +
                              " and data hash disagree; files may have been edited or mixed");
  }
  return result;
}

}  // namespace lf::simgen
