#include <doctest.h>

#include <cmath>
#include <numeric>

#include "lf/core/checkpoint.hpp"
#include "lf/core/errors.hpp"
#include "lf/core/grad_check.hpp"
#include "lf/core/ops.hpp"
#include "lf/core/tape.hpp"
#include "lf/ranker/model.hpp"
#include "lf/simgen/world.hpp"
#include "support.hpp"

using namespace lf;
using namespace lf::ranker;
using core::Tensor;

namespace {

const std::vector<std::string> kTasks = {"ctr", "cvr"};
const std::array<std::size_t, kFieldCount> kVocab = {5, 3, 4, 3, 2, 4};

RankConfig tiny_config() {
  RankConfig c;
  c.embed = 4;
  c.hidden = 6;
  c.category_width = 3;
  c.batch = 32;
  c.seed = 11;
  return c;
}

RankSample sample(std::size_t user, std::size_t author) {
  RankSample s;
  s.user_id = user;
  s.user_category = user % 3;
  s.author_id = author;
  s.room_category = author % 3;
  s.category_match = s.user_category == s.room_category;
  s.click_bucket = (user + author) % 4;
  s.labels = {static_cast<int>(s.category_match), 0};
  return s;
}

ForesightVector foresight(std::size_t forecast, std::size_t encoding, std::size_t categories, std::size_t prod_enc,
                          double fill) {
  ForesightVector v;
  v.stat = StatPart{std::vector<double>(forecast, fill), std::vector<double>(encoding, -fill)};
  ProdPart p;
  p.distribution.assign(categories, 1.0 / static_cast<double>(categories));
  p.encoding.assign(prod_enc, fill);
  v.prod = p;
  return v;
}

simgen::SimConfig tiny_world_config() {
  simgen::SimConfig c;
  c.seed = 4;
  c.streams = 12;
  c.buckets = 48;
  c.users = 50;
  c.exposures = 1500;
  c.context = 8;
  c.level1 = 2;
  c.level2 = 4;
  c.level3 = 8;
  c.products = 16;
  return c;
}

}  // namespace

TEST_CASE("variant names round trip") {
  for (auto v : kAllVariants) CHECK(parse_variant(variant_name(v)) == v);
  CHECK(parse_variant("both") == Variant::Both);
  CHECK_THROWS_AS(parse_variant("all"), ConfigError);
}

TEST_CASE("input widths are additive over foresight parts") {
  const ForesightLayout stat{6, 8, 0, 0}, prod{0, 0, 5, 4}, both{6, 8, 5, 4};
  RankerModel base(tiny_config(), kTasks, kVocab, Variant::Base, {});
  RankerModel s(tiny_config(), kTasks, kVocab, Variant::Stat, stat);
  RankerModel p(tiny_config(), kTasks, kVocab, Variant::Prod, prod);
  RankerModel b(tiny_config(), kTasks, kVocab, Variant::Both, both);
  CHECK(base.input_width() == 4 * kFieldCount);
  CHECK(s.input_width() == base.input_width() + 14);
  CHECK(p.input_width() == base.input_width() + 3 + 4);
  CHECK(b.input_width() + base.input_width() == s.input_width() + p.input_width());
  CHECK(layout_of(foresight(6, 8, 5, 4, 1.0), Variant::Both) == both);
  CHECK(layout_of(foresight(6, 8, 5, 4, 1.0), Variant::Base) == ForesightLayout{});
}

TEST_CASE("foresight columns follow the base features") {
  RankerModel base(tiny_config(), kTasks, kVocab, Variant::Base, {});
  RankerModel stat(tiny_config(), kTasks, kVocab, Variant::Stat, {2, 0, 0, 0});
  for (const auto& name : base.params().names())
    if (name.starts_with("rank.emb.")) stat.mutable_params().mutable_value(name) = base.params().value(name);
  ForesightVector zero;
  zero.stat = StatPart{{0.0, 0.0}, {}};
  const auto a = assemble_input(base, sample(1, 2), zero);
  const auto b = assemble_input(stat, sample(1, 2), zero);
  REQUIRE(a.size() == base.input_width());
  REQUIRE(b.size() == stat.input_width());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("a variant without its foresight part is a configuration error") {
  RankerModel stat(tiny_config(), kTasks, kVocab, Variant::Stat, {2, 0, 0, 0});
  CHECK_THROWS_AS(assemble_input(stat, sample(0, 0), ForesightVector{}), ConfigError);
  ForesightVector only_stat;
  only_stat.stat = StatPart{{1.0, 2.0}, {}};
  CHECK_THROWS_AS(layout_of(only_stat, Variant::Prod), ConfigError);
}

TEST_CASE("rank_forward range, zero weights and width check") {
  RankerModel m(tiny_config(), kTasks, kVocab, Variant::Base, {});
  const auto in = assemble_input(m, sample(3, 1), ForesightVector{});
  const auto p = rank_forward(in.reshaped({1, in.size()}), m.params());
  REQUIRE(p.size() == 2);
  for (double v : p.values()) CHECK((v > 0.0 && v < 1.0));
  auto zeros = m.params();
  for (auto& [name, param] : zeros.entries()) param.value.fill(0.0);
  const auto half = rank_forward(in.reshaped({1, in.size()}), zeros);
  for (double v : half.values()) CHECK(v == 0.5);
  CHECK_THROWS_AS(rank_forward(Tensor({1, 3}), m.params()), DimensionError);
}

TEST_CASE("ranker gradients pass the oracle, category table included") {
  RankerModel m(tiny_config(), kTasks, kVocab, Variant::Both, {2, 3, 4, 2});
  std::vector<RankSample> samples;
  std::vector<ForesightVector> fvs;
  for (std::size_t i = 0; i < 4; ++i) {
    samples.push_back(sample(i, (i * 3) % 4));
    auto v = foresight(2, 3, 4, 2, 0.3 * static_cast<double>(i) - 0.5);
    v.prod->distribution = {0.1 * static_cast<double>(i), 0.5, 0.2, 0.3 - 0.1 * static_cast<double>(i)};
    v.stat->forecast[1] = static_cast<double>(i * i);
    fvs.push_back(v);
  }
  std::vector<const RankSample*> sp;
  std::vector<const ForesightVector*> fp;
  for (std::size_t i = 0; i < 4; ++i) {
    sp.push_back(&samples[i]);
    fp.push_back(&fvs[i]);
  }
  m.fit_inputs(fp);
  const Tensor labels = Tensor::matrix(4, 2, {1, 0, 0, 1, 1, 1, 0, 0});
  auto loss = [&](core::Tape& tape, const core::ParamStore& p) {
    return core::sigmoid_bce(m.logits(tape, p, m.assemble(tape, p, sp, fp)), labels);
  };
  const auto r = core::grad_check(loss, m.params());
  CHECK(r.max_relative_error < 1e-4);
  CHECK(r.coordinates_checked >= 64);
}

TEST_CASE("rank_loss examples") {
  CHECK(rank_loss(Tensor::matrix(1, 1, {0.5}), {{1}}) == doctest::Approx(std::log(2.0)));
  CHECK(rank_loss(Tensor::matrix(2, 1, {1.0, 0.0}), {{1}, {0}}) < 1e-6);
  const double a = rank_loss(Tensor::matrix(1, 1, {0.3}), {{1}});
  const double b = rank_loss(Tensor::matrix(1, 1, {0.8}), {{0}});
  CHECK(rank_loss(Tensor::matrix(1, 2, {0.3, 0.8}), {{1, 0}}) == doctest::Approx(a + b).epsilon(1e-12));
  CHECK_THROWS_AS(rank_loss(Tensor::matrix(1, 1, {0.5}), {{2}}), LabelError);
}

TEST_CASE("standardizer unit blocks") {
  const std::vector<std::vector<double>> rows = {{0.0, 10.0}, {2.0, 30.0}};
  const auto plain = Standardizer::fit(rows, 2);
  const auto unit = Standardizer::fit(rows, 2, true);
  std::vector<double> out(2), out_unit(2);
  plain.apply(rows[1], out);
  unit.apply(rows[1], out_unit);
  CHECK(out[0] == doctest::Approx(1.0));
  CHECK(out[1] == doctest::Approx(1.0));
  CHECK(out_unit[0] == doctest::Approx(1.0 / std::sqrt(2.0)));
  std::vector<double> wrong(3);
  CHECK_THROWS_AS(plain.apply(wrong, out), DimensionError);
}

TEST_CASE("base ranker trains without foresight models and reduces its loss") {
  const auto world = simgen::gen_world(tiny_world_config());
  std::vector<std::size_t> train, eval;
  for (std::size_t i = 0; i < world.dataset.samples.size(); ++i) (i % 5 == 0 ? eval : train).push_back(i);
  auto cfg = tiny_config();
  cfg.epochs = 5;
  const auto r = train_ranker(world.dataset, train, eval, nullptr, Variant::Base, cfg);
  CHECK(r.epoch_loss.back() < r.epoch_loss.front());
  REQUIRE(r.metrics.size() == world.dataset.tasks.size());
  for (const auto& m : r.metrics) CHECK((m.auc >= 0.0 && m.auc <= 1.0));
}

TEST_CASE("ranker training leaves frozen foresight models untouched") {
  const auto world = simgen::gen_world(tiny_world_config());
  statfore::StatConfig sc;
  sc.context = 8;
  sc.width = 8;
  sc.blocks = 1;
  sc.heads = 2;
  sc.ffn_hidden = 8;
  statfore::StatisticModel stat(sc, world.streams.front().panel.channel_count());
  prodfore::ProdConfig pc;
  pc.width = 8;
  pc.blocks = 1;
  pc.heads = 2;
  pc.ffn_hidden = 8;
  pc.encoding_positions = 2;
  prodfore::ProductModel prod(pc, world.hierarchy);

  std::vector<RoomHistory> rooms;
  for (const auto& s : world.streams) rooms.push_back({&s.panel, s.events, s.event_buckets});
  std::vector<std::size_t> train, eval;
  for (std::size_t i = 0; i < world.dataset.samples.size(); ++i) (i % 4 == 0 ? eval : train).push_back(i);
  auto cfg = tiny_config();
  cfg.epochs = 3;  // ~100 optimizer steps

  CHECK_THROWS_AS(train_ranker(world.dataset, train, eval, rooms, &stat, &prod, Variant::Both, cfg), ContractError);

  stat.freeze();
  prod.freeze();
  const auto dir = test_support::scratch_dir("disentangle");
  stat.save(dir / "stat_before.ckpt");
  prod.save(dir / "prod_before.ckpt");
  const auto r = train_ranker(world.dataset, train, eval, rooms, &stat, &prod, Variant::Both, cfg);
  CHECK(r.model.params().step() >= 100);
  stat.save(dir / "stat_after.ckpt");
  prod.save(dir / "prod_after.ckpt");
  CHECK(test_support::same_bytes(dir / "stat_before.ckpt", dir / "stat_after.ckpt"));
  CHECK(test_support::same_bytes(dir / "prod_before.ckpt", dir / "prod_after.ckpt"));

  RankerModel untrained(cfg, world.dataset.tasks, world.dataset.vocab, Variant::Both, r.model.layout());
  CHECK(untrained.params().value("rank.cat_table") != r.model.params().value("rank.cat_table"));
  for (const auto& name : r.model.params().names()) {
    CHECK(name.starts_with("rank."));
  }
}
