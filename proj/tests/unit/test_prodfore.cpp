#include <doctest.h>

#include <cmath>
#include <numeric>

#include "lf/core/checkpoint.hpp"
#include "lf/core/errors.hpp"
#include "lf/core/grad_check.hpp"
#include "lf/core/ops.hpp"
#include "lf/core/tape.hpp"
#include "lf/prodfore/model.hpp"
#include "support.hpp"

using namespace lf;
using namespace lf::prodfore;
using core::Tensor;

namespace {

// 2 level-1, 4 level-2, 8 level-3 nodes, 16 products.
CategoryHierarchy small_tree() { return CategoryHierarchy::blocks(2, 4, 8, 16); }

ProdConfig tiny_config() {
  ProdConfig c;
  c.width = 8;
  c.blocks = 1;
  c.heads = 2;
  c.ffn_hidden = 8;
  c.max_context = 16;
  c.encoding_positions = 2;
  c.batch = 4;
  c.seed = 5;
  return c;
}

ProductSequence sequence_of(const CategoryHierarchy& h, std::initializer_list<std::size_t> products) {
  ProductSequence s;
  for (auto p : products) s.push_back(h.event_for(p));
  return s;
}

double sum(const Tensor& t) { return std::accumulate(t.values().begin(), t.values().end(), 0.0); }

}  // namespace

TEST_CASE("block hierarchy is consistent") {
  const auto h = small_tree();
  CHECK(h.level3_size() == 8);
  for (std::size_t p = 0; p < h.product_count(); ++p) CHECK_NOTHROW(h.validate(h.event_for(p)));
  auto bad = h.event_for(0);
  bad.c3 = 7;
  CHECK_THROWS_AS(h.validate(bad), SequenceError);
  bad.c3 = 8;
  CHECK_THROWS_WITH_AS(h.validate(bad), doctest::Contains("level-3"), IndexError);
  CHECK(CategoryHierarchy::from_json(h.to_json()) == h);
  CHECK(h.parent_of_level3(h.next_sibling(3)) == h.parent_of_level3(3));
  CHECK(h.next_sibling(3) != 3);
}

TEST_CASE("embedding shapes and identical events") {
  ProductModel model(tiny_config(), small_tree());
  const auto& h = model.hierarchy();
  CHECK(embed_sequence(sequence_of(h, {3}), model).shape() == core::Shape{1, 32});
  const auto t = embed_sequence(sequence_of(h, {5, 5}), model);
  for (std::size_t c = 0; c < 32; ++c) CHECK(t.at(0, c) == t.at(1, c));
  ProductSequence bad = {ProductEvent{99, 0, 0, 0}};
  CHECK_THROWS_WITH_AS(embed_sequence(bad, model), doctest::Contains("product id 99"), IndexError);
}

TEST_CASE("embedding gradient touches only looked-up rows") {
  ProductModel model(tiny_config(), small_tree());
  const auto events = sequence_of(model.hierarchy(), {1, 6});
  core::Tape tape;
  auto emb = model.embed(tape, model.params(), events);
  auto loss = core::mse_loss(emb, Tensor(emb.value().shape(), 1.0));
  tape.backward(loss);
  core::ParamStore grads = model.params();
  grads.zero_grad();
  tape.accumulate_into(grads);
  const auto& g = grads.grad("prod.emb.product");
  for (std::size_t r = 0; r < g.rows(); ++r) {
    double norm = 0.0;
    for (std::size_t c = 0; c < g.cols(); ++c) norm += std::abs(g.at(r, c));
    if (r == 1 || r == 6) {
      CHECK(norm > 0.0);
    } else {
      CHECK(norm == 0.0);
    }
  }
}

TEST_CASE("product_forward shapes and causal encodings") {
  ProductModel model(tiny_config(), small_tree());
  const auto& h = model.hierarchy();
  const auto short_seq = sequence_of(h, {1, 2, 9});
  const auto long_seq = sequence_of(h, {1, 2, 9, 14});
  const auto a = product_forward(short_seq, model), b = product_forward(long_seq, model);
  CHECK(a.logits.size() == h.level3_size());
  CHECK(a.encoding.shape() == core::Shape{3, 8});
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 8; ++c) CHECK(a.encoding.at(r, c) == b.encoding.at(r, c));
  CHECK(a.logits != b.logits);
}

TEST_CASE("product_forward truncates to max_context") {
  auto cfg = tiny_config();
  cfg.max_context = 4;
  ProductModel model(cfg, small_tree());
  const auto& h = model.hierarchy();
  const auto full = sequence_of(h, {0, 1, 2, 3, 4, 5});
  const auto tail = sequence_of(h, {2, 3, 4, 5});
  CHECK(product_forward(full, model).logits == product_forward(tail, model).logits);
  CHECK(product_forward(full, model).encoding.rows() == 4);
}

TEST_CASE("product model gradients pass the oracle") {
  ProductModel model(tiny_config(), small_tree());
  const auto events = sequence_of(model.hierarchy(), {1, 5, 9, 12});
  const std::size_t labels[] = {2, 4, 6, 1};
  auto loss = [&](core::Tape& tape, const core::ParamStore& p) {
    return core::softmax_cross_entropy(model.forward(tape, p, events).logits, labels);
  };
  CHECK(core::grad_check(loss, model.params()).max_relative_error < 1e-4);
}

TEST_CASE("alternating sequence is memorised") {
  auto cfg = tiny_config();
  cfg.epochs = 100;
  cfg.lr = 3e-3;
  ProductModel model(cfg, small_tree());
  const auto& h = model.hierarchy();
  std::vector<ProductSequence> data = {sequence_of(h, {0, 8, 0, 8, 0, 8, 0, 8, 0, 8, 0, 8})};
  const auto report = train_product(model, data);
  CHECK(report.epoch_loss.back() < 0.05);
  CHECK(report.epoch_loss[29] < report.epoch_loss[0]);
  const auto after_a = forecast_product(sequence_of(h, {0, 8, 0}), model);
  const auto after_b = forecast_product(sequence_of(h, {0, 8, 0, 8}), model);
  CHECK(after_a.top1 == h.category_of_product(8));
  CHECK(after_b.top1 == h.category_of_product(0));
}

TEST_CASE("training skips short sequences and fails when nothing is usable") {
  auto cfg = tiny_config();
  cfg.epochs = 1;
  ProductModel model(cfg, small_tree());
  const auto& h = model.hierarchy();
  std::vector<ProductSequence> data = {sequence_of(h, {1}), sequence_of(h, {1, 2, 3})};
  const auto report = train_product(model, data);
  CHECK(report.skipped == 1);
  CHECK(report.used == 1);
  ProductModel fresh(cfg, small_tree());
  std::vector<ProductSequence> none = {sequence_of(h, {1})};
  CHECK_THROWS_AS(train_product(fresh, none), DatasetError);
}

TEST_CASE("forecast_product is a pure distribution over level-3 categories") {
  ProductModel model(tiny_config(), small_tree());
  const auto events = sequence_of(model.hierarchy(), {3, 7, 11});
  const auto a = forecast_product(events, model), b = forecast_product(events, model);
  CHECK(a.distribution.size() == model.hierarchy().level3_size());
  CHECK(std::abs(sum(a.distribution) - 1.0) < 1e-9);
  for (double p : a.distribution.values()) CHECK(p >= 0.0);
  CHECK(a.distribution == b.distribution);
  CHECK(a.encoding == b.encoding);
  const auto& d = a.distribution.values();
  CHECK(a.top1 == static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin()));
  CHECK_THROWS_AS(forecast_product(ProductSequence{}, model), SequenceError);
}

TEST_CASE("prefix forecasts match individual forecasts") {
  ProductModel model(tiny_config(), small_tree());
  const auto events = sequence_of(model.hierarchy(), {3, 7, 11, 2, 15, 6});
  const auto prefixes = forecast_prefixes(events, model, 2);
  REQUIRE(prefixes.size() == events.size());
  for (std::size_t n = 1; n <= events.size(); ++n) {
    const auto one = forecast_product(std::span(events).first(n), model);
    CHECK(prefixes[n - 1].top1 == one.top1);
    for (std::size_t k = 0; k < one.distribution.size(); ++k)
      CHECK(std::abs(prefixes[n - 1].distribution[k] - one.distribution[k]) < 1e-12);
    const std::size_t keep = std::min<std::size_t>(n, 2);
    REQUIRE(prefixes[n - 1].encoding.rows() == keep);
    for (std::size_t r = 0; r < keep; ++r)
      for (std::size_t c = 0; c < 8; ++c)
        CHECK(std::abs(prefixes[n - 1].encoding.at(r, c) - one.encoding.at(n - keep + r, c)) < 1e-12);
  }
}

TEST_CASE("category baselines") {
  const ProductEvent e3{0, 0, 0, 3}, e7{0, 0, 0, 7}, e5{0, 0, 0, 5}, e9{0, 0, 0, 9};
  const ProductSequence s = {e3, e3, e7};
  CHECK(baseline_category(s, CategoryBaseline::MostFrequent) == 3);
  CHECK(baseline_category(s, CategoryBaseline::Latest) == 7);
  const ProductSequence tie = {e9, e5};
  CHECK(baseline_category(tie, CategoryBaseline::MostFrequent) == 5);
  CHECK_THROWS_AS(baseline_category(ProductSequence{}, CategoryBaseline::Latest), SequenceError);
}

TEST_CASE("hitrate") {
  const std::vector<std::size_t> p = {1, 2, 3}, t = {1, 9, 3};
  CHECK(hitrate(p, t) == doctest::Approx(2.0 / 3.0));
  CHECK(hitrate(p, p) == 1.0);
  const std::vector<std::size_t> shorter = {1, 2};
  CHECK_THROWS_AS(hitrate(p, shorter), DimensionError);
}

TEST_CASE("build_prod_foresight mixtures") {
  ProdForecast f;
  f.distribution = Tensor({4});
  f.encoding = Tensor::matrix(3, 2, {1, 2, 3, 4, 5, 6});
  const auto table = Tensor::matrix(4, 2, {1, 2, 3, 4, 5, 6, 7, 8});
  f.distribution[2] = 1.0;
  const auto onehot = build_prod_foresight(f, table, 2);
  REQUIRE(onehot.size() == 2 + 2 * 2);
  CHECK(onehot[0] == 5.0);
  CHECK(onehot[1] == 6.0);
  // Last two encoding rows.
  CHECK(onehot[2] == 3.0);
  CHECK(onehot[5] == 6.0);

  f.distribution.fill(0.25);
  const auto uniform = build_prod_foresight(f, table, 8);
  CHECK(uniform.size() == 2 + 3 * 2);
  CHECK(uniform[0] == doctest::Approx(4.0));
  CHECK(uniform[1] == doctest::Approx(5.0));
  CHECK_THROWS_AS(build_prod_foresight(f, Tensor({3, 2}), 2), DimensionError);
}

TEST_CASE("product checkpoint round trip") {
  ProductModel model(tiny_config(), small_tree());
  const auto dir = test_support::scratch_dir("prodckpt");
  model.save(dir / "prod.ckpt");
  const auto loaded = ProductModel::load(dir / "prod.ckpt");
  CHECK(core::same_parameters(model.params(), loaded.params()));
  CHECK(loaded.hierarchy() == model.hierarchy());
}
