#include <doctest.h>

#include <cmath>
#include <random>

#include "lf/core/errors.hpp"
#include "lf/metrics/metrics.hpp"
#include "support.hpp"

using namespace lf;
using namespace lf::metrics;

namespace {

ScoredLabelSet make(std::vector<double> scores, std::vector<int> labels, std::int64_t user = 0, double weight = 1.0) {
  ScoredLabelSet s;
  for (std::size_t i = 0; i < scores.size(); ++i) s.push_back({user, scores[i], labels[i], weight});
  return s;
}

ScoredLabelSet append(ScoredLabelSet a, const ScoredLabelSet& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("auc examples") {
  CHECK(auc(make({0.9, 0.1}, {1, 0})) == 1.0);
  CHECK(auc(make({0.5, 0.5}, {1, 0})) == 0.5);
  CHECK(auc(make({0.8, 0.6, 0.4, 0.2}, {1, 0, 1, 0})) == 0.75);
  CHECK_THROWS_AS(auc(make({0.1, 0.2}, {1, 1})), MetricError);
}

TEST_CASE("auc equals the all-pairs oracle on random tied sets") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng() % 199;
    std::uniform_int_distribution<int> score(0, 1 + static_cast<int>(rng() % 20));  // coarse grid forces ties
    ScoredLabelSet s;
    for (std::size_t i = 0; i < n; ++i) s.push_back({0, score(rng) / 4.0, static_cast<int>(rng() % 2), 1.0});
    s[0].label = 1;
    s[1].label = 0;
    CHECK(auc(s) == test_support::brute_force_auc(s));
  }
}

TEST_CASE("auc is invariant under monotone score transforms") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d;
  ScoredLabelSet s;
  for (int i = 0; i < 50; ++i) s.push_back({0, d(rng), i % 3 == 0 ? 1 : 0, 1.0});
  auto t = s;
  for (auto& imp : t) imp.score = std::exp(3.0 * imp.score) - 7.0;
  CHECK(auc(s) == auc(t));
}

TEST_CASE("uauc examples") {
  const auto u1 = make({0.8, 0.6, 0.4, 0.2}, {1, 0, 1, 0}, 1);
  CHECK(uauc(u1).value == auc(u1));
  const auto perfect = make({0.9, 0.1}, {1, 0}, 1), coin = make({0.5, 0.5}, {1, 0}, 2);
  const auto both = append(perfect, coin);
  CHECK(uauc(both).value == 0.75);
  const auto with_single = append(both, make({0.3, 0.7}, {1, 1}, 3));
  const auto r = uauc(with_single);
  CHECK(r.value == 0.75);
  CHECK(r.eligible_users == 2);
  CHECK(r.excluded_users == 1);
  CHECK_THROWS_AS(uauc(make({0.3, 0.7}, {1, 1}, 3)), MetricError);
}

TEST_CASE("gauc examples") {
  const auto a = make({0.9, 0.1}, {1, 0}, 1, 1.5), b = make({0.5, 0.5}, {1, 0}, 2, 0.5);
  CHECK(gauc(append(a, b)).value == doctest::Approx(0.875));
  const auto eq = append(make({0.9, 0.1, 0.3}, {1, 0, 1}, 1), make({0.2, 0.4, 0.6}, {1, 0, 0}, 2));
  CHECK(std::abs(gauc(eq).value - uauc(eq).value) < 1e-12);
  auto scaled = append(a, b);
  for (auto& imp : scaled) imp.weight *= 10.0;
  CHECK(gauc(scaled).value == doctest::Approx(gauc(append(a, b)).value).epsilon(1e-12));
  CHECK_THROWS_AS(gauc(make({0.3}, {1}, 1, 0.0)), MetricError);
}

TEST_CASE("mse examples") {
  const std::vector<double> x = {1.0, 2.0};
  CHECK(mse(x, x) == 0.0);
  CHECK(mse(std::vector<double>{0, 0}, std::vector<double>{1, 1}) == 1.0);
  CHECK(mse(std::vector<double>{1, 3}, std::vector<double>{2, 5}) == 2.5);
  CHECK_THROWS_AS(mse(std::vector<double>{1}, x), DimensionError);
}
