#include <cmath>
#include <numeric>

#include "doctest.h"

#include "cams/cams.hpp"
#include "cams/harness.hpp"
#include "support.hpp"

using namespace cams;

namespace {

// Independent evaluation of the disagreement functional.
double disagreement_oracle(const Labels& preds, const Vector& w, int c) {
  double h = 0.0;
  for (int y = 0; y < c; ++y) {
    double mass = 0.0;
    for (std::size_t j = 0; j < preds.size(); ++j) mass += preds[j] == y ? w(static_cast<Index>(j)) : 0.0;
    const double lbar = 1.0 - mass;
    if (lbar > 1e-12 && lbar < 1.0 - 1e-12) h += lbar * std::log(1.0 / lbar) / std::log(static_cast<double>(c));
  }
  return h / c;
}

CamsConfig config(int classes, std::size_t horizon, std::size_t budget, std::uint64_t seed = 1) {
  CamsConfig cfg;
  cfg.classes = classes;
  cfg.horizon = horizon;
  cfg.budget = budget;
  cfg.seed = seed;
  return cfg;
}

RoundRecord record(Labels preds, Label y, std::size_t t, AdviceMatrix advice) {
  RoundRecord r;
  r.predictions = std::move(preds);
  r.true_label = y;
  r.round_index = t;
  r.advice = std::move(advice);
  return r;
}

}  // namespace

TEST_CASE("disagreement") {
  SUBCASE("two classes split evenly") {
    Vector w(2);
    w << 0.5, 0.5;
    CHECK(disagreement(Labels{0, 1}, w, 2) == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("unanimous committee has zero disagreement") {
    Vector w(3);
    w << 0.2, 0.3, 0.5;
    CHECK(disagreement(Labels{1, 1, 1}, w, 3) == 0.0);
  }
  SUBCASE("all mass on one model gives zero") {
    Vector w(3);
    w << 0.0, 1.0, 0.0;
    CHECK(disagreement(Labels{0, 1, 2}, w, 3) == 0.0);
  }
  SUBCASE("matches a direct evaluation") {
    Rng rng(7);
    for (int i = 0; i < 2000; ++i) {
      const int c = 2 + static_cast<int>(rng.below(6));
      const Index k = 2 + static_cast<Index>(rng.below(6));
      const Vector w = testing::random_simplex_edgy(k, rng);
      const auto preds = testing::random_predictions(k, c, rng);
      CHECK(disagreement(preds, w, c) == doctest::Approx(disagreement_oracle(preds, w, c)).epsilon(1e-12));
    }
  }
  SUBCASE("size mismatch is rejected") {
    Vector w(2);
    w << 0.5, 0.5;
    CHECK_THROWS_AS(disagreement(Labels{0, 1, 1}, w, 2), ValidationError);
  }
}

TEST_CASE("query probability floors at 1/sqrt(t)") {
  CHECK(query_probability(0.0, 1) == 1.0);
  CHECK(query_probability(0.0, 100) == doctest::Approx(0.1));
  CHECK(query_probability(0.3, 100) == doctest::Approx(0.3));
  CHECK(query_probability(0.05, 100) == doctest::Approx(0.1));
}

TEST_CASE("learning rates") {
  CHECK(set_rate_stochastic(4, 8) == doctest::Approx(std::sqrt(std::log(8.0) / 4.0)));
  CHECK_THROWS_AS(set_rate_stochastic(1, 1), ConfigError);
  const double expected = std::sqrt(1.0 / std::sqrt(9.0) + 0.5 / (9.0 * std::log(3.0))) * std::sqrt(std::log(6.0) / 100.0);
  CHECK(set_rate_adversarial(9, 100, 6, 0.5, 3) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("policy weights are a shifted softmax") {
  Vector L(3);
  L << 1.0, 2.0, 4.0;
  const auto pw = policy_weights(L, 0.5);
  const double z = std::exp(-0.5) + std::exp(-1.0) + std::exp(-2.0);
  CHECK(pw.weights(0) == doctest::Approx(std::exp(-0.5) / z).epsilon(1e-14));
  CHECK(pw.weights(2) == doctest::Approx(std::exp(-2.0) / z).epsilon(1e-14));
  CHECK(pw.cumulative_losses == L);

  // Huge losses do not underflow to an empty distribution.
  Vector big(2);
  big << 1e6, 1e6 + 1.0;
  const auto pb = policy_weights(big, 1.0);
  CHECK(pb.weights.sum() == doctest::Approx(1.0));
  CHECK(pb.weights(0) > pb.weights(1));
}

TEST_CASE("recommendation rules with explicit quantiles") {
  // Two base policies over three models, then the constant policies.
  Matrix m(2, 3);
  m << 0.6, 0.4, 0.0, 0.0, 0.1, 0.9;
  const auto ext = extend_advice(AdviceMatrix(m));
  Vector w = Vector::Zero(5);
  w(0) = 0.4;
  w(1) = 0.35;
  w(4) = 0.25;
  // Induced vector: [0.24, 0.195, 0.565].
  CHECK(recommend_at(Regime::stochastic, Variant::standard, w, ext, 0.0, 0.0) == 2);
  // Most probable policy is 0, whose top model is 0.
  CHECK(recommend_at(Regime::stochastic, Variant::max, w, ext, 0.0, 0.0) == 0);
  // Quantile 0.5 lands on policy 1, whose top model is 2.
  CHECK(recommend_at(Regime::stochastic, Variant::random_policy, w, ext, 0.5, 0.0) == 2);
  CHECK(recommend_at(Regime::stochastic, Variant::random_policy, w, ext, 0.1, 0.0) == 0);
  // Adversarial: sample policy 0, then model by its row.
  CHECK(recommend_at(Regime::adversarial, Variant::standard, w, ext, 0.1, 0.7) == 1);
  CHECK(recommend_at(Regime::adversarial, Variant::standard, w, ext, 0.1, 0.5) == 0);
  CHECK(recommend_at(Regime::adversarial, Variant::standard, w, ext, 0.9, 0.99) == 2);
}

TEST_CASE("adversarial recommendation follows the induced distribution") {
  Matrix m(1, 3);
  m << 0.2, 0.3, 0.5;
  const auto ext = extend_advice(AdviceMatrix(m));
  Vector w(4);
  w << 0.5, 0.1, 0.2, 0.2;
  const Vector induced = induced_model_vector(w, ext.matrix());
  Rng rng(9);
  Vector counts = Vector::Zero(3);
  const int n = 60000;
  for (int i = 0; i < n; ++i) counts(recommend(Regime::adversarial, Variant::standard, w, ext, rng)) += 1.0;
  for (Index j = 0; j < 3; ++j) CHECK(counts(j) / n == doctest::Approx(induced(j)).epsilon(0.03));
}

TEST_CASE("degenerate rounds neither query nor learn") {
  CamsLearner l(config(3, 10, 10), 3, 0);
  const auto out = l.step(record({1, 1, 1}, 2, 1, AdviceMatrix::empty(3)));
  CHECK_FALSE(out.queried);
  CHECK(out.query_prob == 0.0);
  CHECK(out.learner_loss == 1);
  CHECK(l.state().cumulative_policy_losses.isZero());
  CHECK(l.cost_spent() == 0);
  CHECK(l.state().rho == 1.0);
}

TEST_CASE("first informative round always queries") {
  CamsLearner l(config(2, 10, 10), 2, 0);
  const auto out = l.step(record({0, 1}, 1, 1, AdviceMatrix::empty(2)));
  CHECK(out.queried);
  CHECK(out.query_prob == 1.0);
  CHECK(l.state().cumulative_policy_losses(0) == 1.0);
  CHECK(l.state().cumulative_policy_losses(1) == 0.0);
  CHECK(l.cost_spent() == 1);
}

TEST_CASE("importance weights divide by the query probability") {
  auto cfg = config(2, 10, 10);
  cfg.forced_query_prob = 0.25;
  // Find a seed whose first draw queries.
  for (std::uint64_t seed = 0;; ++seed) {
    cfg.seed = seed;
    CamsLearner l(cfg, 2, 1);
    Matrix m(1, 2);
    m << 0.3, 0.7;
    const auto out = l.step(record({0, 1}, 0, 1, AdviceMatrix(m)));
    if (!out.queried) continue;
    const Vector& L = l.state().cumulative_policy_losses;
    CHECK(L(0) == doctest::Approx(0.7 / 0.25));  // base policy: <[0.3, 0.7], [0, 1]> / q
    CHECK(L(1) == 0.0);
    CHECK(L(2) == doctest::Approx(4.0));
    break;
  }
}

TEST_CASE("budget is a hard ceiling") {
  Rng rng(3);
  const auto stream = testing::random_stream(4, 2, 3, 200, rng);
  for (std::size_t B : {0u, 1u, 5u, 50u}) {
    CamsLearner l(config(3, 200, B), 4, 2);
    std::size_t queries = 0;
    for (const auto& rec : stream.records) queries += l.step(rec).queried ? 1 : 0;
    CHECK(queries <= B);
    CHECK(l.cost_spent() == queries);
  }
}

TEST_CASE("zero budget leaves the policy losses untouched") {
  Rng rng(4);
  const auto stream = testing::random_stream(3, 2, 2, 50, rng);
  CamsLearner l(config(2, 50, 0), 3, 2);
  for (const auto& rec : stream.records) l.step(rec);
  CHECK(l.state().cumulative_policy_losses.isZero());
}

TEST_CASE("rho tracks the largest label mass of earlier rounds") {
  auto cfg = config(2, 10, 10);
  cfg.regime = Regime::adversarial;
  CamsLearner l(cfg, 2, 1);
  Matrix m(1, 2);
  m << 0.5, 0.5;
  // Uniform initial weights over {base, e0, e1} give w = [0.5, 0.5].
  l.step(record({0, 1}, 0, 1, AdviceMatrix(m)));
  CHECK(l.state().max_label_mass_seen == doctest::Approx(0.5));
  CHECK(l.state().rho == doctest::Approx(0.5));
}

TEST_CASE("round indices must be consecutive") {
  CamsLearner l(config(2, 10, 10), 2, 0);
  CHECK_THROWS_AS(l.step(record({0, 1}, 0, 2, AdviceMatrix::empty(2))), ValidationError);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(CamsLearner(config(1, 10, 10), 2, 0), ConfigError);
  CHECK_THROWS_AS(CamsLearner(config(2, 10, 10), 1, 0), ConfigError);
  auto conv = config(2, 10, 10);
  conv.variant = Variant::conventional;
  CHECK_THROWS_AS(CamsLearner(conv, 3, 1), ConfigError);
  auto forced = config(2, 10, 10);
  forced.forced_query_prob = 0.0;
  CHECK_THROWS_AS(CamsLearner(forced, 2, 0), ConfigError);
}

TEST_CASE("conventional variant ignores the constant policies") {
  auto cfg = config(2, 10, 10);
  cfg.variant = Variant::conventional;
  CamsLearner l(cfg, 2, 2);
  CHECK(l.policy_count() == 2);
  CamsLearner e(config(2, 10, 10), 2, 2);
  CHECK(e.policy_count() == 4);
}

TEST_CASE("regularized advice changes the losses fed to policies") {
  auto cfg = config(2, 10, 10);
  cfg.regularize_advice = true;
  CamsLearner l(cfg, 2, 1);
  Matrix m(1, 2);
  m << 1.0, 0.0;
  l.step(record({1, 0}, 0, 1, AdviceMatrix(m)));
  // Row [1, 0] becomes [0.75, 0.25]; model 0 is wrong, q = 1.
  CHECK(l.state().cumulative_policy_losses(0) == doctest::Approx(0.75));
  CHECK(l.state().cumulative_policy_losses(1) == doctest::Approx(0.75));  // constant row on model 0
}

TEST_CASE("snapshot round trip and bit-exact resume") {
  Rng rng(21);
  const std::size_t T = 300;
  const auto stream = testing::random_stream(4, 3, 3, T, rng);
  for (Regime regime : {Regime::stochastic, Regime::adversarial}) {
    auto cfg = config(3, T, 120, 77);
    cfg.regime = regime;
    CamsLearner full(cfg, 4, 3);
    Trajectory a;
    for (const auto& rec : stream.records) a.append(full.step(rec));

    CamsLearner first(cfg, 4, 3);
    Trajectory b;
    for (std::size_t t = 0; t < 137; ++t) b.append(first.step(stream.records[t]));
    const std::string text = first.snapshot();
    CHECK(text.rfind("schema=cams-snapshot/1\n", 0) == 0);
    const CamsState restored = parse_snapshot(text);
    CHECK(restored.rng == first.state().rng);
    CHECK(restored.cumulative_policy_losses == first.state().cumulative_policy_losses);
    CamsLearner second(cfg, 4, 3, restored);
    for (std::size_t t = 137; t < T; ++t) b.append(second.step(stream.records[t]));
    CHECK(a == b);
    CHECK(full.state().cumulative_policy_losses == second.state().cumulative_policy_losses);
  }
}

TEST_CASE("snapshot parser rejects damaged input") {
  CHECK_THROWS_AS(parse_snapshot("schema=cams-snapshot/9\n"), ValidationError);
  CHECK_THROWS_AS(parse_snapshot("round=3\n"), ValidationError);
  CamsLearner l(config(2, 10, 10), 2, 0);
  std::string text = l.snapshot();
  text.replace(text.find("rho=1"), 5, "rho=x");
  CHECK_THROWS_AS(parse_snapshot(text), ValidationError);
}

TEST_CASE("cams concentrates on a perfect constant model") {
  // Model 0 is always right; the others guess.
  Rng rng(5);
  StreamFile s = testing::random_stream(4, 2, 3, 1500, rng);
  for (auto& rec : s.records) rec.predictions[0] = rec.true_label;
  CamsLearner l(config(3, 1500, 1500), 4, 2);
  int late_mistakes = 0;
  for (std::size_t t = 0; t < s.records.size(); ++t) {
    const auto out = l.step(s.records[t]);
    if (t >= 1000) late_mistakes += out.learner_loss;
  }
  CHECK(late_mistakes <= 5);
}
