#include <cmath>
#include <set>

#include "doctest.h"

#include "cams/core.hpp"
#include "cams/rng.hpp"
#include "support.hpp"

using namespace cams;

TEST_CASE("advice matrix rejects rows off the simplex") {
  Matrix ok(2, 3);
  ok << 0.2, 0.3, 0.5, 1.0, 0.0, 0.0;
  CHECK_NOTHROW(AdviceMatrix{ok});

  Matrix neg = ok;
  neg(0, 0) = -0.1;
  neg(0, 1) = 0.6;
  CHECK_THROWS_AS(AdviceMatrix{neg}, ValidationError);

  Matrix short_sum = ok;
  short_sum(1, 0) = 0.9;
  CHECK_THROWS_AS(AdviceMatrix{short_sum}, ValidationError);

  Matrix nan = ok;
  nan(1, 2) = std::nan("");
  CHECK_THROWS_AS(AdviceMatrix{nan}, ValidationError);
}

TEST_CASE("rows are kept verbatim within tolerance") {
  Matrix m(1, 2);
  m << 0.5 + 4e-10, 0.5;
  const AdviceMatrix a(m);
  CHECK(a.row(0)(0) == 0.5 + 4e-10);
}

TEST_CASE("extend_advice appends one constant policy per model") {
  Matrix m(2, 3);
  m << 0.2, 0.3, 0.5, 0.0, 1.0, 0.0;
  const auto ext = extend_advice(AdviceMatrix(m));
  REQUIRE(ext.rows() == 5);
  REQUIRE(ext.cols() == 3);
  CHECK(ext.matrix().topRows(2) == m);
  CHECK(ext.matrix().bottomRows(3) == Matrix::Identity(3, 3));

  const auto only = extend_advice(AdviceMatrix::empty(4));
  CHECK(only.rows() == 4);
  CHECK(only.matrix() == Matrix::Identity(4, 4));
}

TEST_CASE("model losses are zero-one against the label") {
  const Labels preds{2, 0, 2, 1};
  const Vector l = model_losses(preds, 2, 3);
  CHECK(l(0) == 0.0);
  CHECK(l(1) == 1.0);
  CHECK(l(2) == 0.0);
  CHECK(l(3) == 1.0);
  CHECK_THROWS_AS(model_losses(preds, 3, 3), ValidationError);
}

TEST_CASE("induced model vector is the weighted row average") {
  Matrix m(2, 2);
  m << 0.25, 0.75, 1.0, 0.0;
  Vector w(2);
  w << 0.4, 0.6;
  const Vector v = induced_model_vector(w, m);
  CHECK(v(0) == doctest::Approx(0.4 * 0.25 + 0.6));
  CHECK(v(1) == doctest::Approx(0.4 * 0.75));
  Vector wrong(3);
  wrong << 0.2, 0.3, 0.5;
  CHECK_THROWS_AS(induced_model_vector(wrong, m), ValidationError);

  // Float scalars go through the same template.
  Eigen::MatrixXf mf = m.cast<float>();
  Eigen::VectorXf wf = w.cast<float>();
  CHECK(induced_model_vector(wf, mf)(0) == doctest::Approx(v(0)).epsilon(1e-6));
}

TEST_CASE("label mass sums the weight of models voting for a label") {
  Vector w(3);
  w << 0.2, 0.3, 0.5;
  const Labels preds{1, 0, 1};
  CHECK(label_mass(w, preds, 1) == doctest::Approx(0.7));
  CHECK(label_mass(w, preds, 0) == doctest::Approx(0.3));
  CHECK(label_mass(w, preds, 2) == 0.0);
}

TEST_CASE("regularize_policy_row") {
  SUBCASE("one-hot row of length two") {
    Vector row(2);
    row << 1.0, 0.0;
    const Vector out = regularize_policy_row(row);
    CHECK(out(0) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(out(1) == doctest::Approx(0.25).epsilon(1e-15));
  }
  SUBCASE("uniform rows are fixed points") {
    const Vector row = Vector::Constant(5, 0.2);
    CHECK((regularize_policy_row(row) - row).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("output stays on the simplex and moves toward uniform") {
    Rng rng(11);
    for (int i = 0; i < 500; ++i) {
      const Index k = 2 + static_cast<Index>(rng.below(8));
      const Vector row = testing::random_simplex_edgy(k, rng);
      const Vector out = regularize_policy_row(row);
      CHECK(is_simplex(out));
      const Vector u = Vector::Constant(k, 1.0 / static_cast<double>(k));
      CHECK((out - u).norm() <= (row - u).norm() + 1e-15);
    }
  }
  SUBCASE("rejects non-simplex input") {
    Vector row(2);
    row << 0.7, 0.7;
    CHECK_THROWS_AS(regularize_policy_row(row), ValidationError);
  }
}

TEST_CASE("regularize_advice applies the row map to every row") {
  Matrix m(2, 3);
  m << 1.0, 0.0, 0.0, 0.2, 0.3, 0.5;
  const auto r = regularize_advice(AdviceMatrix(m));
  for (Index i = 0; i < 2; ++i) {
    const Vector expected = regularize_policy_row(Vector(m.row(i).transpose()));
    CHECK((r.row(i).transpose() - expected).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("round record validation") {
  RoundRecord r;
  r.predictions = {0, 1, 2};
  r.true_label = 1;
  r.advice = AdviceMatrix::empty(3);
  CHECK_NOTHROW(r.validate(3, 0));
  CHECK_THROWS_AS(r.validate(2, 0), ValidationError);  // prediction 2 out of range
  CHECK_THROWS_AS(r.validate(3, 1), ValidationError);  // wrong policy count
  r.true_label = -1;
  CHECK_THROWS_AS(r.validate(3, 0), ValidationError);
}

TEST_CASE("rng basics") {
  SUBCASE("below stays in range and hits every value") {
    Rng rng(1);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 2000; ++i) {
      const auto v = rng.below(7);
      CHECK(v < 7);
      seen.insert(v);
    }
    CHECK(seen.size() == 7);
  }
  SUBCASE("uniform lies in [0, 1)") {
    Rng rng(2);
    for (int i = 0; i < 10000; ++i) {
      const double u = rng.uniform();
      CHECK(u >= 0.0);
      CHECK(u < 1.0);
    }
  }
  SUBCASE("bernoulli endpoints consume no randomness") {
    Rng a(3), b(3);
    CHECK(a.bernoulli(1.0));
    CHECK_FALSE(a.bernoulli(0.0));
    CHECK(a == b);
  }
  SUBCASE("categorical_at follows the cumulative distribution") {
    Vector w(3);
    w << 1.0, 0.0, 3.0;
    CHECK(Rng::categorical_at(w, 0.0) == 0);
    CHECK(Rng::categorical_at(w, 0.2499) == 0);
    CHECK(Rng::categorical_at(w, 0.25) == 2);
    CHECK(Rng::categorical_at(w, 0.9999) == 2);
  }
  SUBCASE("argmax breaks ties uniformly") {
    Rng rng(4);
    Vector v(4);
    v << 1.0, 3.0, 3.0, 3.0;
    int counts[4] = {0, 0, 0, 0};
    for (int i = 0; i < 30000; ++i) ++counts[rng.argmax(v)];
    CHECK(counts[0] == 0);
    for (int j = 1; j < 4; ++j) CHECK(std::abs(counts[j] / 30000.0 - 1.0 / 3.0) < 0.015);
  }
  SUBCASE("serialization round-trips the engine") {
    Rng rng(5);
    for (int i = 0; i < 17; ++i) rng.next_u64();
    Rng copy = Rng::deserialize(rng.serialize());
    CHECK(copy == rng);
    CHECK(copy.next_u64() == rng.next_u64());
  }
}

TEST_CASE("derive_seed separates indices and labels") {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t r = 0; r < 100; ++r) {
    seeds.insert(derive_seed(42, r, "cams"));
    seeds.insert(derive_seed(42, r, "mp"));
  }
  CHECK(seeds.size() == 200);
  CHECK(derive_seed(42, 3, "cams") == derive_seed(42, 3, "cams"));
  CHECK(derive_seed(42, 3, "cams") != derive_seed(43, 3, "cams"));
}
