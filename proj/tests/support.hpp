#pragma once

#include <cmath>
#include <vector>

#include "cams/core.hpp"
#include "cams/datagen.hpp"
#include "cams/rng.hpp"

namespace cams::testing {

// Uniform point of the simplex (normalized exponentials).
inline Vector random_simplex(Index n, Rng& rng) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = -std::log(1.0 - rng.uniform());
  return v / v.sum();
}

// Simplex point that is sometimes sparse or one-hot, to reach the boundary.
inline Vector random_simplex_edgy(Index n, Rng& rng) {
  switch (rng.below(4)) {
    case 0: {
      Vector v = Vector::Zero(n);
      v(static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)))) = 1.0;
      return v;
    }
    case 1: {
      Vector v = random_simplex(n, rng);
      for (Index i = 0; i < n; ++i)
        if (rng.bernoulli(0.5)) v(i) = 0.0;
      if (v.sum() == 0.0) v(0) = 1.0;
      return v / v.sum();
    }
    default:
      return random_simplex(n, rng);
  }
}

inline Labels random_predictions(Index models, int classes, Rng& rng) {
  Labels p(static_cast<std::size_t>(models));
  for (auto& y : p) y = static_cast<Label>(rng.below(static_cast<std::uint64_t>(classes)));
  return p;
}

inline AdviceMatrix random_advice(Index policies, Index models, Rng& rng) {
  if (policies == 0) return AdviceMatrix::empty(models);
  Matrix m(policies, models);
  for (Index i = 0; i < policies; ++i) m.row(i) = random_simplex_edgy(models, rng).transpose();
  return AdviceMatrix(m);
}

inline RoundRecord random_record(Index models, Index policies, int classes, std::size_t t, Rng& rng) {
  RoundRecord r;
  r.predictions = random_predictions(models, classes, rng);
  r.true_label = static_cast<Label>(rng.below(static_cast<std::uint64_t>(classes)));
  r.advice = random_advice(policies, models, rng);
  r.round_index = t;
  return r;
}

inline StreamFile random_stream(int models, int policies, int classes, std::size_t rounds, Rng& rng) {
  StreamFile s;
  s.meta.classes = classes;
  s.meta.models = models;
  s.meta.policies = policies;
  s.meta.rounds = rounds;
  for (std::size_t t = 1; t <= rounds; ++t) s.records.push_back(random_record(models, policies, classes, t, rng));
  return s;
}

}  // namespace cams::testing
