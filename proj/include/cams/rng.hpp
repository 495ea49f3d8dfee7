#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace cams {

// Seeded random source owned by a single learner or generator.
//
// Draws are built directly from the raw 64-bit engine output instead of the
// <random> distributions, whose algorithms are implementation-defined; this
// keeps trajectories bit-identical across standard libraries.
class Rng {
 public:
  Rng() : engine_(0) {}
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p) { return p >= 1.0 || (p > 0.0 && uniform() < p); }

  // Inverse-CDF draw over nonnegative weights (need not be normalized).
  // A quantile of 0 selects the first index carrying positive mass.
  template <typename Derived>
  Eigen::Index categorical(const Eigen::MatrixBase<Derived>& weights) {
    return categorical_at(weights, uniform());
  }

  template <typename Derived>
  static Eigen::Index categorical_at(const Eigen::MatrixBase<Derived>& weights, double quantile) {
    const double total = weights.sum();
    const double target = quantile * total;
    double running = 0.0;
    Eigen::Index last_positive = 0;
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
      const double wi = static_cast<double>(weights(i));
      if (wi <= 0.0) continue;
      running += wi;
      last_positive = i;
      if (target < running) return i;
    }
    return last_positive;
  }

  // Index of the maximum entry; exact ties are broken uniformly at random.
  template <typename Derived>
  Eigen::Index argmax(const Eigen::MatrixBase<Derived>& values) {
    return arg_extreme(values, /*maximize=*/true);
  }

  template <typename Derived>
  Eigen::Index argmin(const Eigen::MatrixBase<Derived>& values) {
    return arg_extreme(values, /*maximize=*/false);
  }

  // Full engine state as text (std::mersenne_twister_engine stream format).
  std::string serialize() const;
  static Rng deserialize(std::string_view text);

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

 private:
  template <typename Derived>
  Eigen::Index arg_extreme(const Eigen::MatrixBase<Derived>& values, bool maximize) {
    Eigen::Index best = 0;
    Eigen::Index ties = 0;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
      const bool better = maximize ? values(i) > values(best) : values(i) < values(best);
      if (i == 0 || better) {
        best = i;
        ties = 1;
      } else if (values(i) == values(best)) {
        // Reservoir sampling over the tied set.
        ++ties;
        if (below(static_cast<std::uint64_t>(ties)) == 0) best = i;
      }
    }
    return best;
  }

  std::mt19937_64 engine_;
};

// Deterministic seed derivation: mixes a master seed, a realization index and
// a stream label so adding learners never perturbs existing trajectories.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, std::string_view label);

}  // namespace cams
