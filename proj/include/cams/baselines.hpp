#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cams/core.hpp"
#include "cams/learner.hpp"
#include "cams/rng.hpp"

namespace cams {

struct StreamFile;

// ---------------------------------------------------------------------------
// Query criteria

// b / T clipped to [0, 1].
double rs_query(std::size_t t, std::size_t budget, std::size_t horizon);

// max_y lbar_y (1 - lbar_y) with lbar_y = 1 - mass(y). In [0, 0.25].
double mp_variance(std::span<const Label> predictions, const Vector& w, int classes);

// Model Picker's own rate schedule sqrt(ln k / t).
double mp_rate(std::size_t t, Index models);

// max{v, eta} when v != 0, else 0; clipped to 1.
double mp_query_probability(double variance, double eta);

// Normalized vote entropy of the committee: in [0, 1], 0 when unanimous.
double qbc_vote_entropy(std::span<const Label> predictions, Index models, int classes);

// ---------------------------------------------------------------------------
// Follow-the-leader

struct FtlState {
  Vector queried_model_losses;

  explicit FtlState(Index models = 0) : queried_model_losses(Vector::Zero(models)) {}
  void observe(const Vector& losses) { queried_model_losses += losses; }
};

int ftl_recommend(const FtlState& state, Rng& rng);

// ---------------------------------------------------------------------------
// IWAL

struct IwalState {
  std::vector<bool> surviving;
  Vector weighted_errors;  // importance-weighted error sums
  std::size_t rounds_seen = 0;
  double c0 = 8.0;

  explicit IwalState(Index models = 0, double c0_value = 8.0)
      : surviving(static_cast<std::size_t>(models), true), weighted_errors(Vector::Zero(models)), c0(c0_value) {}

  Index survivors() const;
};

// c0 * sqrt(ln t / t).
double iwal_threshold(std::size_t t, double c0);

// 1 if two surviving models disagree on this round, else 0.
double iwal_query_probability(const IwalState& state, std::span<const Label> predictions, int classes);

// Removes every survivor whose average weighted error exceeds the best
// survivor's by more than `threshold`. The best survivor is never removed.
void iwal_prune(IwalState& state, double threshold);

// Advances the round counter, folds in the importance-weighted losses when
// the label was queried, and prunes with the current threshold (from t >= 2).
void iwal_update(IwalState& state, const Vector* losses, double query_prob);

// ---------------------------------------------------------------------------
// Contextual recommenders (CQBC / CIWAL)

struct ContextualScoreState {
  Vector cumulative_rewards;        // per model, queried rounds only
  Vector cumulative_policy_losses;  // per base policy, importance weighted
  std::size_t rounds_seen = 0;

  ContextualScoreState(Index models = 0, Index policies = 0)
      : cumulative_rewards(Vector::Zero(models)), cumulative_policy_losses(Vector::Zero(policies)) {}

  // Exponential weights over base policies with rate sqrt(ln n / t).
  Vector exp4_weights() const;
  // Cumulative rewards normalized to the simplex; uniform while all are zero.
  Vector reward_simplex() const;
};

// Advice-weighted model vector: sum_i exp4_i * advice.row(i); uniform when
// there are no base policies.
Vector exp4_model_vector(const ContextualScoreState& state, const AdviceMatrix& advice);

// argmax of the normalized elementwise product of the two vectors. A zero
// product falls back to a uniformly random model.
int contextual_recommend(const Vector& reward_simplex, const Vector& model_vector, Rng& rng);

// ---------------------------------------------------------------------------
// Learners

enum class BaselineKind { rs, mp, qbc, iwal, cqbc, ciwal };

struct BaselineConfig {
  BaselineKind kind = BaselineKind::rs;
  int classes = 2;
  std::size_t horizon = 1;
  std::size_t budget = 0;
  double iwal_c0 = 8.0;
  std::uint64_t seed = 0;
};

class BaselineLearner final : public Learner {
 public:
  BaselineLearner(BaselineConfig config, int models, int policies);

  RoundOutcome step(const RoundRecord& record) override;
  std::string name() const override;

  const FtlState& ftl() const { return ftl_; }
  const IwalState& iwal() const { return iwal_; }

 private:
  double query_prob(const RoundRecord& record, const Vector& w) const;
  int pick(const RoundRecord& record, Vector& w);

  BaselineConfig config_;
  int models_;
  int policies_;
  std::size_t round_ = 0;
  Rng rng_;
  FtlState ftl_;
  IwalState iwal_;
  ContextualScoreState contextual_;
  Vector mp_losses_;  // Model Picker importance-weighted cumulative losses
};

// Cumulative expected loss sum_t <pi_i(x_t), l_t> of every base policy.
// With no base policies the constant policies are scored instead.
Vector hindsight_policy_losses(const StreamFile& stream);

// Index (into hindsight_policy_losses) of the smallest loss; lowest index on ties.
Index hindsight_best_policy(const StreamFile& stream);

// Follows one fixed policy (argmax of its row) and queries with the CAMS
// rule, using that policy's row as the model distribution.
class OracleLearner final : public Learner {
 public:
  // `policy_index` addresses base policies, or models when the stream has none.
  OracleLearner(Index policy_index, int classes, std::size_t budget, std::uint64_t seed);

  RoundOutcome step(const RoundRecord& record) override;
  std::string name() const override { return "oracle"; }
  Index policy_index() const { return policy_; }

 private:
  Index policy_;
  int classes_;
  std::size_t round_ = 0;
  Rng rng_;
};

std::string_view to_string(BaselineKind kind);

}  // namespace cams
