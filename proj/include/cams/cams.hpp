#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "cams/core.hpp"
#include "cams/learner.hpp"
#include "cams/rng.hpp"

namespace cams {

enum class Regime { stochastic, adversarial };

enum class Variant {
  standard,       // weighted-majority argmax of the induced model distribution
  max,            // argmax model of the most probable policy
  random_policy,  // argmax model of a policy sampled from the weights
  conventional,   // standard rule over the base policies only (no constant policies)
};

// Query criterion. `entropy` is the learner's own rule; the others exist for
// the query-strategy ablation and keep the model-selection path unchanged.
enum class QueryRule { entropy, variance, random };

struct CamsConfig {
  Regime regime = Regime::stochastic;
  Variant variant = Variant::standard;
  int classes = 2;
  std::size_t horizon = 1;  // T; the adversarial rate divides by it
  std::size_t budget = 0;
  bool regularize_advice = false;
  QueryRule query_rule = QueryRule::entropy;
  std::uint64_t seed = 0;

  // Test hooks.
  std::optional<double> forced_query_prob;
  std::optional<double> fixed_rate;
  bool record_weights = false;

  void validate() const;
};

struct CamsState {
  Vector cumulative_policy_losses;
  std::size_t cost_spent = 0;
  // One minus the largest single-label mass seen on any earlier round.
  double rho = 1.0;
  double max_label_mass_seen = 0.0;
  std::size_t round = 0;
  Rng rng;
};

// Average over labels of lbar * log_c(1 / lbar), where lbar = 1 - mass(y),
// counting only labels with lbar strictly inside (0, 1). Values within 1e-12
// of an endpoint are treated as the endpoint. Range [0, 1 / (e ln c)].
double disagreement(std::span<const Label> predictions, const Vector& w, int classes);

// max{1/sqrt(t), H}.
double query_probability(double disagreement_value, std::size_t t);

// sqrt(ln m / t).
double set_rate_stochastic(std::size_t t, Index policy_count);

// sqrt(1/sqrt(t) + rho / (c^2 ln c)) * sqrt(ln m / T).
double set_rate_adversarial(std::size_t t, std::size_t horizon, Index policy_count, double rho, int classes);

// Folds this round's largest label mass into the running maximum and returns
// the refreshed rho = 1 - max mass.
double update_rho(CamsState& state, const Vector& w, std::span<const Label> predictions);

// Softmax of -eta * losses, computed after shifting by the minimum loss.
PolicyWeights policy_weights(const Vector& cumulative_losses, double eta);

// Model recommendation for the given regime and variant. Argmax ties and all
// sampling go through `rng`.
int recommend(Regime regime, Variant variant, const Vector& weights, const AdviceMatrix& advice_ext, Rng& rng);

// Same rule with the two random quantiles supplied explicitly (inverse-CDF
// sampling). Argmax ties resolve to the lowest index.
int recommend_at(Regime regime, Variant variant, const Vector& weights, const AdviceMatrix& advice_ext,
                 double policy_quantile, double model_quantile);

class CamsLearner final : public Learner {
 public:
  // `policies` is the number of base policies in the stream.
  CamsLearner(CamsConfig config, int models, int policies);
  CamsLearner(CamsConfig config, int models, int policies, CamsState state);

  RoundOutcome step(const RoundRecord& record) override;
  std::string name() const override;

  const CamsConfig& config() const { return config_; }
  const CamsState& state() const { return state_; }
  Index policy_count() const { return state_.cumulative_policy_losses.size(); }

  // Versioned key=value text; see serialize_snapshot.
  std::string snapshot() const;

 private:
  CamsConfig config_;
  int models_;
  int policies_;
  CamsState state_;
};

std::string_view to_string(Regime regime);
std::string_view to_string(Variant variant);
std::string_view to_string(QueryRule rule);

inline constexpr std::string_view kSnapshotSchema = "cams-snapshot/1";

// Snapshot text:
//   schema=cams-snapshot/1
//   round=<t>
//   cost_spent=<C_t>
//   rho=<rho>
//   max_label_mass_seen=<max mass>
//   cumulative_policy_losses=<m space-separated reals>
//   rng=<engine state>
// Reals use shortest round-trip decimal form.
std::string serialize_snapshot(const CamsState& state);
CamsState parse_snapshot(std::string_view text);

}  // namespace cams
