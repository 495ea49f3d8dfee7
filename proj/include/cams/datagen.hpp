#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cams/core.hpp"
#include "cams/rng.hpp"

namespace cams {

// The generator cannot satisfy the requested spec.
class GenerationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct StreamFile {
  StreamMeta meta;
  std::vector<RoundRecord> records;

  void validate() const;
  friend bool operator==(const StreamFile&, const StreamFile&) = default;
};

// Synthetic analogs of the four policy behaviours:
//   normal    - softmax(sharpness * estimated accuracy) for the round's class
//   biased    - like normal, but the estimate is inverted on a class subset
//   random    - a fresh uniform draw from the simplex every round
//   malicious - softmax(-sharpness * estimated accuracy): opposite advice
enum class PolicyKind { normal, biased, random, malicious };

struct PolicySpec {
  PolicyKind kind = PolicyKind::normal;
  double sharpness = 10.0;
  std::vector<Label> biased_classes{0};
};

enum class StreamRegime { stochastic, adversarial_segments };

struct Segment {
  std::size_t length = 0;
  int dominant_model = 0;
};

struct SyntheticSpec {
  int classes = 2;
  int models = 2;
  std::size_t rounds = 1;
  // models x classes: probability model j is right when the label is y.
  // A single column is broadcast to every class.
  Matrix accuracy;
  std::vector<PolicySpec> policies;
  Vector label_distribution;  // empty means uniform
  StreamRegime regime = StreamRegime::stochastic;
  std::vector<Segment> segments;
  std::uint64_t seed = 0;
  // Reject specs whose best extended policy is not unique.
  bool require_unique_best = false;
  // Per-round accuracy-estimate perturbation, +/- this value per model.
  double advice_noise = 0.05;

  void validate() const;

  // Accuracy of model j given label y, after broadcasting.
  double model_accuracy(int model, Label y) const;
  Vector label_probs() const;
};

inline constexpr double kDominantAccuracy = 0.95;
inline constexpr double kBackgroundAccuracy = 0.5;
// Exact expectations enumerate 2^k noise sign patterns.
inline constexpr int kMaxExactModels = 16;

// Expected per-round loss of every extended policy (base first, then the
// constant policies), computed by exhaustive expectation over labels,
// model-correctness events and advice-noise sign patterns.
struct PolicyGaps {
  Vector expected_losses;
  Index best = 0;
  double delta = 0.0;  // min over i != best of (mu_i - mu_best)
  double gamma = 0.0;  // min margin between the best policy's top two models
};

PolicyGaps exact_policy_gaps(const SyntheticSpec& spec);

// The advice row a policy emits for a round with true label y and the given
// per-model accuracy estimate noise. Random policies draw from `rng`.
Vector policy_row(const PolicySpec& policy, const Vector& accuracy_given_label, Label y, const Vector& noise,
                  Rng& rng);

StreamFile gen_stochastic(const SyntheticSpec& spec, std::uint64_t seed);
StreamFile gen_adversarial(const SyntheticSpec& spec, std::uint64_t seed);

// Dispatches on spec.regime.
StreamFile generate(const SyntheticSpec& spec, std::uint64_t seed);

// Per-segment accuracy matrix used by gen_adversarial.
Matrix segment_accuracy(int models, int classes, int dominant_model);

// Random permutation of the records, re-indexed 1..T. Oblivious-adversary
// streams are returned unchanged.
StreamFile reorder(const StreamFile& stream, std::uint64_t seed);

std::string_view to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(std::string_view name);

}  // namespace cams
