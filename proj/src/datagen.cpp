#include "cams/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cams {

void StreamFile::validate() const {
  meta.validate();
  if (records.size() != meta.rounds) {
    throw ValidationError("stream declares " + std::to_string(meta.rounds) + " rounds but holds " +
                          std::to_string(records.size()));
  }
  for (const auto& rec : records) {
    if (static_cast<int>(rec.predictions.size()) != meta.models) {
      throw ValidationError("round " + std::to_string(rec.round_index) + ": expected " +
                            std::to_string(meta.models) + " predictions");
    }
    rec.validate(meta.classes, meta.policies);
  }
}

void SyntheticSpec::validate() const {
  if (classes < 2) throw GenerationError("spec.classes: must be >= 2");
  if (models < 2) throw GenerationError("spec.models: must be >= 2");
  if (rounds < 1) throw GenerationError("spec.rounds: must be >= 1");
  if (regime == StreamRegime::stochastic) {
    if (accuracy.rows() != models || (accuracy.cols() != 1 && accuracy.cols() != classes)) {
      throw GenerationError("spec.accuracy: must be models x 1 or models x classes");
    }
    if (!((accuracy.array() >= 0.0).all() && (accuracy.array() <= 1.0).all())) {
      throw GenerationError("spec.accuracy: entries must lie in [0, 1]");
    }
  } else {
    if (segments.empty()) throw GenerationError("spec.segments: adversarial stream needs a segment plan");
    std::size_t total = 0;
    for (std::size_t i = 0; i < segments.size(); ++i) {
      if (segments[i].dominant_model < 0 || segments[i].dominant_model >= models) {
        throw GenerationError("spec.segments[" + std::to_string(i) + "].dominant_model: out of range");
      }
      total += segments[i].length;
    }
    if (total != rounds) {
      throw GenerationError("spec.segments: lengths sum to " + std::to_string(total) + ", expected " +
                            std::to_string(rounds));
    }
  }
  if (label_distribution.size() != 0) {
    if (label_distribution.size() != classes) {
      throw GenerationError("spec.label_distribution: needs one entry per class");
    }
    if (!is_simplex(label_distribution)) throw GenerationError("spec.label_distribution: not a simplex vector");
  }
  if (!(advice_noise >= 0.0)) throw GenerationError("spec.advice_noise: must be nonnegative");
  for (std::size_t i = 0; i < policies.size(); ++i) {
    const auto path = "spec.policies[" + std::to_string(i) + "]";
    if (!std::isfinite(policies[i].sharpness)) throw GenerationError(path + ".sharpness: must be finite");
    for (Label y : policies[i].biased_classes) {
      if (y < 0 || y >= classes) throw GenerationError(path + ".biased_classes: class out of range");
    }
  }
}

double SyntheticSpec::model_accuracy(int model, Label y) const {
  return accuracy.cols() == 1 ? accuracy(model, 0) : accuracy(model, y);
}

Vector SyntheticSpec::label_probs() const {
  if (label_distribution.size() == 0) return Vector::Constant(classes, 1.0 / classes);
  return label_distribution;
}

namespace {

Vector softmax(const Vector& scores) {
  Vector e = (scores.array() - scores.maxCoeff()).exp().matrix();
  return e / e.sum();
}

bool is_biased_class(const PolicySpec& policy, Label y) {
  return std::find(policy.biased_classes.begin(), policy.biased_classes.end(), y) != policy.biased_classes.end();
}

double top_two_margin(const Vector& row) {
  double first = -1.0;
  double second = -1.0;
  for (Index j = 0; j < row.size(); ++j) {
    if (row(j) > first) {
      second = first;
      first = row(j);
    } else if (row(j) > second) {
      second = row(j);
    }
  }
  return first - second;
}

// Accuracy column (per model) for label y under an accuracy matrix.
Vector accuracy_column(const Matrix& acc, Label y) {
  return acc.cols() == 1 ? Vector(acc.col(0)) : Vector(acc.col(y));
}

struct SegmentExpectation {
  Vector mu;      // expected loss per extended policy
  Vector margin;  // infimum of top-two margin per extended policy
};

SegmentExpectation expect_segment(const SyntheticSpec& spec, const Matrix& acc, const Vector& label_p) {
  const int k = spec.models;
  const auto n = static_cast<Index>(spec.policies.size());
  SegmentExpectation out{Vector::Zero(n + k), Vector::Constant(n + k, std::numeric_limits<double>::infinity())};
  const bool noisy = spec.advice_noise > 0.0;
  const std::uint64_t patterns = noisy ? (std::uint64_t{1} << k) : 1;
  const double pattern_p = 1.0 / static_cast<double>(patterns);
  Rng unused(0);

  for (Label y = 0; y < spec.classes; ++y) {
    const double py = label_p(y);
    if (py <= 0.0) continue;
    const Vector a = accuracy_column(acc, y);
    const Vector loss = (1.0 - a.array()).matrix();
    for (Index i = 0; i < n; ++i) {
      const auto& pol = spec.policies[static_cast<std::size_t>(i)];
      if (pol.kind == PolicyKind::random) {
        out.mu(i) += py * loss.mean();
        out.margin(i) = 0.0;
        continue;
      }
      for (std::uint64_t s = 0; s < patterns; ++s) {
        Vector noise = Vector::Zero(k);
        if (noisy)
          for (int j = 0; j < k; ++j) noise(j) = ((s >> j) & 1U) ? spec.advice_noise : -spec.advice_noise;
        const Vector row = policy_row(pol, a, y, noise, unused);
        out.mu(i) += py * pattern_p * row.dot(loss);
        out.margin(i) = std::min(out.margin(i), top_two_margin(row));
      }
    }
    for (int j = 0; j < k; ++j) {
      out.mu(n + j) += py * loss(j);
      out.margin(n + j) = 1.0;
    }
  }
  return out;
}

PolicyGaps finish_gaps(const Vector& mu, const Vector& margin) {
  PolicyGaps gaps;
  gaps.expected_losses = mu;
  Index best = 0;
  for (Index i = 1; i < mu.size(); ++i)
    if (mu(i) < mu(best)) best = i;
  gaps.best = best;
  double delta = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < mu.size(); ++i)
    if (i != best) delta = std::min(delta, mu(i) - mu(best));
  gaps.delta = delta;
  gaps.gamma = margin(best);
  return gaps;
}

}  // namespace

Matrix segment_accuracy(int models, int classes, int dominant_model) {
  Matrix acc = Matrix::Constant(models, classes, kBackgroundAccuracy);
  acc.row(dominant_model).setConstant(kDominantAccuracy);
  return acc;
}

Vector policy_row(const PolicySpec& policy, const Vector& accuracy_given_label, Label y, const Vector& noise,
                  Rng& rng) {
  const Index k = accuracy_given_label.size();
  switch (policy.kind) {
    case PolicyKind::normal:
      return softmax(policy.sharpness * (accuracy_given_label + noise));
    case PolicyKind::biased: {
      const Vector est = is_biased_class(policy, y) ? Vector((1.0 - accuracy_given_label.array()).matrix())
                                                    : accuracy_given_label;
      return softmax(policy.sharpness * (est + noise));
    }
    case PolicyKind::malicious:
      return softmax(-policy.sharpness * (accuracy_given_label + noise));
    case PolicyKind::random: {
      // Normalized unit exponentials are uniform on the simplex.
      Vector e(k);
      for (Index j = 0; j < k; ++j) e(j) = -std::log1p(-rng.uniform());
      const double total = e.sum();
      if (!(total > 0.0)) return Vector::Constant(k, 1.0 / static_cast<double>(k));
      return e / total;
    }
  }
  return Vector::Constant(k, 1.0 / static_cast<double>(k));
}

PolicyGaps exact_policy_gaps(const SyntheticSpec& spec) {
  spec.validate();
  if (spec.models > kMaxExactModels && spec.advice_noise > 0.0) {
    throw GenerationError("exact expectations support at most " + std::to_string(kMaxExactModels) +
                          " models with advice noise");
  }
  const Vector label_p = spec.label_probs();
  if (spec.regime == StreamRegime::stochastic) {
    const auto e = expect_segment(spec, spec.accuracy, label_p);
    return finish_gaps(e.mu, e.margin);
  }
  const auto m = static_cast<Index>(spec.policies.size()) + spec.models;
  Vector mu = Vector::Zero(m);
  Vector margin = Vector::Constant(m, std::numeric_limits<double>::infinity());
  for (const auto& seg : spec.segments) {
    if (seg.length == 0) continue;
    const auto e = expect_segment(spec, segment_accuracy(spec.models, spec.classes, seg.dominant_model), label_p);
    mu += (static_cast<double>(seg.length) / static_cast<double>(spec.rounds)) * e.mu;
    margin = margin.cwiseMin(e.margin);
  }
  return finish_gaps(mu, margin);
}

namespace {

StreamMeta make_meta(const SyntheticSpec& spec) {
  StreamMeta meta;
  meta.classes = spec.classes;
  meta.models = spec.models;
  meta.policies = static_cast<int>(spec.policies.size());
  meta.rounds = spec.rounds;
  meta.adversarial = spec.regime == StreamRegime::adversarial_segments;
  if (spec.models <= kMaxExactModels || spec.advice_noise == 0.0) {
    const PolicyGaps gaps = exact_policy_gaps(spec);
    if (gaps.delta <= 0.0) {
      if (spec.require_unique_best) throw GenerationError("spec.require_unique_best: best extended policy is not unique (delta = 0)");
    } else {
      meta.gap_delta = gaps.delta;
    }
    meta.best_policy_index = static_cast<std::size_t>(gaps.best);
    meta.gap_gamma = gaps.gamma;
  } else if (spec.require_unique_best) {
    throw GenerationError("spec.require_unique_best: uniqueness check needs exact expectations (too many models)");
  }
  return meta;
}

RoundRecord draw_round(const SyntheticSpec& spec, const Matrix& acc, const Vector& label_p, std::size_t t, Rng& rng) {
  const int k = spec.models;
  const int c = spec.classes;
  RoundRecord rec;
  rec.round_index = t;
  rec.true_label = static_cast<Label>(rng.categorical(label_p));
  const Vector a = accuracy_column(acc, rec.true_label);
  rec.predictions.resize(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    if (rng.uniform() < a(j)) {
      rec.predictions[static_cast<std::size_t>(j)] = rec.true_label;
    } else {
      auto wrong = static_cast<Label>(rng.below(static_cast<std::uint64_t>(c - 1)));
      if (wrong >= rec.true_label) ++wrong;
      rec.predictions[static_cast<std::size_t>(j)] = wrong;
    }
  }
  const auto n = static_cast<Index>(spec.policies.size());
  Matrix advice(n, k);
  for (Index i = 0; i < n; ++i) {
    Vector noise(k);
    for (int j = 0; j < k; ++j) noise(j) = (rng.next_u64() >> 63) ? spec.advice_noise : -spec.advice_noise;
    advice.row(i) = policy_row(spec.policies[static_cast<std::size_t>(i)], a, rec.true_label, noise, rng).transpose();
  }
  rec.advice = n > 0 ? AdviceMatrix(std::move(advice)) : AdviceMatrix::empty(k);
  return rec;
}

}  // namespace

StreamFile gen_stochastic(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.regime != StreamRegime::stochastic) throw GenerationError("gen_stochastic: spec regime is not stochastic");
  spec.validate();
  StreamFile out;
  out.meta = make_meta(spec);
  Rng rng(seed);
  const Vector label_p = spec.label_probs();
  out.records.reserve(spec.rounds);
  for (std::size_t t = 1; t <= spec.rounds; ++t) out.records.push_back(draw_round(spec, spec.accuracy, label_p, t, rng));
  return out;
}

StreamFile gen_adversarial(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.regime != StreamRegime::adversarial_segments) {
    throw GenerationError("gen_adversarial: spec regime is not adversarial_segments");
  }
  spec.validate();
  StreamFile out;
  out.meta = make_meta(spec);
  Rng rng(seed);
  const Vector label_p = spec.label_probs();
  out.records.reserve(spec.rounds);
  std::size_t t = 1;
  // The whole stream is materialized here, before any learner sees it.
  for (const auto& seg : spec.segments) {
    const Matrix acc = segment_accuracy(spec.models, spec.classes, seg.dominant_model);
    for (std::size_t s = 0; s < seg.length; ++s, ++t) out.records.push_back(draw_round(spec, acc, label_p, t, rng));
  }
  return out;
}

StreamFile generate(const SyntheticSpec& spec, std::uint64_t seed) {
  return spec.regime == StreamRegime::stochastic ? gen_stochastic(spec, seed) : gen_adversarial(spec, seed);
}

StreamFile reorder(const StreamFile& stream, std::uint64_t seed) {
  StreamFile out = stream;
  if (stream.meta.adversarial) return out;
  Rng rng(seed);
  auto& recs = out.records;
  for (std::size_t i = recs.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(recs[i - 1], recs[j]);
  }
  for (std::size_t i = 0; i < recs.size(); ++i) recs[i].round_index = i + 1;
  return out;
}

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::normal: return "normal";
    case PolicyKind::biased: return "biased";
    case PolicyKind::random: return "random";
    case PolicyKind::malicious: return "malicious";
  }
  return "normal";
}

PolicyKind policy_kind_from_string(std::string_view name) {
  if (name == "normal") return PolicyKind::normal;
  if (name == "biased") return PolicyKind::biased;
  if (name == "random") return PolicyKind::random;
  if (name == "malicious") return PolicyKind::malicious;
  throw ValidationError("unknown policy kind '" + std::string(name) + "'");
}

}  // namespace cams
