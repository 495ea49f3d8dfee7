#include "cams/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "cams/cams.hpp"
#include "cams/datagen.hpp"

namespace cams {

double rs_query(std::size_t /*t*/, std::size_t budget, std::size_t horizon) {
  if (horizon == 0) throw ConfigError("rs_query: horizon must be >= 1");
  return std::clamp(static_cast<double>(budget) / static_cast<double>(horizon), 0.0, 1.0);
}

double mp_variance(std::span<const Label> predictions, const Vector& w, int classes) {
  double v = 0.0;
  for (Label y = 0; y < classes; ++y) {
    const double lbar = 1.0 - label_mass(w, predictions, y);
    v = std::max(v, lbar * (1.0 - lbar));
  }
  // Round-off can leave a ~1e-17 residue when every lbar is 0 or 1.
  return v < 1e-15 ? 0.0 : v;
}

double mp_rate(std::size_t t, Index models) {
  if (t < 1) throw ValidationError("mp_rate: round index must be >= 1");
  return std::sqrt(std::log(static_cast<double>(models)) / static_cast<double>(t));
}

double mp_query_probability(double variance, double eta) {
  if (variance == 0.0) return 0.0;
  return std::min(1.0, std::max(variance, eta));
}

double qbc_vote_entropy(std::span<const Label> predictions, Index models, int classes) {
  if (models < 2 || classes < 2) throw ConfigError("qbc_vote_entropy: needs k >= 2 and c >= 2");
  std::vector<int> votes(static_cast<std::size_t>(classes), 0);
  for (Label p : predictions) {
    if (p < 0 || p >= classes) throw ValidationError("qbc_vote_entropy: prediction out of range");
    ++votes[static_cast<std::size_t>(p)];
  }
  const double k = static_cast<double>(models);
  double h = 0.0;
  for (int v : votes) {
    if (v == 0) continue;
    const double f = v / k;
    h -= f * std::log(f);
  }
  const double norm = std::log(static_cast<double>(std::min<Index>(models, classes)));
  return std::clamp(h / norm, 0.0, 1.0);
}

int ftl_recommend(const FtlState& state, Rng& rng) {
  return static_cast<int>(rng.argmin(state.queried_model_losses));
}

Index IwalState::survivors() const { return std::count(surviving.begin(), surviving.end(), true); }

double iwal_threshold(std::size_t t, double c0) {
  if (t < 1) throw ValidationError("iwal_threshold: round index must be >= 1");
  const double tt = static_cast<double>(t);
  return c0 * std::sqrt(std::log(tt) / tt);
}

double iwal_query_probability(const IwalState& state, std::span<const Label> predictions, int /*classes*/) {
  // Under 0-1 loss the largest loss gap over labels is 1 exactly when two
  // survivors predict different labels.
  std::optional<Label> first;
  for (std::size_t j = 0; j < predictions.size(); ++j) {
    if (!state.surviving[j]) continue;
    if (!first) {
      first = predictions[j];
    } else if (predictions[j] != *first) {
      return 1.0;
    }
  }
  return 0.0;
}

void iwal_prune(IwalState& state, double threshold) {
  const double denom = std::max<double>(1.0, static_cast<double>(state.rounds_seen));
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < state.surviving.size(); ++j)
    if (state.surviving[j]) best = std::min(best, state.weighted_errors(static_cast<Index>(j)) / denom);
  for (std::size_t j = 0; j < state.surviving.size(); ++j) {
    if (!state.surviving[j]) continue;
    if (state.weighted_errors(static_cast<Index>(j)) / denom - best > threshold) state.surviving[j] = false;
  }
}

void iwal_update(IwalState& state, const Vector* losses, double query_prob) {
  ++state.rounds_seen;
  if (losses) state.weighted_errors += *losses / query_prob;
  // ln(1) = 0 would make the first threshold zero; pruning starts at t = 2.
  if (state.rounds_seen >= 2) iwal_prune(state, iwal_threshold(state.rounds_seen, state.c0));
}

Vector ContextualScoreState::exp4_weights() const {
  const Index n = cumulative_policy_losses.size();
  if (n == 0) return Vector();
  if (n == 1) return Vector::Ones(1);
  const double t = static_cast<double>(std::max<std::size_t>(1, rounds_seen));
  const double eta = std::sqrt(std::log(static_cast<double>(n)) / t);
  return policy_weights(cumulative_policy_losses, eta).weights;
}

Vector ContextualScoreState::reward_simplex() const {
  const double total = cumulative_rewards.sum();
  if (total <= 0.0) return Vector::Constant(cumulative_rewards.size(), 1.0 / cumulative_rewards.size());
  return cumulative_rewards / total;
}

Vector exp4_model_vector(const ContextualScoreState& state, const AdviceMatrix& advice) {
  if (advice.rows() == 0) return Vector::Constant(advice.cols(), 1.0 / advice.cols());
  return induced_model_vector(state.exp4_weights(), advice.matrix());
}

int contextual_recommend(const Vector& reward_simplex, const Vector& model_vector, Rng& rng) {
  if (reward_simplex.size() != model_vector.size()) throw ValidationError("contextual_recommend: size mismatch");
  Vector product = reward_simplex.cwiseProduct(model_vector);
  const double total = product.sum();
  if (!(total > 0.0)) return static_cast<int>(rng.below(static_cast<std::uint64_t>(product.size())));
  product /= total;
  return static_cast<int>(rng.argmax(product));
}

BaselineLearner::BaselineLearner(BaselineConfig config, int models, int policies)
    : Learner(config.budget), config_(config), models_(models), policies_(policies), rng_(config.seed),
      ftl_(models), iwal_(models, config.iwal_c0), contextual_(models, policies), mp_losses_(Vector::Zero(models)) {
  if (config_.classes < 2) throw ConfigError("baseline: classes must be >= 2");
  if (models < 2) throw ConfigError("baseline: at least 2 models required");
  if (config_.horizon < 1) throw ConfigError("baseline: horizon must be >= 1");
  if (!(config_.iwal_c0 > 0.0)) throw ConfigError("baseline: iwal c0 must be positive");
}

std::string BaselineLearner::name() const { return std::string(to_string(config_.kind)); }

int BaselineLearner::pick(const RoundRecord& record, Vector& w) {
  switch (config_.kind) {
    case BaselineKind::mp:
      w = policy_weights(mp_losses_, mp_rate(round_, models_)).weights;
      return static_cast<int>(rng_.argmax(w));
    case BaselineKind::cqbc:
    case BaselineKind::ciwal:
      return contextual_recommend(contextual_.reward_simplex(), exp4_model_vector(contextual_, record.advice), rng_);
    case BaselineKind::rs:
    case BaselineKind::qbc:
    case BaselineKind::iwal:
      break;
  }
  return ftl_recommend(ftl_, rng_);
}

double BaselineLearner::query_prob(const RoundRecord& record, const Vector& w) const {
  const auto& preds = record.predictions;
  switch (config_.kind) {
    case BaselineKind::rs:
      return rs_query(round_, config_.budget, config_.horizon);
    case BaselineKind::mp:
      return mp_query_probability(mp_variance(preds, w, config_.classes), mp_rate(round_, models_));
    case BaselineKind::qbc:
    case BaselineKind::cqbc:
      return qbc_vote_entropy(preds, models_, config_.classes);
    case BaselineKind::iwal:
    case BaselineKind::ciwal:
      return iwal_query_probability(iwal_, preds, config_.classes);
  }
  return 0.0;
}

RoundOutcome BaselineLearner::step(const RoundRecord& record) {
  record.validate(config_.classes, policies_);
  if (static_cast<int>(record.predictions.size()) != models_) throw ValidationError("baseline: model count mismatch");
  ++round_;
  contextual_.rounds_seen = round_;

  Vector w;
  RoundOutcome out;
  out.chosen_model = pick(record, w);
  out.learner_loss = record.predictions[static_cast<std::size_t>(out.chosen_model)] == record.true_label ? 0 : 1;

  const double q = scaled(query_prob(record, w));
  out.query_prob = q;
  out.queried = q > 0.0 && draw_query(q, rng_);

  const bool uses_iwal = config_.kind == BaselineKind::iwal || config_.kind == BaselineKind::ciwal;
  if (!out.queried) {
    if (uses_iwal) iwal_update(iwal_, nullptr, q);
    return out;
  }

  const Vector losses = model_losses(record.predictions, record.true_label, config_.classes);
  ftl_.observe(losses);
  if (uses_iwal) iwal_update(iwal_, &losses, q);
  if (config_.kind == BaselineKind::mp) mp_losses_ += losses / q;
  if (config_.kind == BaselineKind::cqbc || config_.kind == BaselineKind::ciwal) {
    contextual_.cumulative_rewards += (1.0 - losses.array()).matrix();
    if (policies_ > 0) contextual_.cumulative_policy_losses += record.advice.matrix() * (losses / q);
  }
  return out;
}

std::string_view to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::rs: return "rs";
    case BaselineKind::mp: return "mp";
    case BaselineKind::qbc: return "qbc";
    case BaselineKind::iwal: return "iwal";
    case BaselineKind::cqbc: return "cqbc";
    case BaselineKind::ciwal: return "ciwal";
  }
  return "rs";
}

Vector hindsight_policy_losses(const StreamFile& stream) {
  const Index k = stream.meta.models;
  const Index n = stream.meta.policies;
  Vector totals = Vector::Zero(n > 0 ? n : k);
  for (const auto& rec : stream.records) {
    const Vector losses = model_losses(rec.predictions, rec.true_label, stream.meta.classes);
    if (n > 0) {
      totals += rec.advice.matrix() * losses;
    } else {
      totals += losses;
    }
  }
  return totals;
}

Index hindsight_best_policy(const StreamFile& stream) {
  const Vector totals = hindsight_policy_losses(stream);
  Index best = 0;
  for (Index i = 1; i < totals.size(); ++i)
    if (totals(i) < totals(best)) best = i;
  return best;
}

OracleLearner::OracleLearner(Index policy_index, int classes, std::size_t budget, std::uint64_t seed)
    : Learner(budget), policy_(policy_index), classes_(classes), rng_(seed) {
  if (classes < 2) throw ConfigError("oracle: classes must be >= 2");
  if (policy_index < 0) throw ConfigError("oracle: policy index must be nonnegative");
}

RoundOutcome OracleLearner::step(const RoundRecord& record) {
  ++round_;
  const Index k = static_cast<Index>(record.predictions.size());
  Vector row;
  if (record.advice.rows() > 0) {
    if (policy_ >= record.advice.rows()) throw ValidationError("oracle: policy index out of range");
    row = record.advice.row(policy_).transpose();
  } else {
    if (policy_ >= k) throw ValidationError("oracle: model index out of range");
    row = Vector::Unit(k, policy_);
  }
  RoundOutcome out;
  out.chosen_model = static_cast<int>(rng_.argmax(row));
  out.learner_loss = record.predictions[static_cast<std::size_t>(out.chosen_model)] == record.true_label ? 0 : 1;
  const auto& preds = record.predictions;
  if (std::all_of(preds.begin(), preds.end(), [&](Label p) { return p == preds.front(); })) return out;
  const double q = scaled(query_probability(disagreement(preds, row, classes_), round_));
  out.query_prob = q;
  out.queried = q > 0.0 && draw_query(q, rng_);
  return out;
}

}  // namespace cams
