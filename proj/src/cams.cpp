#include "cams/cams.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

#include "cams/baselines.hpp"
#include "cams/format.hpp"

namespace cams {

void CamsConfig::validate() const {
  if (classes < 2) throw ConfigError("cams: classes must be >= 2");
  if (horizon < 1) throw ConfigError("cams: horizon_T must be >= 1");
  if (forced_query_prob && !(*forced_query_prob > 0.0 && *forced_query_prob <= 1.0)) {
    throw ConfigError("cams: forced query probability must lie in (0, 1]");
  }
  if (fixed_rate && !(*fixed_rate > 0.0 && std::isfinite(*fixed_rate))) {
    throw ConfigError("cams: fixed rate must be positive and finite");
  }
}

double disagreement(std::span<const Label> predictions, const Vector& w, int classes) {
  if (classes < 2) throw ConfigError("disagreement: classes must be >= 2");
  constexpr double kEndpointTol = 1e-12;
  const double log_c = std::log(static_cast<double>(classes));
  double sum = 0.0;
  for (Label y = 0; y < classes; ++y) {
    double lbar = 1.0 - label_mass(w, predictions, y);
    if (lbar <= kEndpointTol) lbar = 0.0;
    if (lbar >= 1.0 - kEndpointTol) lbar = 1.0;
    if (lbar > 0.0 && lbar < 1.0) sum += lbar * (-std::log(lbar) / log_c);
  }
  return sum / classes;
}

double query_probability(double disagreement_value, std::size_t t) {
  if (t < 1) throw ValidationError("query_probability: round index must be >= 1");
  return std::max(1.0 / std::sqrt(static_cast<double>(t)), disagreement_value);
}

double set_rate_stochastic(std::size_t t, Index policy_count) {
  if (policy_count < 2) throw ConfigError("learning rate needs at least 2 policies");
  if (t < 1) throw ValidationError("set_rate_stochastic: round index must be >= 1");
  return std::sqrt(std::log(static_cast<double>(policy_count)) / static_cast<double>(t));
}

double set_rate_adversarial(std::size_t t, std::size_t horizon, Index policy_count, double rho, int classes) {
  if (classes < 2) throw ConfigError("adversarial rate needs at least 2 classes");
  if (policy_count < 2) throw ConfigError("learning rate needs at least 2 policies");
  if (t < 1 || horizon < 1) throw ValidationError("set_rate_adversarial: rounds must be >= 1");
  const double c = classes;
  const double inner = 1.0 / std::sqrt(static_cast<double>(t)) + rho / (c * c * std::log(c));
  return std::sqrt(inner) * std::sqrt(std::log(static_cast<double>(policy_count)) / static_cast<double>(horizon));
}

double update_rho(CamsState& state, const Vector& w, std::span<const Label> predictions) {
  // Labels nobody predicts carry zero mass, so scanning predicted labels suffices.
  double best = 0.0;
  for (Label y : predictions) best = std::max(best, label_mass(w, predictions, y));
  state.max_label_mass_seen = std::min(1.0, std::max(state.max_label_mass_seen, best));
  state.rho = 1.0 - state.max_label_mass_seen;
  return state.rho;
}

PolicyWeights policy_weights(const Vector& cumulative_losses, double eta) {
  if (!cumulative_losses.allFinite()) throw InternalError("policy_weights: non-finite cumulative loss");
  if (cumulative_losses.size() == 0) throw InternalError("policy_weights: empty policy set");
  const double shift = cumulative_losses.minCoeff();
  Vector w = (-eta * (cumulative_losses.array() - shift)).exp().matrix();
  w /= w.sum();
  return {std::move(w), cumulative_losses};
}

namespace {

Index argmax_lowest(const auto& v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = i;
  return best;
}

}  // namespace

int recommend(Regime regime, Variant variant, const Vector& weights, const AdviceMatrix& advice_ext, Rng& rng) {
  if (weights.size() != advice_ext.rows()) throw ValidationError("recommend: weights/advice size mismatch");
  if (regime == Regime::adversarial) {
    const Index i = rng.categorical(weights);
    return static_cast<int>(rng.categorical(advice_ext.row(i)));
  }
  switch (variant) {
    case Variant::max: {
      const Index i = rng.argmax(weights);
      return static_cast<int>(rng.argmax(advice_ext.row(i)));
    }
    case Variant::random_policy: {
      const Index i = rng.categorical(weights);
      return static_cast<int>(rng.argmax(advice_ext.row(i)));
    }
    case Variant::standard:
    case Variant::conventional:
      break;
  }
  return static_cast<int>(rng.argmax(induced_model_vector(weights, advice_ext.matrix())));
}

int recommend_at(Regime regime, Variant variant, const Vector& weights, const AdviceMatrix& advice_ext,
                 double policy_quantile, double model_quantile) {
  if (weights.size() != advice_ext.rows()) throw ValidationError("recommend: weights/advice size mismatch");
  if (regime == Regime::adversarial) {
    const Index i = Rng::categorical_at(weights, policy_quantile);
    return static_cast<int>(Rng::categorical_at(advice_ext.row(i), model_quantile));
  }
  switch (variant) {
    case Variant::max:
      return static_cast<int>(argmax_lowest(advice_ext.row(argmax_lowest(weights))));
    case Variant::random_policy:
      return static_cast<int>(argmax_lowest(advice_ext.row(Rng::categorical_at(weights, policy_quantile))));
    case Variant::standard:
    case Variant::conventional:
      break;
  }
  return static_cast<int>(argmax_lowest(induced_model_vector(weights, advice_ext.matrix())));
}

CamsLearner::CamsLearner(CamsConfig config, int models, int policies)
    : CamsLearner(config, models, policies, CamsState{}) {
  state_.cumulative_policy_losses = Vector::Zero(policy_count());
  state_.rng = Rng(config_.seed);
}

CamsLearner::CamsLearner(CamsConfig config, int models, int policies, CamsState state)
    : Learner(config.budget), config_(std::move(config)), models_(models), policies_(policies),
      state_(std::move(state)) {
  config_.validate();
  if (models < 2) throw ConfigError("cams: at least 2 models required");
  if (policies < 0) throw ConfigError("cams: policy count must be nonnegative");
  const Index m = config_.variant == Variant::conventional ? policies : policies + models;
  if (m < 2) throw ConfigError("cams: policy set needs at least 2 members (conventional variant with < 2 policies?)");
  if (state_.cumulative_policy_losses.size() == 0) {
    state_.cumulative_policy_losses = Vector::Zero(m);
  } else if (state_.cumulative_policy_losses.size() != m) {
    throw ValidationError("cams: snapshot has " + std::to_string(state_.cumulative_policy_losses.size()) +
                          " policy losses, expected " + std::to_string(m));
  }
  if (state_.cost_spent > config_.budget) throw ValidationError("cams: snapshot cost exceeds budget");
  restore_cost(state_.cost_spent);
}

std::string CamsLearner::name() const {
  switch (config_.variant) {
    case Variant::standard: return "cams";
    case Variant::max: return "cams-max";
    case Variant::random_policy: return "cams-random-policy";
    case Variant::conventional: return "cams-conventional";
  }
  return "cams";
}

RoundOutcome CamsLearner::step(const RoundRecord& record) {
  record.validate(config_.classes, policies_);
  if (static_cast<int>(record.predictions.size()) != models_) {
    throw ValidationError("cams: record has " + std::to_string(record.predictions.size()) + " models, expected " +
                          std::to_string(models_));
  }
  if (record.round_index != state_.round + 1) {
    throw ValidationError("cams: round index " + std::to_string(record.round_index) + " follows round " +
                          std::to_string(state_.round));
  }
  const std::size_t t = record.round_index;
  state_.round = t;

  AdviceMatrix advice = config_.variant == Variant::conventional ? record.advice : extend_advice(record.advice);
  if (config_.regularize_advice) advice = regularize_advice(advice);
  const Index m = advice.rows();

  double eta = 0.0;
  if (config_.fixed_rate) {
    eta = *config_.fixed_rate;
  } else if (config_.regime == Regime::stochastic) {
    eta = set_rate_stochastic(t, m);
  } else {
    // rho here still reflects rounds 1..t-1 only.
    eta = set_rate_adversarial(std::min(t, config_.horizon), config_.horizon, m, state_.rho, config_.classes);
  }

  const PolicyWeights pw = policy_weights(state_.cumulative_policy_losses, eta);
  const Vector w = induced_model_vector(pw.weights, advice.matrix());
  const int chosen = recommend(config_.regime, config_.variant, pw.weights, advice, state_.rng);

  RoundOutcome out;
  out.chosen_model = chosen;
  out.learner_loss = record.predictions[static_cast<std::size_t>(chosen)] == record.true_label ? 0 : 1;
  if (config_.record_weights) out.policy_weights = pw.weights;

  const auto& preds = record.predictions;
  const bool degenerate = std::all_of(preds.begin(), preds.end(), [&](Label p) { return p == preds.front(); });
  if (degenerate) {
    out.query_prob = 0.0;
    out.queried = false;
    return out;
  }

  double q = 0.0;
  if (config_.forced_query_prob) {
    q = *config_.forced_query_prob;
  } else {
    switch (config_.query_rule) {
      case QueryRule::entropy:
        q = query_probability(disagreement(preds, w, config_.classes), t);
        break;
      case QueryRule::variance:
        q = mp_query_probability(mp_variance(preds, w, config_.classes), mp_rate(t, models_));
        break;
      case QueryRule::random:
        q = rs_query(t, config_.budget, config_.horizon);
        break;
    }
  }
  q = scaled(q);
  out.query_prob = q;
  out.queried = q > 0.0 && draw_query(q, state_.rng);

  if (out.queried) {
    state_.cost_spent = cost_spent();
    const Vector estimate = model_losses(preds, record.true_label, config_.classes) / q;
    state_.cumulative_policy_losses += advice.matrix() * estimate;
  }
  update_rho(state_, w, preds);
  return out;
}

std::string CamsLearner::snapshot() const { return serialize_snapshot(state_); }

std::string_view to_string(Regime regime) {
  return regime == Regime::stochastic ? "stochastic" : "adversarial";
}

std::string_view to_string(Variant variant) {
  switch (variant) {
    case Variant::standard: return "standard";
    case Variant::max: return "max";
    case Variant::random_policy: return "random_policy";
    case Variant::conventional: return "conventional";
  }
  return "standard";
}

std::string_view to_string(QueryRule rule) {
  switch (rule) {
    case QueryRule::entropy: return "entropy";
    case QueryRule::variance: return "variance";
    case QueryRule::random: return "random";
  }
  return "entropy";
}

std::string serialize_snapshot(const CamsState& state) {
  std::ostringstream os;
  os << "schema=" << kSnapshotSchema << '\n';
  os << "round=" << state.round << '\n';
  os << "cost_spent=" << state.cost_spent << '\n';
  os << "rho=" << format_real(state.rho) << '\n';
  os << "max_label_mass_seen=" << format_real(state.max_label_mass_seen) << '\n';
  os << "cumulative_policy_losses=";
  for (Index i = 0; i < state.cumulative_policy_losses.size(); ++i) {
    if (i) os << ' ';
    os << format_real(state.cumulative_policy_losses(i));
  }
  os << '\n';
  os << "rng=" << state.rng.serialize() << '\n';
  return os.str();
}

CamsState parse_snapshot(std::string_view text) {
  CamsState state;
  std::istringstream is{std::string(text)};
  std::string line;
  std::unordered_set<std::string> seen;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError("snapshot: malformed line '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (first) {
      if (key != "schema" || value != kSnapshotSchema) {
        throw ValidationError("snapshot: expected schema " + std::string(kSnapshotSchema) + ", found '" + line + "'");
      }
      first = false;
      seen.insert(key);
      continue;
    }
    try {
      if (key == "round") {
        state.round = parse_count(value);
      } else if (key == "cost_spent") {
        state.cost_spent = parse_count(value);
      } else if (key == "rho") {
        state.rho = parse_real(value);
      } else if (key == "max_label_mass_seen") {
        state.max_label_mass_seen = parse_real(value);
      } else if (key == "cumulative_policy_losses") {
        std::vector<double> values;
        std::istringstream vs(value);
        std::string tok;
        while (vs >> tok) values.push_back(parse_real(tok));
        state.cumulative_policy_losses = Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
      } else if (key == "rng") {
        state.rng = Rng::deserialize(value);
      } else {
        throw ValidationError("snapshot: unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument& e) {
      throw ValidationError("snapshot: bad value for '" + key + "': " + e.what());
    }
    seen.insert(key);
  }
  for (const char* key : {"schema", "round", "cost_spent", "rho", "max_label_mass_seen", "cumulative_policy_losses", "rng"}) {
    if (!seen.count(key)) throw ValidationError(std::string("snapshot: missing key '") + key + "'");
  }
  if (!(state.rho >= 0.0 && state.rho <= 1.0)) throw ValidationError("snapshot: rho outside [0, 1]");
  return state;
}

}  // namespace cams
