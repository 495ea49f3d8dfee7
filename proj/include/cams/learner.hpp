#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>

#include "cams/core.hpp"
#include "cams/rng.hpp"

namespace cams {

struct RoundOutcome {
  int chosen_model = 0;
  bool queried = false;
  // Probability the label was requested with, after any external scaling.
  double query_prob = 0.0;
  // Loss of the recommended model, recorded whether or not the label was queried.
  int learner_loss = 0;
  std::optional<Vector> policy_weights;
};

// Common surface of every online active model-selection learner.
//
// A learner owns its rng and its label budget. Each call to step() consumes
// one round: it recommends a model, decides whether to query, and updates
// internal state only when the label was actually obtained.
class Learner {
 public:
  explicit Learner(std::size_t budget) : budget_(budget) {}
  virtual ~Learner() = default;

  virtual RoundOutcome step(const RoundRecord& record) = 0;
  virtual std::string name() const = 0;

  std::size_t budget() const { return budget_; }
  std::size_t cost_spent() const { return cost_spent_; }

  // Multiplies every subsequent query probability by `scale`; the product is
  // clipped to [0, 1]. Used by the early-budget scaling protocol.
  void set_query_scale(double scale) { query_scale_ = std::max(0.0, scale); }
  double query_scale() const { return query_scale_; }

 protected:
  double scaled(double q) const { return std::clamp(q * query_scale_, 0.0, 1.0); }

  // Bernoulli(q) draw followed by the budget gate. The draw always happens
  // so rng consumption does not depend on the remaining budget.
  bool draw_query(double q, Rng& rng) {
    const bool coin = rng.bernoulli(q);
    if (coin && cost_spent_ < budget_) {
      ++cost_spent_;
      return true;
    }
    return false;
  }

  void restore_cost(std::size_t cost) { cost_spent_ = cost; }

 private:
  std::size_t budget_;
  std::size_t cost_spent_ = 0;
  double query_scale_ = 1.0;
};

}  // namespace cams
