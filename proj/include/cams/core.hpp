#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cams {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;
using Index = Eigen::Index;

using Label = int;
using Labels = std::vector<Label>;

inline constexpr double kSimplexTolerance = 1e-9;

// Bad caller-supplied data: malformed advice, out-of-range labels, shape
// mismatches.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Invalid learner or experiment configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A broken internal invariant (non-finite losses and the like).
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

template <typename Derived>
bool is_simplex(const Eigen::MatrixBase<Derived>& v, double tol = kSimplexTolerance) {
  if (v.size() == 0) return false;
  for (Index j = 0; j < v.size(); ++j) {
    if (!(v(j) >= 0.0)) return false;  // also rejects NaN
  }
  return std::abs(static_cast<double>(v.sum()) - 1.0) <= tol;
}

// Row-stochastic matrix: one row per policy, one column per model.
// Rows are validated on construction and never renormalized.
class AdviceMatrix {
 public:
  AdviceMatrix() = default;
  explicit AdviceMatrix(Matrix rows);

  // A 0 x k advice matrix (no base policies).
  static AdviceMatrix empty(Index models);

  Index rows() const { return rows_.rows(); }
  Index cols() const { return rows_.cols(); }
  const Matrix& matrix() const { return rows_; }
  auto row(Index i) const { return rows_.row(i); }

  friend bool operator==(const AdviceMatrix& a, const AdviceMatrix& b) {
    return a.rows_.rows() == b.rows_.rows() && a.rows_.cols() == b.rows_.cols() && a.rows_ == b.rows_;
  }

 private:
  struct Unchecked {};
  AdviceMatrix(Matrix rows, Unchecked) : rows_(std::move(rows)) {}
  friend AdviceMatrix extend_advice(const AdviceMatrix&);
  friend AdviceMatrix regularize_advice(const AdviceMatrix&);

  Matrix rows_;
};

// A probability vector over models.
class ModelDistribution {
 public:
  explicit ModelDistribution(Vector probs);

  const Vector& probs() const { return probs_; }
  Index size() const { return probs_.size(); }
  double operator[](Index j) const { return probs_(j); }

 private:
  Vector probs_;
};

// Exponential-weights distribution over the (extended) policy set together
// with the cumulative losses it was computed from.
struct PolicyWeights {
  Vector weights;
  Vector cumulative_losses;
};

// One stream step. The context is represented only by its effects: the
// models' predictions and the base policies' advice.
struct RoundRecord {
  Labels predictions;
  Label true_label = 0;
  AdviceMatrix advice;
  std::size_t round_index = 1;

  // Throws ValidationError unless labels are in [0, classes) and the advice
  // matrix is policies x predictions.size().
  void validate(int classes, Index policies) const;

  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

struct StreamMeta {
  int classes = 2;
  int models = 2;
  int policies = 0;
  std::size_t rounds = 1;
  // Oblivious-adversary streams keep their order across realizations.
  bool adversarial = false;
  // Ground truth from the generator; never consumed by learners.
  std::optional<std::size_t> best_policy_index;
  std::optional<double> gap_delta;
  std::optional<double> gap_gamma;

  void validate() const;

  friend bool operator==(const StreamMeta&, const StreamMeta&) = default;
};

// Appends the k constant policies. Base policies keep indices 0..n-1 and the
// constant policy for model j sits at index n + j.
AdviceMatrix extend_advice(const AdviceMatrix& advice);

// 0-1 loss of every model against the true label.
Vector model_losses(std::span<const Label> predictions, Label true_label, int classes);

// w = sum_i weights_i * advice.row(i).
template <typename WeightsDerived, typename AdviceDerived>
Vector induced_model_vector(const Eigen::MatrixBase<WeightsDerived>& weights,
                            const Eigen::MatrixBase<AdviceDerived>& advice) {
  if (weights.size() != advice.rows()) {
    throw ValidationError("weights length " + std::to_string(weights.size()) +
                          " does not match advice rows " + std::to_string(advice.rows()));
  }
  return (advice.transpose() * weights).template cast<double>();
}

ModelDistribution induced_model_distribution(const Vector& weights, const AdviceMatrix& advice);

// Probability mass of models predicting label y; 1 - mass is the expected
// loss if y were the true label.
double label_mass(const Vector& w, std::span<const Label> predictions, Label y);

// Shrinks a simplex row toward uniform by its squared distance from uniform:
// out_j = (row_j + eta) / (1 + k * eta), eta = sum_j (row_j - 1/k)^2.
template <typename Derived>
VectorX<typename Derived::Scalar> regularize_policy_row(const Eigen::MatrixBase<Derived>& row) {
  using Scalar = typename Derived::Scalar;
  if (!is_simplex(row)) throw ValidationError("regularize_policy_row: input is not a simplex vector");
  const auto k = static_cast<Scalar>(row.size());
  const Scalar eta = (row.array() - Scalar(1) / k).square().sum();
  VectorX<Scalar> out(row.size());
  for (Index j = 0; j < row.size(); ++j) out(j) = (row(j) + eta) / (Scalar(1) + k * eta);
  return out;
}

AdviceMatrix regularize_advice(const AdviceMatrix& advice);

}  // namespace cams
