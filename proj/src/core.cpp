#include "cams/core.hpp"

#include <cmath>

namespace cams {

AdviceMatrix::AdviceMatrix(Matrix rows) : rows_(std::move(rows)) {
  for (Index i = 0; i < rows_.rows(); ++i) {
    if (!is_simplex(rows_.row(i))) {
      throw ValidationError("advice row " + std::to_string(i) + " is not a simplex vector (sum " +
                            std::to_string(rows_.row(i).sum()) + ", tolerance 1e-9)");
    }
  }
}

AdviceMatrix AdviceMatrix::empty(Index models) { return AdviceMatrix(Matrix(0, models), Unchecked{}); }

ModelDistribution::ModelDistribution(Vector probs) : probs_(std::move(probs)) {
  if (!is_simplex(probs_)) throw ValidationError("model distribution is not a simplex vector");
}

void RoundRecord::validate(int classes, Index policies) const {
  const auto k = static_cast<Index>(predictions.size());
  if (true_label < 0 || true_label >= classes) {
    throw ValidationError("round " + std::to_string(round_index) + ": true label " +
                          std::to_string(true_label) + " outside [0, " + std::to_string(classes) + ")");
  }
  for (Index j = 0; j < k; ++j) {
    const Label p = predictions[static_cast<std::size_t>(j)];
    if (p < 0 || p >= classes) {
      throw ValidationError("round " + std::to_string(round_index) + ": prediction of model " +
                            std::to_string(j) + " outside [0, " + std::to_string(classes) + ")");
    }
  }
  if (advice.rows() != policies || advice.cols() != k) {
    throw ValidationError("round " + std::to_string(round_index) + ": advice is " +
                          std::to_string(advice.rows()) + "x" + std::to_string(advice.cols()) +
                          ", expected " + std::to_string(policies) + "x" + std::to_string(k));
  }
}

void StreamMeta::validate() const {
  if (classes < 2) throw ValidationError("stream needs at least 2 classes");
  if (models < 2) throw ValidationError("stream needs at least 2 models");
  if (policies < 0) throw ValidationError("policy count must be nonnegative");
  if (rounds < 1) throw ValidationError("stream needs at least 1 round");
  if (gap_delta && !(*gap_delta > 0.0)) throw ValidationError("gap_delta must be positive when present");
}

AdviceMatrix extend_advice(const AdviceMatrix& advice) {
  const Index n = advice.rows();
  const Index k = advice.cols();
  Matrix out(n + k, k);
  out.topRows(n) = advice.matrix();
  out.bottomRows(k).setIdentity();
  return AdviceMatrix(std::move(out), AdviceMatrix::Unchecked{});
}

AdviceMatrix regularize_advice(const AdviceMatrix& advice) {
  Matrix out(advice.rows(), advice.cols());
  for (Index i = 0; i < advice.rows(); ++i) out.row(i) = regularize_policy_row(advice.row(i)).transpose();
  return AdviceMatrix(std::move(out), AdviceMatrix::Unchecked{});
}

Vector model_losses(std::span<const Label> predictions, Label true_label, int classes) {
  if (true_label < 0 || true_label >= classes) throw ValidationError("true label out of range");
  Vector losses(static_cast<Index>(predictions.size()));
  for (std::size_t j = 0; j < predictions.size(); ++j) {
    if (predictions[j] < 0 || predictions[j] >= classes) throw ValidationError("prediction out of range");
    losses(static_cast<Index>(j)) = predictions[j] == true_label ? 0.0 : 1.0;
  }
  return losses;
}

ModelDistribution induced_model_distribution(const Vector& weights, const AdviceMatrix& advice) {
  return ModelDistribution(induced_model_vector(weights, advice.matrix()));
}

double label_mass(const Vector& w, std::span<const Label> predictions, Label y) {
  if (static_cast<std::size_t>(w.size()) != predictions.size()) {
    throw ValidationError("label_mass: distribution and predictions differ in length");
  }
  double mass = 0.0;
  for (std::size_t j = 0; j < predictions.size(); ++j) {
    if (predictions[j] == y) mass += w(static_cast<Index>(j));
  }
  return mass;
}

}  // namespace cams
