#include "cams/benchmarks.hpp"

namespace cams {

namespace {

PolicySpec policy(PolicyKind kind, double sharpness, std::vector<Label> biased = {0}) {
  return PolicySpec{kind, sharpness, std::move(biased)};
}

// Model j is an expert on class j % c (accuracy `hit`), `miss` elsewhere.
Matrix class_experts(int models, int classes, double hit, double miss) {
  Matrix acc = Matrix::Constant(models, classes, miss);
  for (int j = 0; j < models; ++j) acc(j, j % classes) = hit;
  return acc;
}

}  // namespace

SyntheticSpec standard_benchmark(std::size_t rounds) {
  SyntheticSpec s;
  s.classes = 3;
  s.models = 5;
  s.rounds = rounds;
  s.accuracy = class_experts(5, 3, 0.95, 0.35);
  s.accuracy.row(3).setConstant(0.6);
  s.accuracy.row(4).setConstant(0.5);
  s.policies = {
      policy(PolicyKind::normal, 20.0),  // dominant
      policy(PolicyKind::biased, 20.0, {0}),
      policy(PolicyKind::normal, 2.0),
      policy(PolicyKind::random, 1.0),
      policy(PolicyKind::malicious, 10.0),
      policy(PolicyKind::malicious, 3.0),
  };
  s.require_unique_best = true;
  return s;
}

SyntheticSpec malicious_benchmark(std::size_t rounds) {
  SyntheticSpec s;
  s.classes = 3;
  s.models = 4;
  s.rounds = rounds;
  s.accuracy = Matrix(4, 1);
  s.accuracy << 0.85, 0.55, 0.5, 0.45;
  s.policies = {
      policy(PolicyKind::malicious, 10.0),
      policy(PolicyKind::malicious, 4.0),
      policy(PolicyKind::random, 1.0),
      policy(PolicyKind::random, 1.0),
  };
  s.require_unique_best = true;
  return s;
}

SyntheticSpec ablation_benchmark(std::size_t rounds) {
  SyntheticSpec s;
  s.classes = 6;
  s.models = 6;
  s.rounds = rounds;
  s.accuracy = class_experts(6, 6, 0.9, 0.55);
  s.policies = {
      policy(PolicyKind::normal, 20.0),
      policy(PolicyKind::normal, 4.0),
      policy(PolicyKind::biased, 20.0, {0, 1}),
      policy(PolicyKind::random, 1.0),
      policy(PolicyKind::malicious, 10.0),
  };
  s.require_unique_best = true;
  return s;
}

SyntheticSpec context_free_benchmark(std::size_t rounds) {
  SyntheticSpec s;
  s.classes = 3;
  s.models = 5;
  s.rounds = rounds;
  s.accuracy = Matrix(5, 1);
  s.accuracy << 0.8, 0.72, 0.68, 0.6, 0.5;
  s.require_unique_best = true;
  return s;
}

SyntheticSpec vertebral_benchmark(std::size_t rounds) {
  SyntheticSpec s;
  s.classes = 3;
  s.models = 6;
  s.rounds = rounds;
  s.accuracy = class_experts(6, 3, 0.9, 0.5);
  s.accuracy.row(3).setConstant(0.7);
  s.accuracy.row(5).setConstant(0.6);
  s.policies = {
      policy(PolicyKind::normal, 12.0),
      policy(PolicyKind::normal, 6.0),
      policy(PolicyKind::normal, 3.0),
      policy(PolicyKind::biased, 12.0, {0}),
      policy(PolicyKind::biased, 12.0, {1}),
      policy(PolicyKind::biased, 12.0, {2}),
  };
  for (int i = 0; i < 6; ++i) s.policies.push_back(policy(PolicyKind::malicious, 4.0 + 2.0 * i));
  for (int i = 0; i < 5; ++i) s.policies.push_back(policy(PolicyKind::random, 1.0));
  s.require_unique_best = true;
  return s;
}

SyntheticSpec adversarial_benchmark(std::size_t rounds) {
  SyntheticSpec s;
  s.classes = 3;
  s.models = 4;
  s.rounds = rounds;
  s.regime = StreamRegime::adversarial_segments;
  s.segments = {{rounds / 2, 0}, {rounds - rounds / 2, 1}};
  s.policies = {
      policy(PolicyKind::normal, 20.0),
      policy(PolicyKind::random, 1.0),
      policy(PolicyKind::malicious, 10.0),
      policy(PolicyKind::normal, 2.0),
  };
  return s;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"standard", "malicious", "ablation", "context-free", "vertebral",
                                              "adversarial"};
  return names;
}

SyntheticSpec preset(std::string_view name, std::size_t rounds) {
  if (name == "standard") return rounds ? standard_benchmark(rounds) : standard_benchmark();
  if (name == "malicious") return rounds ? malicious_benchmark(rounds) : malicious_benchmark();
  if (name == "ablation") return rounds ? ablation_benchmark(rounds) : ablation_benchmark();
  if (name == "context-free") return rounds ? context_free_benchmark(rounds) : context_free_benchmark();
  if (name == "vertebral") return rounds ? vertebral_benchmark(rounds) : vertebral_benchmark();
  if (name == "adversarial") return rounds ? adversarial_benchmark(rounds) : adversarial_benchmark();
  throw ValidationError("unknown preset '" + std::string(name) + "'");
}

}  // namespace cams
