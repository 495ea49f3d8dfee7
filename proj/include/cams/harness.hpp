#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cams/baselines.hpp"
#include "cams/cams.hpp"
#include "cams/datagen.hpp"
#include "cams/learner.hpp"

namespace cams {

struct Trajectory {
  std::vector<int> chosen_model;
  std::vector<std::uint8_t> queried;
  std::vector<double> query_prob;
  std::vector<int> learner_loss;
  std::vector<double> cumulative_loss;
  std::vector<std::size_t> cumulative_queries;

  std::size_t size() const { return chosen_model.size(); }
  void append(const RoundOutcome& outcome);

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

// A learner as named on the command line, plus the knobs the harness can set.
struct LearnerSpec {
  std::string name;  // rs|mp|qbc|iwal|cqbc|ciwal|oracle|cams|cams-max|cams-random-policy|cams-conventional
  Regime regime = Regime::stochastic;
  bool regularize_advice = false;
  QueryRule query_rule = QueryRule::entropy;
  double iwal_c0 = 8.0;
  // Column label in reports; defaults to `name`.
  std::string label;

  std::string display_name() const { return label.empty() ? name : label; }
};

const std::vector<std::string>& learner_names();

// Throws ConfigError listing the valid names when `name` is unknown.
LearnerSpec parse_learner(std::string_view name);

// The oracle needs the full stream to pick its policy in hindsight.
std::unique_ptr<Learner> make_learner(const LearnerSpec& spec, const StreamFile& stream, std::size_t budget,
                                      std::uint64_t seed);

// s = ((b - b_early) / (T - T/10)) * ((T/10) / b_early).
double scaling_parameter(double budget, double budget_early, double horizon);

// Feeds rounds [first, last) of the stream to the learner, appending to
// `trajectory`. Records are re-indexed so the learner sees 1..T in order.
void feed(Learner& learner, const StreamFile& stream, std::size_t first, std::size_t last, Trajectory& trajectory);

// One seeded pass of a learner over a stream. With `scale_early`, the
// learner's query probabilities are rescaled after the first T/10 rounds
// according to its early spending (not applied to rs and oracle).
Trajectory run_realization(const LearnerSpec& spec, const StreamFile& stream, std::size_t budget, std::uint64_t seed,
                           bool scale_early = false);

// L_t(learner) - L_t(best constant model in hindsight on this stream).
std::vector<double> relative_cumulative_loss(const Trajectory& trajectory, const StreamFile& stream);

// Produces the stream for realization r.
using StreamSource = std::function<StreamFile(std::size_t realization)>;

// Same stream object every realization.
StreamSource fixed_source(StreamFile stream);
// Fresh random order per realization (kept fixed for adversarial streams).
StreamSource reordered_source(StreamFile stream, std::uint64_t master_seed);
// Fresh synthetic stream per realization.
StreamSource synthetic_source(SyntheticSpec spec, std::uint64_t master_seed);

// Per-round mean and empirical 5% / 95% quantiles across realizations.
// lo/hi are empty when fewer than two realizations were run.
struct Band {
  std::vector<double> mean;
  std::vector<double> lo;
  std::vector<double> hi;

  bool has_interval() const { return !lo.empty(); }
  friend bool operator==(const Band&, const Band&) = default;
};

// Linear-interpolation (type 7) empirical quantile of unsorted values.
double empirical_quantile(std::vector<double> values, double p);

// Aggregates series of equal length (one per realization).
Band aggregate(const std::vector<std::vector<double>>& series);

struct LearnerCurves {
  std::string name;
  Band cumulative_loss;
  Band queries;
  Band rcl;
  std::vector<double> final_losses;   // per realization
  std::vector<double> final_queries;  // per realization
  std::vector<std::uint64_t> seeds;   // per realization
  std::vector<Trajectory> trajectories;  // only when requested
};

struct ExperimentOptions {
  std::size_t realizations = 50;
  std::size_t budget = 0;
  std::uint64_t master_seed = 0;
  bool scale_early = false;
  // 0 selects hardware concurrency, capped by CAMS_BENCH_THREADS.
  unsigned threads = 0;
  bool keep_trajectories = false;
};

struct ExperimentReport {
  std::size_t realizations = 0;
  std::size_t rounds = 0;
  std::size_t budget = 0;
  std::vector<LearnerCurves> learners;

  const LearnerCurves& at(std::string_view name) const;
};

// Within one realization every learner consumes the identical stream.
// Realizations run concurrently; aggregation is ordered by realization index.
ExperimentReport run_experiment(const std::vector<LearnerSpec>& learners, const StreamSource& source,
                                const ExperimentOptions& options);

struct SweepTable {
  std::vector<std::size_t> budgets;
  std::vector<std::string> learners;
  // [learner][budget]
  std::vector<std::vector<double>> mean;
  std::vector<std::vector<double>> lo;
  std::vector<std::vector<double>> hi;
};

// Final cumulative loss per learner for each budget.
SweepTable budget_sweep(const std::vector<LearnerSpec>& learners, const StreamSource& source,
                        const std::vector<std::size_t>& budgets, const ExperimentOptions& options);

// Worker count honoring CAMS_BENCH_THREADS.
unsigned worker_threads(unsigned requested);

// CSV emitters. Curve files: "round,<l>_mean,<l>_lo,<l>_hi,..." (lo/hi
// omitted without intervals). Sweep file: "budget,<l>_mean,<l>_lo,<l>_hi,...".
void write_curve_csv(const ExperimentReport& report, const std::filesystem::path& path,
                     const Band LearnerCurves::*curve);
void write_sweep_csv(const SweepTable& table, const std::filesystem::path& path);
// Long format: realization,round,chosen_model,queried,query_prob,learner_loss,cumulative_loss,cumulative_queries
void write_trajectories_csv(const std::vector<Trajectory>& trajectories, const std::filesystem::path& path);
std::vector<Trajectory> read_trajectories_csv(const std::filesystem::path& path);

}  // namespace cams
