#include "cams/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <mutex>
#include <thread>

#include "cams/format.hpp"

namespace cams {

void Trajectory::append(const RoundOutcome& outcome) {
  chosen_model.push_back(outcome.chosen_model);
  queried.push_back(outcome.queried ? 1 : 0);
  query_prob.push_back(outcome.query_prob);
  learner_loss.push_back(outcome.learner_loss);
  cumulative_loss.push_back((cumulative_loss.empty() ? 0.0 : cumulative_loss.back()) + outcome.learner_loss);
  cumulative_queries.push_back((cumulative_queries.empty() ? 0 : cumulative_queries.back()) +
                               (outcome.queried ? 1 : 0));
}

const std::vector<std::string>& learner_names() {
  static const std::vector<std::string> names{"rs",   "mp",       "qbc",     "iwal",
                                              "cqbc", "ciwal",    "oracle",  "cams",
                                              "cams-max", "cams-random-policy", "cams-conventional"};
  return names;
}

LearnerSpec parse_learner(std::string_view name) {
  const auto& names = learner_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : "|") + n;
    throw ConfigError("unknown learner '" + std::string(name) + "' (expected one of " + list + ")");
  }
  LearnerSpec spec;
  spec.name = std::string(name);
  return spec;
}

std::unique_ptr<Learner> make_learner(const LearnerSpec& spec, const StreamFile& stream, std::size_t budget,
                                      std::uint64_t seed) {
  const auto& meta = stream.meta;
  const auto cams_variant = [&]() -> std::optional<Variant> {
    if (spec.name == "cams") return Variant::standard;
    if (spec.name == "cams-max") return Variant::max;
    if (spec.name == "cams-random-policy") return Variant::random_policy;
    if (spec.name == "cams-conventional") return Variant::conventional;
    return std::nullopt;
  }();
  if (cams_variant) {
    CamsConfig cfg;
    cfg.regime = spec.regime;
    cfg.variant = *cams_variant;
    cfg.classes = meta.classes;
    cfg.horizon = meta.rounds;
    cfg.budget = budget;
    cfg.regularize_advice = spec.regularize_advice;
    cfg.query_rule = spec.query_rule;
    cfg.seed = seed;
    return std::make_unique<CamsLearner>(cfg, meta.models, meta.policies);
  }
  if (spec.name == "oracle") {
    return std::make_unique<OracleLearner>(hindsight_best_policy(stream), meta.classes, budget, seed);
  }
  BaselineConfig cfg;
  if (spec.name == "rs") cfg.kind = BaselineKind::rs;
  else if (spec.name == "mp") cfg.kind = BaselineKind::mp;
  else if (spec.name == "qbc") cfg.kind = BaselineKind::qbc;
  else if (spec.name == "iwal") cfg.kind = BaselineKind::iwal;
  else if (spec.name == "cqbc") cfg.kind = BaselineKind::cqbc;
  else if (spec.name == "ciwal") cfg.kind = BaselineKind::ciwal;
  else parse_learner(spec.name);  // throws with the name list
  cfg.classes = meta.classes;
  cfg.horizon = meta.rounds;
  cfg.budget = budget;
  cfg.iwal_c0 = spec.iwal_c0;
  cfg.seed = seed;
  return std::make_unique<BaselineLearner>(cfg, meta.models, meta.policies);
}

double scaling_parameter(double budget, double budget_early, double horizon) {
  if (!(budget_early > 0.0)) throw ConfigError("scaling_parameter: early budget must be positive");
  if (!(horizon >= 10.0)) throw ConfigError("scaling_parameter: horizon must be >= 10");
  const double early = horizon / 10.0;
  return ((budget - budget_early) / (horizon - early)) * (early / budget_early);
}

void feed(Learner& learner, const StreamFile& stream, std::size_t first, std::size_t last, Trajectory& trajectory) {
  last = std::min(last, stream.records.size());
  for (std::size_t i = first; i < last; ++i) trajectory.append(learner.step(stream.records[i]));
}

Trajectory run_realization(const LearnerSpec& spec, const StreamFile& stream, std::size_t budget, std::uint64_t seed,
                           bool scale_early) {
  auto learner = make_learner(spec, stream, budget, seed);
  Trajectory traj;
  const std::size_t total = stream.records.size();
  traj.chosen_model.reserve(total);
  if (!scale_early || spec.name == "rs" || spec.name == "oracle") {
    feed(*learner, stream, 0, total, traj);
    return traj;
  }
  const std::size_t early = total / 10;
  feed(*learner, stream, 0, early, traj);
  const std::size_t spent = learner->cost_spent();
  // Nothing spent early gives no pace information; keep the learner's own rate.
  if (spent > 0 && total >= 10) {
    learner->set_query_scale(std::max(0.0, scaling_parameter(static_cast<double>(budget), static_cast<double>(spent),
                                                             static_cast<double>(total))));
  }
  feed(*learner, stream, early, total, traj);
  return traj;
}

std::vector<double> relative_cumulative_loss(const Trajectory& trajectory, const StreamFile& stream) {
  const std::size_t T = std::min(trajectory.size(), stream.records.size());
  const Index k = stream.meta.models;
  Vector totals = Vector::Zero(k);
  for (std::size_t t = 0; t < T; ++t) {
    const auto& rec = stream.records[t];
    totals += model_losses(rec.predictions, rec.true_label, stream.meta.classes);
  }
  Index best = 0;
  for (Index j = 1; j < k; ++j)
    if (totals(j) < totals(best)) best = j;
  std::vector<double> rcl(T);
  double best_cum = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const auto& rec = stream.records[t];
    best_cum += rec.predictions[static_cast<std::size_t>(best)] == rec.true_label ? 0.0 : 1.0;
    rcl[t] = trajectory.cumulative_loss[t] - best_cum;
  }
  return rcl;
}

StreamSource fixed_source(StreamFile stream) {
  auto shared = std::make_shared<const StreamFile>(std::move(stream));
  return [shared](std::size_t) { return *shared; };
}

StreamSource reordered_source(StreamFile stream, std::uint64_t master_seed) {
  auto shared = std::make_shared<const StreamFile>(std::move(stream));
  return [shared, master_seed](std::size_t r) { return reorder(*shared, derive_seed(master_seed, r, "stream-order")); };
}

StreamSource synthetic_source(SyntheticSpec spec, std::uint64_t master_seed) {
  auto shared = std::make_shared<const SyntheticSpec>(std::move(spec));
  return [shared, master_seed](std::size_t r) { return generate(*shared, derive_seed(master_seed, r, "stream")); };
}

double empirical_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw ValidationError("empirical_quantile: no values");
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Band aggregate(const std::vector<std::vector<double>>& series) {
  Band band;
  if (series.empty()) return band;
  const std::size_t T = series.front().size();
  const std::size_t R = series.size();
  band.mean.assign(T, 0.0);
  if (R >= 2) {
    band.lo.resize(T);
    band.hi.resize(T);
  }
  std::vector<double> column(R);
  for (std::size_t t = 0; t < T; ++t) {
    double sum = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
      column[r] = series[r][t];
      sum += column[r];
    }
    band.mean[t] = sum / static_cast<double>(R);
    if (R >= 2) {
      band.lo[t] = empirical_quantile(column, 0.05);
      band.hi[t] = empirical_quantile(column, 0.95);
    }
  }
  return band;
}

const LearnerCurves& ExperimentReport::at(std::string_view name) const {
  for (const auto& l : learners)
    if (l.name == name) return l;
  throw ValidationError("report has no learner '" + std::string(name) + "'");
}

unsigned worker_threads(unsigned requested) {
  unsigned n = requested > 0 ? requested : std::max(1U, std::thread::hardware_concurrency());
  if (const char* cap = std::getenv("CAMS_BENCH_THREADS")) {
    try {
      const auto c = static_cast<unsigned>(parse_count(cap));
      if (c > 0) n = std::min(n, c);
    } catch (const std::invalid_argument&) {
      throw ConfigError("CAMS_BENCH_THREADS must be a positive integer");
    }
  }
  return n;
}

namespace {

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

std::vector<double> as_doubles(const std::vector<std::size_t>& v) { return {v.begin(), v.end()}; }

}  // namespace

ExperimentReport run_experiment(const std::vector<LearnerSpec>& learners, const StreamSource& source,
                                const ExperimentOptions& options) {
  if (learners.empty()) throw ConfigError("run_experiment: no learners");
  if (options.realizations < 1) throw ConfigError("run_experiment: need at least one realization");
  const std::size_t R = options.realizations;
  const std::size_t L = learners.size();

  struct Cell {
    Trajectory traj;
    std::vector<double> rcl;
    std::uint64_t seed = 0;
  };
  std::vector<std::vector<Cell>> cells(R, std::vector<Cell>(L));
  std::vector<std::size_t> rounds(R, 0);

  parallel_for(R, worker_threads(options.threads), [&](std::size_t r) {
    const StreamFile stream = source(r);
    rounds[r] = stream.records.size();
    for (std::size_t l = 0; l < L; ++l) {
      auto& cell = cells[r][l];
      cell.seed = derive_seed(options.master_seed, r, learners[l].display_name());
      cell.traj = run_realization(learners[l], stream, options.budget, cell.seed, options.scale_early);
      cell.rcl = relative_cumulative_loss(cell.traj, stream);
    }
  });
  for (std::size_t r = 1; r < R; ++r)
    if (rounds[r] != rounds[0]) throw ValidationError("run_experiment: realizations differ in length");

  ExperimentReport report;
  report.realizations = R;
  report.rounds = rounds[0];
  report.budget = options.budget;
  for (std::size_t l = 0; l < L; ++l) {
    LearnerCurves curves;
    curves.name = learners[l].display_name();
    std::vector<std::vector<double>> loss(R), queries(R), rcl(R);
    for (std::size_t r = 0; r < R; ++r) {
      auto& cell = cells[r][l];
      loss[r] = cell.traj.cumulative_loss;
      queries[r] = as_doubles(cell.traj.cumulative_queries);
      rcl[r] = std::move(cell.rcl);
      curves.final_losses.push_back(loss[r].empty() ? 0.0 : loss[r].back());
      curves.final_queries.push_back(queries[r].empty() ? 0.0 : queries[r].back());
      curves.seeds.push_back(cell.seed);
      if (options.keep_trajectories) curves.trajectories.push_back(std::move(cell.traj));
    }
    curves.cumulative_loss = aggregate(loss);
    curves.queries = aggregate(queries);
    curves.rcl = aggregate(rcl);
    report.learners.push_back(std::move(curves));
  }
  return report;
}

SweepTable budget_sweep(const std::vector<LearnerSpec>& learners, const StreamSource& source,
                        const std::vector<std::size_t>& budgets, const ExperimentOptions& options) {
  SweepTable table;
  table.budgets = budgets;
  for (const auto& l : learners) table.learners.push_back(l.display_name());
  table.mean.assign(learners.size(), {});
  table.lo.assign(learners.size(), {});
  table.hi.assign(learners.size(), {});
  for (std::size_t b : budgets) {
    ExperimentOptions opts = options;
    opts.budget = b;
    opts.keep_trajectories = false;
    const auto report = run_experiment(learners, source, opts);
    for (std::size_t l = 0; l < learners.size(); ++l) {
      const auto& finals = report.learners[l].final_losses;
      double sum = 0.0;
      for (double v : finals) sum += v;
      table.mean[l].push_back(sum / static_cast<double>(finals.size()));
      if (finals.size() >= 2) {
        table.lo[l].push_back(empirical_quantile(finals, 0.05));
        table.hi[l].push_back(empirical_quantile(finals, 0.95));
      }
    }
  }
  return table;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

void write_curve_csv(const ExperimentReport& report, const std::filesystem::path& path,
                     const Band LearnerCurves::*curve) {
  auto out = open_out(path);
  out << "round";
  for (const auto& l : report.learners) {
    out << ',' << l.name << "_mean";
    if ((l.*curve).has_interval()) out << ',' << l.name << "_lo," << l.name << "_hi";
  }
  out << '\n';
  for (std::size_t t = 0; t < report.rounds; ++t) {
    out << (t + 1);
    for (const auto& l : report.learners) {
      const Band& b = l.*curve;
      out << ',' << format_real(b.mean[t]);
      if (b.has_interval()) out << ',' << format_real(b.lo[t]) << ',' << format_real(b.hi[t]);
    }
    out << '\n';
  }
}

void write_sweep_csv(const SweepTable& table, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "budget";
  for (std::size_t l = 0; l < table.learners.size(); ++l) {
    out << ',' << table.learners[l] << "_mean";
    if (!table.lo[l].empty()) out << ',' << table.learners[l] << "_lo," << table.learners[l] << "_hi";
  }
  out << '\n';
  for (std::size_t b = 0; b < table.budgets.size(); ++b) {
    out << table.budgets[b];
    for (std::size_t l = 0; l < table.learners.size(); ++l) {
      out << ',' << format_real(table.mean[l][b]);
      if (!table.lo[l].empty()) out << ',' << format_real(table.lo[l][b]) << ',' << format_real(table.hi[l][b]);
    }
    out << '\n';
  }
}

void write_trajectories_csv(const std::vector<Trajectory>& trajectories, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "realization,round,chosen_model,queried,query_prob,learner_loss,cumulative_loss,cumulative_queries\n";
  for (std::size_t r = 0; r < trajectories.size(); ++r) {
    const auto& tr = trajectories[r];
    for (std::size_t t = 0; t < tr.size(); ++t) {
      out << r << ',' << (t + 1) << ',' << tr.chosen_model[t] << ',' << int(tr.queried[t]) << ','
          << format_real(tr.query_prob[t]) << ',' << tr.learner_loss[t] << ',' << format_real(tr.cumulative_loss[t])
          << ',' << tr.cumulative_queries[t] << '\n';
    }
  }
}

std::vector<Trajectory> read_trajectories_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open trajectory file " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<Trajectory> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) f.push_back(tok);
    if (f.size() != 8) throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": expected 8 fields");
    try {
      const auto r = static_cast<std::size_t>(parse_count(f[0]));
      if (r >= out.size()) out.resize(r + 1);
      RoundOutcome o;
      o.chosen_model = static_cast<int>(parse_count(f[2]));
      o.queried = parse_count(f[3]) != 0;
      o.query_prob = parse_real(f[4]);
      o.learner_loss = static_cast<int>(parse_count(f[5]));
      out[r].append(o);
    } catch (const std::invalid_argument& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace cams
