#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cams/benchmarks.hpp"
#include "cams/cams.hpp"
#include "cams/format.hpp"
#include "cams/harness.hpp"
#include "cams/report.hpp"
#include "cams/stream_io.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitConflict = 3;
constexpr int kExitInternal = 4;

class OutputConflict : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw cams::ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
}

// Creates `dir` for fresh output. An existing non-empty directory is a
// conflict unless `force` is set, in which case it is cleared.
void prepare_out_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw OutputConflict("output path " + dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir)) {
      if (!force) throw OutputConflict("output directory " + dir.string() + " already exists (use --force)");
      for (const auto& entry : fs::directory_iterator(dir)) fs::remove_all(entry.path());
    }
  }
  fs::create_directories(dir);
}

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : sep) + s;
  return out;
}

struct StreamOptions {
  std::string stream;
  std::string preset;
  std::size_t rounds = 0;
};

cams::StreamFile truncated(cams::StreamFile stream, std::size_t rounds) {
  if (rounds == 0 || rounds >= stream.records.size()) return stream;
  stream.records.resize(rounds);
  stream.meta.rounds = rounds;
  return stream;
}

// Learner options shared by run and compare.
struct LearnerOptions {
  std::string regime = "auto";
  std::string query_rule = "entropy";
  bool regularize = false;
  double iwal_c0 = 8.0;
};

cams::LearnerSpec make_spec(const std::string& name, const LearnerOptions& opts, bool adversarial_stream) {
  auto spec = cams::parse_learner(name);
  if (opts.regime == "auto") {
    spec.regime = adversarial_stream ? cams::Regime::adversarial : cams::Regime::stochastic;
  } else if (opts.regime == "stochastic") {
    spec.regime = cams::Regime::stochastic;
  } else if (opts.regime == "adversarial") {
    spec.regime = cams::Regime::adversarial;
  } else {
    throw cams::ConfigError("--regime: expected auto|stochastic|adversarial, got '" + opts.regime + "'");
  }
  if (opts.query_rule == "entropy") spec.query_rule = cams::QueryRule::entropy;
  else if (opts.query_rule == "variance") spec.query_rule = cams::QueryRule::variance;
  else if (opts.query_rule == "random") spec.query_rule = cams::QueryRule::random;
  else throw cams::ConfigError("--query-rule: expected entropy|variance|random, got '" + opts.query_rule + "'");
  spec.regularize_advice = opts.regularize;
  spec.iwal_c0 = opts.iwal_c0;
  return spec;
}

ordered_json learner_json(const cams::LearnerSpec& spec) {
  return {{"name", spec.name},
          {"regime", std::string(cams::to_string(spec.regime))},
          {"query_rule", std::string(cams::to_string(spec.query_rule))},
          {"regularize_advice", spec.regularize_advice},
          {"iwal_c0", spec.iwal_c0}};
}

std::vector<std::size_t> default_sweep(std::size_t horizon) {
  std::vector<std::size_t> budgets;
  for (double f : {0.05, 0.1, 0.2, 0.5, 1.0}) {
    const auto b = std::max<std::size_t>(1, static_cast<std::size_t>(f * static_cast<double>(horizon)));
    if (budgets.empty() || budgets.back() != b) budgets.push_back(b);
  }
  return budgets;
}

// gen

struct GenArgs {
  std::string spec;
  std::string preset;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t rounds = 0;
  bool force = false;
};

int cmd_gen(const GenArgs& a) {
  if (a.spec.empty() == a.preset.empty()) throw cams::ConfigError("gen: give exactly one of --spec or --preset");
  cams::SyntheticSpec spec = a.spec.empty() ? cams::preset(a.preset, a.rounds) : cams::parse_synthetic_spec(read_file(a.spec));
  if (!a.spec.empty() && a.rounds) spec.rounds = a.rounds;
  if (a.seed_set) spec.seed = a.seed;
  spec.validate();
  const fs::path out(a.out);
  if (fs::exists(out) && !a.force) throw OutputConflict("output file " + out.string() + " already exists (use --force)");
  const auto stream = cams::generate(spec, spec.seed);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  cams::save_stream(stream, out);

  const auto& m = stream.meta;
  std::cout << "wrote " << out.string() << ": T=" << m.rounds << " c=" << m.classes << " k=" << m.models
            << " n=" << m.policies << (m.adversarial ? " (adversarial)" : "") << '\n';
  if (m.best_policy_index) std::cout << "best_policy_index=" << *m.best_policy_index << '\n';
  if (m.gap_delta) std::cout << "delta=" << cams::format_real(*m.gap_delta) << '\n';
  if (m.gap_gamma) std::cout << "gamma=" << cams::format_real(*m.gap_gamma) << '\n';
  return 0;
}

// run

struct RunArgs {
  std::string stream;
  std::string learner;
  std::optional<std::size_t> budget;
  std::size_t realizations = 1;
  std::uint64_t seed = 0;
  std::string out;
  bool force = false;
  std::size_t rounds = 0;
  std::string resume;
  bool scale_early = false;
  LearnerOptions learner_opts;
};

constexpr const char* kSnapshotFile = "snapshot.txt";
constexpr const char* kTrajectoryFile = "trajectories.csv";
constexpr const char* kManifestFile = "manifest.json";

int cmd_run(RunArgs a) {
  ordered_json resumed;
  std::vector<cams::Trajectory> prefix;
  std::optional<cams::CamsState> state;
  if (!a.resume.empty()) {
    const fs::path dir(a.resume);
    if (!fs::is_directory(dir)) throw cams::ValidationError("--resume: directory " + dir.string() + " does not exist");
    resumed = ordered_json::parse(read_file(dir / kManifestFile));
    if (!resumed.value("partial", false)) throw cams::ValidationError("--resume: " + dir.string() + " holds a complete run");
    a.stream = resumed.at("stream").get<std::string>();
    a.learner = resumed.at("learner").at("name").get<std::string>();
    a.learner_opts.regime = resumed.at("regime_option").get<std::string>();
    a.learner_opts.query_rule = resumed.at("learner").at("query_rule").get<std::string>();
    a.learner_opts.regularize = resumed.at("learner").at("regularize_advice").get<bool>();
    a.budget = resumed.at("budget").get<std::size_t>();
    a.seed = resumed.at("master_seed").get<std::uint64_t>();
    a.realizations = 1;
    a.rounds = 0;
    a.scale_early = false;
    state = cams::parse_snapshot(read_file(dir / kSnapshotFile));
    prefix = cams::read_trajectories_csv(dir / kTrajectoryFile);
    if (prefix.size() != 1 || prefix[0].size() != state->round) {
      throw cams::ValidationError("--resume: trajectory and snapshot disagree on the round count");
    }
  }
  if (a.stream.empty()) throw cams::ConfigError("run: --stream is required");
  if (a.learner.empty()) throw cams::ConfigError("run: --learner is required");
  if (a.realizations < 1) throw cams::ConfigError("run: --realizations must be >= 1");

  const auto stream = cams::load_stream(a.stream);
  const auto spec = make_spec(a.learner, a.learner_opts, stream.meta.adversarial);
  const std::size_t T = stream.records.size();
  const std::size_t budget = a.budget.value_or(T);
  const bool is_cams = spec.name.rfind("cams", 0) == 0;
  const bool partial = a.rounds > 0 && a.rounds < T;
  if (partial) {
    if (!is_cams) throw cams::ConfigError("run: --rounds (partial run) is only supported for cams learners");
    if (a.realizations != 1) throw cams::ConfigError("run: --rounds (partial run) needs --realizations 1");
    if (a.scale_early) throw cams::ConfigError("run: --rounds cannot be combined with --scale-early");
  }
  prepare_out_dir(a.out, a.force);

  std::vector<cams::Trajectory> trajectories;
  std::vector<std::uint64_t> seeds;
  std::string snapshot;
  if (state || partial) {
    const std::uint64_t seed = cams::derive_seed(a.seed, 0, spec.display_name());
    auto learner = cams::make_learner(spec, stream, budget, seed);
    auto* base = dynamic_cast<cams::CamsLearner*>(learner.get());
    if (!base) throw cams::InternalError("run: cams learner expected");
    cams::Trajectory traj;
    std::size_t first = 0;
    if (state) {
      first = state->round;
      traj = std::move(prefix[0]);
      learner = std::make_unique<cams::CamsLearner>(base->config(), stream.meta.models, stream.meta.policies,
                                                    std::move(*state));
    }
    const std::size_t last = partial ? a.rounds : T;
    cams::feed(*learner, stream, first, last, traj);
    if (partial) snapshot = static_cast<cams::CamsLearner&>(*learner).snapshot();
    trajectories.push_back(std::move(traj));
    seeds.push_back(seed);
  } else {
    for (std::size_t r = 0; r < a.realizations; ++r) {
      seeds.push_back(cams::derive_seed(a.seed, r, spec.display_name()));
      trajectories.push_back(cams::run_realization(spec, stream, budget, seeds.back(), a.scale_early));
    }
  }

  const fs::path out(a.out);
  cams::write_trajectories_csv(trajectories, out / kTrajectoryFile);
  if (partial) write_file(out / kSnapshotFile, snapshot);

  ordered_json manifest{{"command", "run"},
                        {"stream", a.stream},
                        {"rounds", T},
                        {"learner", learner_json(spec)},
                        {"regime_option", a.learner_opts.regime},
                        {"budget", budget},
                        {"realizations", trajectories.size()},
                        {"master_seed", a.seed},
                        {"seeds", seeds},
                        {"scale_early", a.scale_early},
                        {"partial", partial}};
  if (partial) manifest["rounds_done"] = a.rounds;
  if (!a.resume.empty()) manifest["resumed_from"] = a.resume;
  write_file(out / kManifestFile, manifest.dump(2) + "\n");

  double mean_loss = 0.0, mean_queries = 0.0;
  for (const auto& t : trajectories) {
    if (!t.size()) continue;
    mean_loss += t.cumulative_loss.back();
    mean_queries += static_cast<double>(t.cumulative_queries.back());
  }
  const double R = static_cast<double>(trajectories.size());
  std::cout << spec.display_name() << ": rounds=" << trajectories[0].size() << " mean_loss=" << cams::format_real(mean_loss / R)
            << " mean_queries=" << cams::format_real(mean_queries / R) << '\n';
  return 0;
}

// compare

struct CompareArgs {
  StreamOptions source;
  std::vector<std::string> learners;
  std::optional<std::size_t> budget;
  std::size_t realizations = 50;
  std::uint64_t seed = 0;
  std::string out;
  bool force = false;
  bool scale_early = false;
  std::vector<std::size_t> sweep;
  bool no_sweep = false;
  unsigned threads = 0;
  LearnerOptions learner_opts;
};

int cmd_compare(const CompareArgs& a) {
  if (a.learners.empty()) throw cams::ConfigError("compare: --learners must name at least one learner");
  if (a.source.stream.empty() == a.source.preset.empty())
    throw cams::ConfigError("compare: give exactly one of --stream or --preset");
  if (a.realizations < 1) throw cams::ConfigError("compare: --realizations must be >= 1");

  cams::StreamSource source;
  bool adversarial = false;
  std::size_t T = 0;
  ordered_json source_json;
  if (!a.source.stream.empty()) {
    auto stream = truncated(cams::load_stream(a.source.stream), a.source.rounds);
    adversarial = stream.meta.adversarial;
    T = stream.records.size();
    source_json = {{"stream", a.source.stream}, {"order", adversarial ? "fixed" : "permuted per realization"}};
    source = cams::reordered_source(std::move(stream), a.seed);
  } else {
    auto spec = cams::preset(a.source.preset, a.source.rounds);
    spec.validate();
    adversarial = spec.regime == cams::StreamRegime::adversarial_segments;
    T = spec.rounds;
    source_json = {{"preset", a.source.preset}, {"order", "regenerated per realization"}};
    source = cams::synthetic_source(std::move(spec), a.seed);
  }

  std::vector<cams::LearnerSpec> specs;
  std::vector<std::string> seen;
  for (const auto& name : a.learners) {
    if (std::find(seen.begin(), seen.end(), name) != seen.end())
      throw cams::ConfigError("compare: learner '" + name + "' listed twice");
    seen.push_back(name);
    specs.push_back(make_spec(name, a.learner_opts, adversarial));
  }
  const std::size_t budget = a.budget.value_or(T);
  const auto sweep = a.no_sweep ? std::vector<std::size_t>{} : (a.sweep.empty() ? default_sweep(T) : a.sweep);
  prepare_out_dir(a.out, a.force);

  cams::ExperimentOptions opts;
  opts.realizations = a.realizations;
  opts.budget = budget;
  opts.master_seed = a.seed;
  opts.scale_early = a.scale_early;
  opts.threads = a.threads;
  const auto report = cams::run_experiment(specs, source, opts);

  const fs::path out(a.out);
  cams::write_curve_csv(report, out / "cumulative_loss.csv", &cams::LearnerCurves::cumulative_loss);
  cams::write_curve_csv(report, out / "queries.csv", &cams::LearnerCurves::queries);
  cams::write_curve_csv(report, out / "rcl.csv", &cams::LearnerCurves::rcl);
  if (!sweep.empty()) cams::write_sweep_csv(cams::budget_sweep(specs, source, sweep, opts), out / "sweep.csv");

  ordered_json learners = ordered_json::array();
  for (std::size_t l = 0; l < specs.size(); ++l) {
    auto j = learner_json(specs[l]);
    j["seeds"] = report.learners[l].seeds;
    learners.push_back(std::move(j));
  }
  ordered_json manifest{{"command", "compare"},
                        {"source", source_json},
                        {"rounds", report.rounds},
                        {"budget", budget},
                        {"realizations", a.realizations},
                        {"master_seed", a.seed},
                        {"scale_early", a.scale_early},
                        {"sweep_budgets", sweep},
                        {"regime_option", a.learner_opts.regime},
                        {"learners", learners}};
  write_file(out / kManifestFile, manifest.dump(2) + "\n");

  for (const auto& l : report.learners) {
    std::cout << l.name << ": final_loss_mean=" << cams::format_real(l.cumulative_loss.mean.back())
              << " queries_mean=" << cams::format_real(l.queries.mean.back()) << '\n';
  }
  return 0;
}

// report

struct ReportArgs {
  std::string in;
  std::string out;
  bool no_svg = false;
};

int cmd_report(const ReportArgs& a) {
  const fs::path in(a.in);
  if (!fs::is_directory(in)) throw cams::ValidationError("report: input directory " + in.string() + " does not exist");
  const fs::path out = a.out.empty() ? in / "plots" : fs::path(a.out);
  const auto panels = cams::write_plot_data(in, out, !a.no_svg);
  std::cout << "wrote " << (out / "plot_data.csv").string() << " (" << panels << " panels)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online contextual active model selection"};
  app.set_config("--config", "", "Read options from a TOML/INI file; command-line flags take precedence");
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic stream file");
  gen_cmd->add_option("--spec", gen.spec, "Generator spec (JSON)");
  gen_cmd->add_option("--preset", gen.preset, "Built-in benchmark: " + join(cams::preset_names(), "|"));
  gen_cmd->add_option("--out", gen.out, "Output stream file (JSONL)")->required();
  gen_cmd->add_option("--seed", gen.seed, "Generator seed")->each([&](const std::string&) { gen.seed_set = true; });
  gen_cmd->add_option("--rounds", gen.rounds, "Stream length T");
  gen_cmd->add_flag("--force", gen.force, "Overwrite an existing output file");

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run one learner over a stream file");
  run_cmd->add_option("--stream", run.stream, "Stream file");
  run_cmd->add_option("--learner", run.learner, "Learner: " + join(cams::learner_names(), "|"));
  run_cmd->add_option("--budget", run.budget, "Label budget (default: T)");
  run_cmd->add_option("--realizations", run.realizations, "Number of seeded realizations");
  run_cmd->add_option("--seed", run.seed, "Master seed");
  run_cmd->add_option("--out", run.out, "Output directory")->required();
  run_cmd->add_flag("--force", run.force, "Replace an existing output directory");
  run_cmd->add_option("--rounds", run.rounds, "Stop after this many rounds and write a snapshot (cams learners)");
  run_cmd->add_option("--resume", run.resume, "Continue a partial run from its output directory");
  run_cmd->add_flag("--scale-early", run.scale_early, "Rescale query probabilities after the first T/10 rounds");
  run_cmd->add_option("--regime", run.learner_opts.regime, "auto|stochastic|adversarial");
  run_cmd->add_option("--query-rule", run.learner_opts.query_rule, "entropy|variance|random (cams learners)");
  run_cmd->add_flag("--regularize", run.learner_opts.regularize, "Regularize advice rows (cams learners)");
  run_cmd->add_option("--iwal-c0", run.learner_opts.iwal_c0, "IWAL rejection constant");

  CompareArgs cmp;
  auto* cmp_cmd = app.add_subcommand("compare", "Compare learners over seeded realizations");
  cmp_cmd->add_option("--stream", cmp.source.stream, "Stream file (realizations permute its order)");
  cmp_cmd->add_option("--preset", cmp.source.preset, "Built-in benchmark, regenerated per realization");
  cmp_cmd->add_option("--rounds", cmp.source.rounds, "Stream length (presets) or prefix length (files)");
  cmp_cmd->add_option("--learners", cmp.learners, "Learners to compare")->delimiter(',');
  cmp_cmd->add_option("--budget", cmp.budget, "Label budget for the curve panels (default: T)");
  cmp_cmd->add_option("--realizations", cmp.realizations, "Number of seeded realizations");
  cmp_cmd->add_option("--seed", cmp.seed, "Master seed");
  cmp_cmd->add_option("--out", cmp.out, "Output directory")->required();
  cmp_cmd->add_flag("--force", cmp.force, "Replace an existing output directory");
  cmp_cmd->add_flag("--scale-early", cmp.scale_early, "Rescale query probabilities after the first T/10 rounds");
  cmp_cmd->add_option("--sweep", cmp.sweep, "Budgets for the budget-sweep panel")->delimiter(',');
  cmp_cmd->add_flag("--no-sweep", cmp.no_sweep, "Skip the budget-sweep panel");
  cmp_cmd->add_option("--threads", cmp.threads, "Worker threads (0: all cores, capped by CAMS_BENCH_THREADS)");
  cmp_cmd->add_option("--regime", cmp.learner_opts.regime, "auto|stochastic|adversarial");
  cmp_cmd->add_option("--query-rule", cmp.learner_opts.query_rule, "entropy|variance|random (cams learners)");
  cmp_cmd->add_flag("--regularize", cmp.learner_opts.regularize, "Regularize advice rows (cams learners)");
  cmp_cmd->add_option("--iwal-c0", cmp.learner_opts.iwal_c0, "IWAL rejection constant");

  ReportArgs rep;
  auto* rep_cmd = app.add_subcommand("report", "Turn compare output into plot data and SVG charts");
  rep_cmd->add_option("--in", rep.in, "Directory written by compare")->required();
  rep_cmd->add_option("--out", rep.out, "Output directory (default: <in>/plots)");
  rep_cmd->add_flag("--no-svg", rep.no_svg, "Only write plot_data.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen(gen);
    if (*run_cmd) return cmd_run(run);
    if (*cmp_cmd) return cmd_compare(cmp);
    if (*rep_cmd) return cmd_report(rep);
  } catch (const OutputConflict& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConflict;
  } catch (const std::invalid_argument& e) {  // ValidationError, ConfigError, LoadError
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::logic_error& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
