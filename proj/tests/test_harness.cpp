#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "doctest.h"

#include "cams/benchmarks.hpp"
#include "cams/harness.hpp"
#include "cams/report.hpp"
#include "support.hpp"

using namespace cams;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("cams-harness-" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("scaling parameter") {
  CHECK(scaling_parameter(100, 20, 1000) == doctest::Approx(4.0 / 9.0).epsilon(1e-15));
  // Spending exactly the pro-rata share early leaves the rate unchanged.
  CHECK(scaling_parameter(100, 10, 1000) == doctest::Approx(1.0));
  CHECK_THROWS_AS(scaling_parameter(100, 0, 1000), ConfigError);
  CHECK_THROWS_AS(scaling_parameter(100, 5, 9), ConfigError);
}

TEST_CASE("type-7 empirical quantiles") {
  CHECK(empirical_quantile({4, 1, 3, 2}, 0.05) == doctest::Approx(1.15));
  CHECK(empirical_quantile({4, 1, 3, 2}, 0.95) == doctest::Approx(3.85));
  CHECK(empirical_quantile({4, 1, 3, 2}, 0.5) == doctest::Approx(2.5));
  CHECK(empirical_quantile({7}, 0.05) == 7.0);
  CHECK_THROWS_AS(empirical_quantile({}, 0.5), ValidationError);
}

TEST_CASE("aggregate per-round bands") {
  const Band b = aggregate({{1, 2}, {3, 6}});
  CHECK(b.mean == std::vector<double>{2, 4});
  CHECK(b.lo[0] == doctest::Approx(1.1));
  CHECK(b.hi[1] == doctest::Approx(5.8));
  const Band single = aggregate({{1, 2}});
  CHECK_FALSE(single.has_interval());
}

TEST_CASE("learner names") {
  CHECK(learner_names().size() == 11);
  CHECK(parse_learner("cams-max").name == "cams-max");
  try {
    parse_learner("bandit");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("rs|mp|qbc|iwal|cqbc|ciwal|oracle|cams") != std::string::npos);
  }
}

TEST_CASE("experiments are independent of the thread count") {
  const auto source = synthetic_source(standard_benchmark(300), 5);
  std::vector<LearnerSpec> learners{parse_learner("cams"), parse_learner("mp"), parse_learner("oracle")};
  ExperimentOptions opts;
  opts.realizations = 6;
  opts.budget = 60;
  opts.master_seed = 11;
  opts.keep_trajectories = true;
  opts.threads = 1;
  const auto one = run_experiment(learners, source, opts);
  opts.threads = 4;
  const auto four = run_experiment(learners, source, opts);
  for (std::size_t l = 0; l < learners.size(); ++l) {
    CHECK(one.learners[l].trajectories == four.learners[l].trajectories);
    CHECK(one.learners[l].cumulative_loss == four.learners[l].cumulative_loss);
    CHECK(one.learners[l].seeds == four.learners[l].seeds);
  }
}

TEST_CASE("a learner's trajectory does not depend on the other learners") {
  const auto source = synthetic_source(standard_benchmark(200), 3);
  ExperimentOptions opts;
  opts.realizations = 3;
  opts.budget = 200;
  opts.keep_trajectories = true;
  const auto alone = run_experiment({parse_learner("cams")}, source, opts);
  const auto mixed = run_experiment({parse_learner("iwal"), parse_learner("cams")}, source, opts);
  CHECK(alone.at("cams").trajectories == mixed.at("cams").trajectories);
}

TEST_CASE("seeds are recorded per realization") {
  const auto source = synthetic_source(standard_benchmark(50), 3);
  ExperimentOptions opts;
  opts.realizations = 4;
  opts.budget = 10;
  opts.master_seed = 99;
  const auto rep = run_experiment({parse_learner("rs")}, source, opts);
  const auto& seeds = rep.at("rs").seeds;
  REQUIRE(seeds.size() == 4);
  for (std::size_t r = 0; r < 4; ++r) CHECK(seeds[r] == derive_seed(99, r, "rs"));
}

TEST_CASE("relative cumulative loss subtracts the best model in hindsight") {
  StreamFile s;
  s.meta.classes = 2;
  s.meta.models = 2;
  s.meta.rounds = 3;
  const Labels preds[3] = {{0, 1}, {0, 1}, {1, 1}};
  for (std::size_t t = 0; t < 3; ++t) {
    RoundRecord r;
    r.predictions = preds[t];
    r.true_label = 1;
    r.advice = AdviceMatrix::empty(2);
    r.round_index = t + 1;
    s.records.push_back(r);
  }
  Trajectory tr;
  for (int loss : {1, 1, 0}) {
    RoundOutcome o;
    o.learner_loss = loss;
    tr.append(o);
  }
  // Model 1 never errs.
  CHECK(relative_cumulative_loss(tr, s) == std::vector<double>{1, 2, 2});
}

TEST_CASE("early-budget scaling changes the pace after T/10") {
  const auto stream = generate(standard_benchmark(1000), 4);
  const auto spec = parse_learner("cams");
  const auto plain = run_realization(spec, stream, 50, 7, false);
  const auto scaled = run_realization(spec, stream, 50, 7, true);
  for (std::size_t t = 0; t < 100; ++t) CHECK(plain.query_prob[t] == scaled.query_prob[t]);
  bool differs = false;
  for (std::size_t t = 100; t < 1000; ++t) differs = differs || plain.query_prob[t] != scaled.query_prob[t];
  CHECK(differs);
  // Random sampling already paces itself and is left alone.
  const auto rs = parse_learner("rs");
  CHECK(run_realization(rs, stream, 50, 7, false) == run_realization(rs, stream, 50, 7, true));
}

TEST_CASE("CSV emitters") {
  TempDir dir;
  const auto source = synthetic_source(standard_benchmark(20), 1);
  ExperimentOptions opts;
  opts.realizations = 3;
  opts.budget = 20;
  opts.keep_trajectories = true;
  const auto rep = run_experiment({parse_learner("cams"), parse_learner("mp")}, source, opts);
  write_curve_csv(rep, dir.path / "loss.csv", &LearnerCurves::cumulative_loss);
  const std::string text = slurp(dir.path / "loss.csv");
  CHECK(text.rfind("round,cams_mean,cams_lo,cams_hi,mp_mean,mp_lo,mp_hi\n1,", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 21);

  write_trajectories_csv(rep.at("cams").trajectories, dir.path / "traj.csv");
  CHECK(read_trajectories_csv(dir.path / "traj.csv") == rep.at("cams").trajectories);

  SweepTable table;
  table.budgets = {5, 10};
  table.learners = {"cams"};
  table.mean = {{1.5, 1.0}};
  table.lo = {{}};
  table.hi = {{}};
  write_sweep_csv(table, dir.path / "sweep.csv");
  CHECK(slurp(dir.path / "sweep.csv") == "budget,cams_mean\n5,1.5\n10,1\n");
}

TEST_CASE("budget sweep runs one experiment per budget") {
  const auto source = synthetic_source(standard_benchmark(100), 2);
  ExperimentOptions opts;
  opts.realizations = 2;
  const auto table = budget_sweep({parse_learner("cams"), parse_learner("rs")}, source, {0, 100}, opts);
  REQUIRE(table.mean.size() == 2);
  REQUIRE(table.mean[0].size() == 2);
  CHECK(table.lo[1].size() == 2);
}

TEST_CASE("CAMS_BENCH_THREADS caps the worker count") {
  ::setenv("CAMS_BENCH_THREADS", "2", 1);
  CHECK(worker_threads(8) == 2);
  CHECK(worker_threads(1) == 1);
  ::setenv("CAMS_BENCH_THREADS", "many", 1);
  CHECK_THROWS_AS(worker_threads(4), ConfigError);
  ::unsetenv("CAMS_BENCH_THREADS");
  CHECK(worker_threads(3) == 3);
}

TEST_CASE("report module") {
  TempDir dir;
  {
    std::ofstream out(dir.path / "rcl.csv");
    out << "round,cams_mean,cams_lo,cams_hi,mp_mean\n1,0,0,1,0.5\n2,1,0.5,2,1.5\n";
  }
  const auto series = panel_series(read_csv(dir.path / "rcl.csv"));
  REQUIRE(series.size() == 2);
  CHECK(series[0].learner == "cams");
  CHECK(series[0].hi == std::vector<double>{1, 2});
  CHECK(series[1].learner == "mp");
  CHECK(series[1].lo.empty());

  CHECK(write_plot_data(dir.path, dir.path / "plots") == 1);
  CHECK(slurp(dir.path / "plots" / "plot_data.csv") ==
        "panel,x,learner,mean,lo,hi\nrcl,1,cams,0,0,1\nrcl,2,cams,1,0.5,2\nrcl,1,mp,0.5,,\nrcl,2,mp,1.5,,\n");
  const std::string svg = slurp(dir.path / "plots" / "rcl.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("<polygon") != std::string::npos);

  CHECK_THROWS_AS(write_plot_data(dir.path / "missing", dir.path / "x"), ValidationError);
  fs::create_directories(dir.path / "empty");
  CHECK_THROWS_AS(write_plot_data(dir.path / "empty", dir.path / "y"), ValidationError);
}
