#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "tristream/experiment.hpp"

using namespace tristream;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("tristream_exp_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

ExperimentSpec small(ExperimentKind kind) {
  ExperimentSpec s;
  s.kind = kind;
  s.trials = 4;
  s.k_grid = {2, 4};
  s.b_grid = {60};
  s.stream.generator = "er";
  s.stream.nodes = 80;
  s.stream.edges = 600;
  s.stream.seed = 3;
  s.base_seed = 9;
  s.tracked_nodes = 5;
  return s;
}

}  // namespace

TEST(ExperimentKind, NamesRoundTrip) {
  for (auto k : {ExperimentKind::kUnbiasedness, ExperimentKind::kVarianceVsK, ExperimentKind::kAccuracyVsBudget,
                 ExperimentKind::kSpeedAccuracy, ExperimentKind::kScalability, ExperimentKind::kThetaSweep,
                 ExperimentKind::kPartitionStats}) {
    EXPECT_EQ(parse_experiment_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_experiment_kind("nonsense"), std::invalid_argument);
}

TEST(ExperimentSpec, JsonRoundTrip) {
  ExperimentSpec s = small(ExperimentKind::kThetaSweep);
  s.theta_grid = {0, 0.5, 2};
  s.b_grid = {0.1, 200};
  s.reshuffle = false;
  s.aggregation = Aggregation::kLazy;
  const ExperimentSpec back = spec_from_json(spec_to_json(s));
  EXPECT_EQ(spec_to_json(back), spec_to_json(s));
  EXPECT_EQ(back.theta_grid, s.theta_grid);
  EXPECT_FALSE(back.reshuffles());
}

TEST(ExperimentSpec, Validation) {
  ExperimentSpec s = small(ExperimentKind::kUnbiasedness);
  s.trials = 0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = small(ExperimentKind::kUnbiasedness);
  s.k_grid.clear();
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = small(ExperimentKind::kScalability);
  EXPECT_THROW(s.validate(), std::invalid_argument);  // no sizes
  EXPECT_THROW(spec_from_json(nlohmann::json{{"kind", "UNBIASEDNESS"}, {"algorithms", {"MASCOT"}}}),
               std::invalid_argument);
}

TEST(ExperimentSpec, ReshuffleDefaults) {
  EXPECT_FALSE(small(ExperimentKind::kVarianceVsK).reshuffles());
  EXPECT_TRUE(small(ExperimentKind::kUnbiasedness).reshuffles());
}

TEST(Experiment, ResolveBudget) {
  EXPECT_EQ(resolve_budget(100, 5000), 100u);
  EXPECT_EQ(resolve_budget(0.1, 5000), 500u);
  EXPECT_GE(resolve_budget(0.0001, 100), 2u);
}

TEST(Experiment, TrialSeedsDiffer) {
  EXPECT_NE(trial_seed(1, 0, 0), trial_seed(1, 0, 1));
  EXPECT_NE(trial_seed(1, 0, 0), trial_seed(1, 1, 0));
  EXPECT_EQ(trial_seed(1, 2, 3), trial_seed(1, 2, 3));
}

TEST(Experiment, CsvRoundTrip) {
  TempDir d;
  std::vector<nlohmann::ordered_json> rows(2);
  rows[0]["name"] = "COCOS_OPT";
  rows[0]["k"] = 4;
  rows[0]["x"] = 0.125;
  rows[1]["name"] = "TRIFLY";
  rows[1]["k"] = 16;
  rows[1]["x"] = -3.5e-7;
  write_csv(d.path() / "t.csv", rows);
  const auto back = read_csv(d.path() / "t.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0]["name"], "COCOS_OPT");
  EXPECT_EQ(back[1]["k"].get<int>(), 16);
  EXPECT_DOUBLE_EQ(back[0]["x"].get<double>(), 0.125);
  EXPECT_DOUBLE_EQ(back[1]["x"].get<double>(), -3.5e-7);
  EXPECT_THROW(read_csv(d.path() / "missing.csv"), std::runtime_error);
}

TEST(Experiment, EveryKindRunsAndWritesPlotData) {
  for (auto kind : {ExperimentKind::kUnbiasedness, ExperimentKind::kVarianceVsK, ExperimentKind::kAccuracyVsBudget,
                    ExperimentKind::kSpeedAccuracy, ExperimentKind::kScalability, ExperimentKind::kThetaSweep,
                    ExperimentKind::kPartitionStats}) {
    ExperimentSpec s = small(kind);
    if (kind == ExperimentKind::kScalability) s.size_grid = {300, 600};
    if (kind == ExperimentKind::kThetaSweep) {
      s.algorithms = {Algorithm::kCocosOpt};
      s.theta_grid = {0, 0.5};
    }
    const ExperimentResult r = run_experiment(s);
    EXPECT_FALSE(r.summary.empty()) << to_string(kind);
    EXPECT_FALSE(r.trials.empty()) << to_string(kind);
    TempDir d;
    write_results(s, r, d.path() / "res");
    EXPECT_TRUE(fs::exists(d.path() / "res" / "manifest.json"));
    const auto files = emit_plotdata(d.path() / "res", d.path() / "plot");
    EXPECT_FALSE(files.empty()) << to_string(kind);
    for (const auto& f : files) EXPECT_GT(fs::file_size(f), 0u);
  }
}

TEST(Experiment, GridRowsAndBound) {
  ExperimentSpec s = small(ExperimentKind::kVarianceVsK);
  const ExperimentResult r = run_experiment(s);
  EXPECT_EQ(r.trials.size(), 3u * 2u * 4u);
  ASSERT_EQ(r.summary.size(), 6u);
  for (const auto& row : r.summary) {
    EXPECT_GE(row["bound"].get<double>(), 0.0);
    EXPECT_GT(row["truth"].get<double>(), 0.0);
  }
}

TEST(Experiment, DeterministicAcrossThreadCounts) {
  ExperimentSpec s = small(ExperimentKind::kUnbiasedness);
  const ExperimentResult a = run_experiment(s);
  s.threads = 3;
  const ExperimentResult b = run_experiment(s);
  ASSERT_EQ(a.trials.size(), b.trials.size());
  for (std::size_t j = 0; j < a.trials.size(); ++j) {
    EXPECT_EQ(a.trials[j]["estimate"], b.trials[j]["estimate"]);
    EXPECT_EQ(a.trials[j]["seed"], b.trials[j]["seed"]);
  }
  EXPECT_FALSE(a.tracked.empty());
}

TEST(Experiment, PlotDataMissingColumn) {
  ExperimentSpec s = small(ExperimentKind::kVarianceVsK);
  TempDir d;
  write_results(s, run_experiment(s), d.path());
  auto rows = read_csv(d.path() / "summary.csv");
  for (auto& row : rows) row.erase("bound");
  write_csv(d.path() / "summary.csv", rows);
  EXPECT_THROW(emit_plotdata(d.path(), d.path() / "plot"), std::runtime_error);
  EXPECT_THROW(emit_plotdata(d.path() / "nowhere", d.path() / "plot"), std::runtime_error);
}

TEST(Experiment, PowerlawStreamIsNotTruncated) {
  ExperimentSpec s = small(ExperimentKind::kAccuracyVsBudget);
  s.stream.generator = "powerlaw";
  s.stream.nodes = 300;
  s.stream.edges = 3;  // edges per new node
  s.k_grid = {2};
  s.trials = 2;
  const ExperimentResult r = run_experiment(s);
  const std::uint64_t expected = load_stream(s.stream).edges.size();
  EXPECT_GT(expected, 800u);
  for (const auto& row : r.summary) EXPECT_EQ(row["edges"].get<std::uint64_t>(), expected);
}

TEST(Experiment, LoadStreamFromFile) {
  TempDir d;
  std::ofstream(d.path() / "g.txt") << "1 2\n2 3\n1 3\n3 4\n";
  StreamSpec st;
  st.input = (d.path() / "g.txt").string();
  EXPECT_EQ(load_stream(st).edges.size(), 4u);
  EXPECT_EQ(load_stream(st, 2).edges.size(), 2u);
  StreamSpec bad;
  bad.generator = "smallworld";
  bad.edges = 10;
  EXPECT_THROW(load_stream(bad), std::invalid_argument);
}
