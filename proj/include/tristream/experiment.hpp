#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tristream/pipeline.hpp"

namespace tristream {

enum class ExperimentKind : std::uint8_t {
  kUnbiasedness,
  kVarianceVsK,
  kAccuracyVsBudget,
  kSpeedAccuracy,
  kScalability,
  kThetaSweep,
  kPartitionStats,
};

const char* to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(const std::string& s);

struct StreamSpec {
  std::string input;             // edge-list file; empty selects a generator
  std::string generator = "er";  // "er" or "powerlaw"
  std::uint64_t nodes = 0;       // 0: stream size / 10 for "er"
  std::uint64_t edges = 0;       // "er": edge count. "powerlaw": edges per new node
  double triad_probability = 0.5;
  std::uint64_t seed = 1;
};

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::kUnbiasedness;
  std::vector<Algorithm> algorithms = {Algorithm::kTriFly, Algorithm::kCocosSimple, Algorithm::kCocosOpt};
  std::uint64_t trials = 1;
  std::vector<WorkerIndex> k_grid = {4};
  /// Values >= 1 are absolute budgets; values in (0,1) are fractions of |E|.
  std::vector<double> b_grid = {100};
  std::vector<double> theta_grid = {0.2};
  std::vector<std::uint64_t> size_grid;  // stream sizes, scalability only
  StreamSpec stream;
  /// Fresh arrival order per trial. Unset: off for VARIANCE_VS_K, on otherwise.
  std::optional<bool> reshuffle;
  Aggregation aggregation = Aggregation::kEager;
  Execution execution = Execution::kDeterministic;
  std::uint64_t base_seed = 0;
  unsigned threads = 1;
  std::uint64_t tracked_nodes = 20;  // local estimates followed by UNBIASEDNESS
  std::uint64_t oracle_edge_limit = 2'000'000;

  /// Throws std::invalid_argument.
  void validate() const;
  bool reshuffles() const;
};

nlohmann::ordered_json spec_to_json(const ExperimentSpec& spec);
ExperimentSpec spec_from_json(const nlohmann::json& j);

/// Rows are flat JSON objects sharing one key set per table.
struct ExperimentResult {
  std::vector<nlohmann::ordered_json> trials;
  std::vector<nlohmann::ordered_json> summary;
  std::vector<nlohmann::ordered_json> tracked;  // per-node unbiasedness rows
  bool oracle_skipped = false;
};

/// Budget for one grid value against a stream of `edges` edges.
std::uint64_t resolve_budget(double value, std::uint64_t edges);

/// Seed of trial j in configuration c.
std::uint64_t trial_seed(std::uint64_t base, std::uint64_t config, std::uint64_t trial);

/// The stream described by spec.stream, with `size` edges when a generator
/// takes a size.
GraphStream load_stream(const StreamSpec& spec, std::uint64_t size = 0);

ExperimentResult run_experiment(const ExperimentSpec& spec);

/// trials.csv, summary.csv, tracked.csv (when present) and manifest.json.
void write_results(const ExperimentSpec& spec, const ExperimentResult& result, const std::filesystem::path& dir);

/// Reads a results directory and writes one whitespace-separated series file
/// per (plot kind, configuration group). Returns the files written. Throws
/// std::runtime_error when a required column is missing.
std::vector<std::filesystem::path> emit_plotdata(const std::filesystem::path& results_dir,
                                                 const std::filesystem::path& out_dir);

/// CSV helpers shared with the command-line tool.
void write_csv(const std::filesystem::path& path, const std::vector<nlohmann::ordered_json>& rows);
std::vector<nlohmann::ordered_json> read_csv(const std::filesystem::path& path);

}  // namespace tristream
