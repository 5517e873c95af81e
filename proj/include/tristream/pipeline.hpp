#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <absl/container/flat_hash_map.h>

#include "tristream/routing.hpp"
#include "tristream/sampler_worker.hpp"
#include "tristream/stream.hpp"
#include "tristream/types.hpp"

namespace tristream {

enum class Algorithm : std::uint8_t { kTriFly, kCocosSimple, kCocosOpt };
enum class Aggregation : std::uint8_t { kEager, kLazy };
enum class Execution : std::uint8_t { kDeterministic, kConcurrent };

const char* to_string(Algorithm a);
const char* to_string(Aggregation a);
const char* to_string(Execution e);
Algorithm parse_algorithm(const std::string& s);
Aggregation parse_aggregation(const std::string& s);
Execution parse_execution(const std::string& s);

bool is_cocos(Algorithm a);

struct PipelineConfig {
  Algorithm algorithm = Algorithm::kCocosOpt;
  WorkerIndex workers = 1;
  std::uint64_t budget = 2;
  double theta = 0.2;
  std::uint64_t seed = 0;
  Aggregation aggregation = Aggregation::kEager;
  Execution execution = Execution::kDeterministic;
  bool instrument = false;
  /// Send the literal zero-sum triple from COUNT instead of suppressing it.
  bool eager_zero = false;
  std::size_t channel_capacity = 4096;
  /// Salted-hash variant of the modulo map; off by default.
  std::optional<std::uint64_t> modulo_salt;

  /// Throws std::invalid_argument on k < 1, b < 2, theta < 0 or zero capacity.
  void validate() const;
};

/// Seed of worker i's private generator.
std::uint64_t worker_seed(std::uint64_t run_seed, WorkerIndex worker);

/// Global estimate and sparse per-node local estimates.
class EstimateStore {
 public:
  double global() const { return global_; }
  double local(NodeId u) const;
  const absl::flat_hash_map<NodeId, double>& locals() const { return local_; }

  void add_global(double delta) { global_ += delta; }
  void add_local(NodeId u, double delta) { local_[u] += delta; }

 private:
  double global_ = 0.0;
  absl::flat_hash_map<NodeId, double> local_;
};

struct MessageCounters {
  std::vector<std::uint64_t> master_to_worker;      // edge messages per worker
  std::vector<std::uint64_t> worker_to_aggregator;  // key/value updates per worker
  std::uint64_t query_broadcasts = 0;

  std::uint64_t total() const;
};

/// Per-edge record kept when instrumentation is on.
struct EdgeTrace {
  Edge edge;
  RoutingDecision decision;
  std::uint32_t stored_by = 0;  // workers whose SAMPLE admitted the edge
};

struct Instrumentation {
  std::vector<EdgeTrace> edges;  // arrival order
  /// Workers that emitted each triangle (sorted, duplicates kept).
  std::map<Triangle, std::vector<WorkerIndex>> emitters;
};

struct RunReport {
  PipelineConfig config;
  std::uint64_t edges = 0;
  EstimateStore estimates;
  std::uint64_t lucky = 0;
  std::uint64_t unlucky = 0;
  std::uint64_t broadcast = 0;
  std::vector<std::uint64_t> worker_loads;  // l_i as counted by each worker
  std::vector<std::uint64_t> worker_stored;
  std::vector<std::uint64_t> worker_evictions;
  std::vector<std::uint64_t> master_loads;  // empty for Tri-Fly
  /// histogram[r] = edges stored by exactly r workers at admission (instrumented).
  std::vector<std::uint64_t> replication_histogram;
  MessageCounters messages;
  std::optional<LoadBoundAudit> load_audit;
  std::optional<NodeAssignment> final_assignment;  // instrumented CoCoS runs
  std::optional<Instrumentation> trace;
  double elapsed_seconds = 0.0;

  std::uint64_t max_replication() const;
};

/// Single master, k workers and one aggregator over in-process channels.
/// DETERMINISTIC runs everything on the caller's thread, visiting workers in
/// index order per edge. CONCURRENT gives every worker and the aggregator a
/// thread and bounded FIFO inboxes.
class Pipeline {
 public:
  explicit Pipeline(const PipelineConfig& cfg);
  /// Replaces the algorithm's router (fault injection, custom maps).
  Pipeline(const PipelineConfig& cfg, std::unique_ptr<Router> router);
  ~Pipeline();

  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  /// Routes one edge and delivers it to its receivers.
  void push(const Edge& e);
  /// Current estimates. Under LAZY this flushes every worker's accumulator into
  /// the aggregator and clears it.
  EstimateStore query_estimates();
  /// Final flush, shutdown, and report. Call once.
  RunReport finish();

  std::uint64_t edges_seen() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One pass over the stream. Elapsed time covers processing only, not the
/// time spent pulling edges from the source.
RunReport run(const PipelineConfig& cfg, EdgeSource& source, std::unique_ptr<Router> router = nullptr);
RunReport run(const PipelineConfig& cfg, const GraphStream& s, std::unique_ptr<Router> router = nullptr);

std::unique_ptr<Router> make_router(const PipelineConfig& cfg);

struct TriangleSet;

struct StructuralVerdict {
  bool cocos = false;
  std::uint64_t max_replication = 0;
  bool p1 = false;  // replication <= 2 (CoCoS) or <= k (Tri-Fly)
  std::uint64_t max_emitters = 0;
  std::uint64_t multiply_emitted = 0;
  std::uint64_t unknown_emitted = 0;  // emitted triples missing from the oracle
  bool p2 = false;  // each triangle emitted by <= 1 worker; vacuous for Tri-Fly
  std::uint64_t triangles_checked = 0;
  std::uint64_t without_potential_counter = 0;
  std::uint64_t with_several_potential_counters = 0;
  std::uint64_t designated_mismatches = 0;
  bool p3 = false;  // every triangle has a worker able to count it

  bool all() const { return p1 && p2 && p3 && unknown_emitted == 0; }
};

/// Checks storage redundancy, counting redundancy and counting coverage of an
/// instrumented run against the exact triangles of the same stream. Throws
/// std::logic_error when the run was not instrumented.
StructuralVerdict verify_structural_properties(const RunReport& r, const TriangleSet& oracle);

}  // namespace tristream
