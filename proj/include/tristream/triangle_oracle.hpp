#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <absl/container/flat_hash_map.h>

#include "tristream/routing.hpp"
#include "tristream/stream.hpp"
#include "tristream/types.hpp"

namespace tristream {

/// Exact triangles of a finished stream.
struct TriangleSet {
  std::vector<Triangle> triangles;  // sorted triples, sorted lexicographically
  /// Every node of the stream, including those in no triangle.
  absl::flat_hash_map<NodeId, std::uint64_t> per_node;

  std::uint64_t size() const { return triangles.size(); }
  std::uint64_t local(NodeId u) const;
};

/// Pairs of distinct triangles sharing an edge {u,v}. type1: both closing
/// edges touch the same shared endpoint. type2: they touch different ones.
struct PairCounts {
  std::uint64_t type1 = 0;
  std::uint64_t type2 = 0;

  std::uint64_t total() const { return type1 + type2; }
  friend bool operator==(const PairCounts&, const PairCounts&) = default;
};

struct WorkerPartition {
  std::uint64_t triangles = 0;  // |T_i|
  std::uint64_t load = 0;       // edges with an endpoint mapped to i
  PairCounts pairs;             // pairs with both triangles in T_i
  double z = 0.0;
};

struct PartitionStats {
  std::vector<WorkerPartition> workers;
  std::uint64_t triangle_sum = 0;
  double z_sum = 0.0;
};

TriangleSet exact_count(const GraphStream& s);
PairCounts pair_counts(const GraphStream& s);

/// max(0, T((t-1)(t-2)/(b(b-1)) - 1) + (p+q)(t-1-b)/b). Requires b >= 2.
double variance_bound(std::uint64_t t, std::uint64_t b, std::uint64_t triangles, const PairCounts& pc);

/// Triangles of a stream annotated with arrival order, kept so that
/// partition statistics can be recomputed cheaply for many assignments.
class StreamTriangles {
 public:
  explicit StreamTriangles(const GraphStream& s);

  std::uint64_t stream_length() const { return edges_.size(); }
  std::uint64_t triangle_count() const { return closing_.size(); }
  std::span<const NodeId> nodes() const { return nodes_; }
  PairCounts pairs() const { return pairs_; }
  /// Sorted triples, for building a TriangleSet.
  std::vector<Triangle> triangles() const;

 private:
  friend PartitionStats partition_stats(const StreamTriangles&, const NodeAssignment&, std::uint64_t);

  struct Closed {
    std::uint32_t u, v;  // endpoints of the last-arriving edge
    std::uint32_t w;     // the remaining node
  };
  // One triangle seen from one of its non-closing edges: whether its closing
  // edge touches the lower (0) or higher (1) endpoint of that edge.
  struct Member {
    std::uint32_t triangle;
    std::uint8_t side;
  };

  std::vector<NodeId> nodes_;                            // dense id -> node
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges_;  // dense endpoints
  std::vector<Closed> closing_;
  std::vector<std::uint64_t> group_start_;  // CSR over edges with >= 2 members
  std::vector<Member> members_;
  PairCounts pairs_;
};

/// Splits the triangles by the worker able to count them: f(u) when the
/// closing edge {u,v} has f(u) = f(v), otherwise f(w). Throws
/// std::invalid_argument when some node of the stream has no worker.
PartitionStats partition_stats(const StreamTriangles& st, const NodeAssignment& f, std::uint64_t budget);
PartitionStats partition_stats(const GraphStream& s, const NodeAssignment& f, std::uint64_t budget);

}  // namespace tristream
