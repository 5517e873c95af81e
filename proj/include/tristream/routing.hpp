#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <absl/container/flat_hash_map.h>

#include "tristream/types.hpp"

namespace tristream {

enum class RouteCase : std::uint8_t {
  kLucky,         // f(u) == f(v): unicast to that worker, which samples
  kUnlucky,       // f(u) != f(v): every worker counts, f(u) and f(v) sample
  kBroadcastAll,  // every worker counts and samples
};

const char* to_string(RouteCase c);

/// Where one edge goes and which receivers may store it. The assigned bit is
/// carried per receiver, so workers never need a copy of the node map.
struct RoutingDecision {
  RouteCase route = RouteCase::kBroadcastAll;
  WorkerIndex worker_count = 1;
  std::array<WorkerIndex, 2> owners{};
  std::uint8_t owner_count = 0;

  static RoutingDecision broadcast_all(WorkerIndex k);
  static RoutingDecision lucky(WorkerIndex k, WorkerIndex owner);
  static RoutingDecision unlucky(WorkerIndex k, WorkerIndex fu, WorkerIndex fv);

  bool is_target(WorkerIndex i) const {
    return route != RouteCase::kLucky || owners[0] == i;
  }
  bool is_assigned(WorkerIndex i) const {
    if (route == RouteCase::kBroadcastAll) return true;
    for (std::uint8_t j = 0; j < owner_count; ++j) {
      if (owners[j] == i) return true;
    }
    return false;
  }
  std::vector<WorkerIndex> targets() const;
  std::vector<WorkerIndex> assigned_workers() const;
};

/// Master-side routing policy. Owned by the single master.
class Router {
 public:
  virtual ~Router() = default;
  virtual WorkerIndex worker_count() const = 0;
  virtual RoutingDecision route(const Edge& e) = 0;
};

/// Tri-Fly master: every edge to every worker.
class BroadcastRouter final : public Router {
 public:
  explicit BroadcastRouter(WorkerIndex k) : k_(k) {}
  WorkerIndex worker_count() const override { return k_; }
  RoutingDecision route(const Edge&) override { return RoutingDecision::broadcast_all(k_); }

 private:
  WorkerIndex k_;
};

/// Frozen node -> worker map, used for diagnostics over a finished stream.
class NodeAssignment {
 public:
  explicit NodeAssignment(WorkerIndex k) : k_(k) {}

  WorkerIndex worker_count() const { return k_; }
  std::size_t size() const { return map_.size(); }
  void set(NodeId u, WorkerIndex w) { map_[u] = w; }
  std::optional<WorkerIndex> find(NodeId u) const;
  /// Throws std::out_of_range for unassigned nodes.
  WorkerIndex at(NodeId u) const;
  const absl::flat_hash_map<NodeId, WorkerIndex>& entries() const { return map_; }

 private:
  WorkerIndex k_;
  absl::flat_hash_map<NodeId, WorkerIndex> map_;
};

NodeAssignment modulo_assignment(std::span<const NodeId> nodes, WorkerIndex k);
/// Each node independently uniform over the k workers.
NodeAssignment random_assignment(std::span<const NodeId> nodes, WorkerIndex k, std::uint64_t seed);

enum class MappingPolicy : std::uint8_t { kModulo, kAdaptive };

/// Audit of the adaptive policy's tolerance rule, recomputed independently of
/// the branch that applied it.
struct LoadBoundAudit {
  std::uint64_t follow_assignments = 0;  // f(u) <- f(v) branch taken
  std::uint64_t fresh_assignments = 0;   // assigned to the least-loaded worker
  std::uint64_t violations = 0;
};

/// The node mapping function f and the per-edge routing it implies.
class NodeMap final : public Router {
 public:
  /// f(u) = u mod k, or mix(u ^ salt) mod k when a salt is given.
  static NodeMap modulo(WorkerIndex k, std::optional<std::uint64_t> salt = std::nullopt);
  /// Load-aware write-once assignment with tolerance theta >= 0.
  static NodeMap adaptive(WorkerIndex k, double theta);

  MappingPolicy policy() const { return policy_; }
  WorkerIndex worker_count() const override { return k_; }
  double theta() const { return theta_; }

  RoutingDecision route(const Edge& e) override;

  /// Current f(u); empty when the adaptive map has not seen u yet.
  std::optional<WorkerIndex> lookup(NodeId u) const;
  /// Edges assigned to each worker so far: +1 for a Lucky edge's owner,
  /// +1 for each of the two owners of an Unlucky edge.
  std::span<const std::uint64_t> loads() const { return loads_; }
  const LoadBoundAudit& audit() const { return audit_; }
  /// Adaptive: every assigned node. Modulo: requires the node list.
  NodeAssignment snapshot() const;
  NodeAssignment snapshot(std::span<const NodeId> nodes) const;

 private:
  NodeMap(MappingPolicy policy, WorkerIndex k, double theta, std::optional<std::uint64_t> salt);

  WorkerIndex modulo_of(NodeId u) const;
  WorkerIndex least_loaded() const;
  WorkerIndex place(NodeId fresh, WorkerIndex partner_worker, WorkerIndex least);

  MappingPolicy policy_;
  WorkerIndex k_;
  double theta_ = 0.0;
  std::optional<std::uint64_t> salt_;
  std::vector<std::uint64_t> loads_;
  absl::flat_hash_map<NodeId, WorkerIndex> assignment_;
  LoadBoundAudit audit_;
};

/// Stateless modulo routing of a single edge.
RoutingDecision route_modulo(const Edge& e, WorkerIndex k);
/// One step of the adaptive master; mutates m.
RoutingDecision route_adaptive(NodeMap& m, const Edge& e);

}  // namespace tristream
