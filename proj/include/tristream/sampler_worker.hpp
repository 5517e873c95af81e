#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <absl/container/flat_hash_map.h>
#include <absl/container/flat_hash_set.h>
#include <absl/container/inlined_vector.h>

#include "tristream/random.hpp"
#include "tristream/types.hpp"

namespace tristream {

/// Probability that both wedge edges of a triangle sit in a reservoir of
/// capacity `budget` after `load` edges were offered to it:
/// min(1, b(b-1) / (l(l-1))), and 1 whenever l <= b or l < 2.
double discovery_probability(std::uint64_t load, std::uint64_t budget);

/// One increment for the aggregator. An empty node means the global count.
struct CountUpdate {
  std::optional<NodeId> node;
  double delta = 0.0;

  bool is_global() const { return !node.has_value(); }
  friend bool operator==(const CountUpdate&, const CountUpdate&) = default;
};

/// Neighbours of one node in a reservoir. Small sets live inline in the map
/// slot; large ones switch to a hash set.
class NeighborSet {
 public:
  std::size_t size() const { return large_ ? large_->size() : small_.size(); }
  bool empty() const { return size() == 0; }
  bool contains(NodeId u) const;
  /// False when u was already present.
  bool insert(NodeId u);
  /// False when u was absent.
  bool erase(NodeId u);

  template <typename F>
  void for_each(F&& f) const {
    if (large_) {
      for (NodeId u : *large_) f(u);
    } else {
      for (NodeId u : small_) f(u);
    }
  }

 private:
  static constexpr std::size_t kInlineLimit = 16;
  absl::InlinedVector<NodeId, 3> small_;
  std::unique_ptr<absl::flat_hash_set<NodeId>> large_;
};

/// Reservoir of at most `budget` edges plus the adjacency index over it.
/// Confined to one logical worker: no internal locking.
class SamplerWorker {
 public:
  SamplerWorker(WorkerIndex id, std::uint64_t budget, std::uint64_t seed);

  WorkerIndex id() const { return id_; }
  std::uint64_t budget() const { return budget_; }
  /// Number of edges passed to sample() so far.
  std::uint64_t load() const { return load_; }
  std::uint64_t evictions() const { return evictions_; }
  std::span<const Edge> reservoir() const { return reservoir_; }
  const NeighborSet* neighbors(NodeId u) const;
  bool stores(const Edge& e) const;

  /// Calls visit(w, weight) for every common neighbour w of e's endpoints in
  /// the reservoir, where weight = 1 / discovery_probability(load(), budget()).
  /// Returns the sum of the weights. Never mutates the reservoir.
  template <typename Visit>
  double for_each_triangle(const Edge& e, Visit&& visit) const;

  /// COUNT as a message list: (w, 1/p) per common neighbour, then
  /// (GLOBAL, sum), (u, sum), (v, sum). Nothing at all when sum == 0 unless
  /// `eager_zero` asks for the literal zero-valued triple.
  std::vector<CountUpdate> count(const Edge& e, bool eager_zero = false) const;

  /// SAMPLE: increments the load, then admits e by reservoir sampling.
  /// Returns whether e is now stored.
  bool sample(const Edge& e);

  /// Structural check that adjacency mirrors the reservoir and
  /// |reservoir| == min(load, budget).
  bool consistent() const;

 private:
  void link(const Edge& e);
  void unlink(const Edge& e);

  WorkerIndex id_;
  std::uint64_t budget_;
  std::uint64_t load_ = 0;
  std::uint64_t evictions_ = 0;
  Rng rng_;
  std::vector<Edge> reservoir_;
  absl::flat_hash_map<NodeId, NeighborSet> adjacency_;
};

template <typename Visit>
double SamplerWorker::for_each_triangle(const Edge& e, Visit&& visit) const {
  const NeighborSet* nu = neighbors(e.u);
  if (nu == nullptr) return 0.0;
  const NeighborSet* nv = neighbors(e.v);
  if (nv == nullptr) return 0.0;
  if (nu->size() > nv->size()) std::swap(nu, nv);
  const double weight = 1.0 / discovery_probability(load_, budget_);
  double sum = 0.0;
  nu->for_each([&](NodeId w) {
    if (nv->contains(w)) {
      visit(w, weight);
      sum += weight;
    }
  });
  return sum;
}

}  // namespace tristream
