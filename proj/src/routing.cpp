#include "tristream/routing.hpp"

#include "tristream/random.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace tristream {

const char* to_string(RouteCase c) {
  switch (c) {
    case RouteCase::kLucky: return "LUCKY";
    case RouteCase::kUnlucky: return "UNLUCKY";
    case RouteCase::kBroadcastAll: return "BROADCAST_ALL";
  }
  return "?";
}

RoutingDecision RoutingDecision::broadcast_all(WorkerIndex k) {
  RoutingDecision d;
  d.route = RouteCase::kBroadcastAll;
  d.worker_count = k;
  return d;
}

RoutingDecision RoutingDecision::lucky(WorkerIndex k, WorkerIndex owner) {
  RoutingDecision d;
  d.route = RouteCase::kLucky;
  d.worker_count = k;
  d.owners = {owner, owner};
  d.owner_count = 1;
  return d;
}

RoutingDecision RoutingDecision::unlucky(WorkerIndex k, WorkerIndex fu, WorkerIndex fv) {
  RoutingDecision d;
  d.route = RouteCase::kUnlucky;
  d.worker_count = k;
  d.owners = {fu, fv};
  d.owner_count = 2;
  return d;
}

std::vector<WorkerIndex> RoutingDecision::targets() const {
  std::vector<WorkerIndex> out;
  if (route == RouteCase::kLucky) {
    out.push_back(owners[0]);
    return out;
  }
  out.resize(worker_count);
  for (WorkerIndex i = 0; i < worker_count; ++i) out[i] = i;
  return out;
}

std::vector<WorkerIndex> RoutingDecision::assigned_workers() const {
  std::vector<WorkerIndex> out;
  for (WorkerIndex i : targets()) {
    if (is_assigned(i)) out.push_back(i);
  }
  return out;
}

std::optional<WorkerIndex> NodeAssignment::find(NodeId u) const {
  auto it = map_.find(u);
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

WorkerIndex NodeAssignment::at(NodeId u) const {
  auto it = map_.find(u);
  if (it == map_.end()) throw std::out_of_range("node " + std::to_string(u) + " has no worker");
  return it->second;
}

NodeAssignment modulo_assignment(std::span<const NodeId> nodes, WorkerIndex k) {
  NodeAssignment a(k);
  for (NodeId u : nodes) a.set(u, static_cast<WorkerIndex>(u % k));
  return a;
}

NodeAssignment random_assignment(std::span<const NodeId> nodes, WorkerIndex k, std::uint64_t seed) {
  Rng rng(seed);
  NodeAssignment a(k);
  for (NodeId u : nodes) a.set(u, static_cast<WorkerIndex>(uniform_below(rng, k)));
  return a;
}

NodeMap::NodeMap(MappingPolicy policy, WorkerIndex k, double theta, std::optional<std::uint64_t> salt)
    : policy_(policy), k_(k), theta_(theta), salt_(salt), loads_(k, 0) {
  if (k < 1) throw std::invalid_argument("worker count must be at least 1");
  if (!(theta >= 0.0)) throw std::invalid_argument("theta must be non-negative");
}

NodeMap NodeMap::modulo(WorkerIndex k, std::optional<std::uint64_t> salt) {
  return NodeMap(MappingPolicy::kModulo, k, 0.0, salt);
}

NodeMap NodeMap::adaptive(WorkerIndex k, double theta) {
  return NodeMap(MappingPolicy::kAdaptive, k, theta, std::nullopt);
}

WorkerIndex NodeMap::modulo_of(NodeId u) const {
  const NodeId key = salt_ ? mix64(u ^ *salt_) : u;
  return static_cast<WorkerIndex>(key % k_);
}

std::optional<WorkerIndex> NodeMap::lookup(NodeId u) const {
  if (policy_ == MappingPolicy::kModulo) return modulo_of(u);
  auto it = assignment_.find(u);
  if (it == assignment_.end()) return std::nullopt;
  return it->second;
}

// Lowest index wins ties.
WorkerIndex NodeMap::least_loaded() const {
  WorkerIndex best = 0;
  for (WorkerIndex i = 1; i < k_; ++i) {
    if (loads_[i] < loads_[best]) best = i;
  }
  return best;
}

WorkerIndex NodeMap::place(NodeId fresh, WorkerIndex partner_worker, WorkerIndex least) {
  const double limit = (1.0 + theta_) * static_cast<double>(loads_[least]);
  WorkerIndex chosen;
  if (static_cast<double>(loads_[partner_worker]) <= limit) {
    chosen = partner_worker;
    ++audit_.follow_assignments;
    const auto min_load = *std::min_element(loads_.begin(), loads_.end());
    if (static_cast<double>(loads_[partner_worker]) > (1.0 + theta_) * static_cast<double>(min_load)) {
      ++audit_.violations;
    }
  } else {
    chosen = least;
    ++audit_.fresh_assignments;
  }
  assignment_.emplace(fresh, chosen);
  return chosen;
}

RoutingDecision NodeMap::route(const Edge& e) {
  WorkerIndex fu;
  WorkerIndex fv;
  if (policy_ == MappingPolicy::kModulo) {
    fu = modulo_of(e.u);
    fv = modulo_of(e.v);
  } else {
    auto iu = assignment_.find(e.u);
    auto iv = assignment_.find(e.v);
    const bool has_u = iu != assignment_.end();
    const bool has_v = iv != assignment_.end();
    if (has_u && has_v) {
      fu = iu->second;
      fv = iv->second;
    } else {
      const WorkerIndex least = least_loaded();
      if (!has_u && !has_v) {
        fu = fv = least;
        assignment_.emplace(e.u, least);
        assignment_.emplace(e.v, least);
        ++audit_.fresh_assignments;
      } else if (!has_u) {
        fv = iv->second;
        fu = place(e.u, fv, least);
      } else {
        fu = iu->second;
        fv = place(e.v, fu, least);
      }
    }
  }
  if (fu == fv) {
    ++loads_[fu];
    return RoutingDecision::lucky(k_, fu);
  }
  ++loads_[fu];
  ++loads_[fv];
  return RoutingDecision::unlucky(k_, fu, fv);
}

NodeAssignment NodeMap::snapshot() const {
  if (policy_ == MappingPolicy::kModulo) {
    throw std::logic_error("modulo map snapshot needs the node list");
  }
  NodeAssignment a(k_);
  for (const auto& [u, w] : assignment_) a.set(u, w);
  return a;
}

NodeAssignment NodeMap::snapshot(std::span<const NodeId> nodes) const {
  NodeAssignment a(k_);
  for (NodeId u : nodes) {
    if (auto w = lookup(u)) a.set(u, *w);
  }
  return a;
}

RoutingDecision route_modulo(const Edge& e, WorkerIndex k) {
  if (k < 1) throw std::invalid_argument("worker count must be at least 1");
  const auto fu = static_cast<WorkerIndex>(e.u % k);
  const auto fv = static_cast<WorkerIndex>(e.v % k);
  return fu == fv ? RoutingDecision::lucky(k, fu) : RoutingDecision::unlucky(k, fu, fv);
}

RoutingDecision route_adaptive(NodeMap& m, const Edge& e) {
  if (m.policy() != MappingPolicy::kAdaptive) throw std::invalid_argument("node map is not adaptive");
  return m.route(e);
}

}  // namespace tristream
