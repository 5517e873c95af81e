#include "tristream/sampler_worker.hpp"

#include <algorithm>
#include <stdexcept>

namespace tristream {

double discovery_probability(std::uint64_t load, std::uint64_t budget) {
  if (load <= budget || load < 2) return 1.0;
  const double b = static_cast<double>(budget);
  const double l = static_cast<double>(load);
  return (b * (b - 1.0)) / (l * (l - 1.0));
}

bool NeighborSet::contains(NodeId u) const {
  if (large_) return large_->contains(u);
  return std::find(small_.begin(), small_.end(), u) != small_.end();
}

bool NeighborSet::insert(NodeId u) {
  if (large_) return large_->insert(u).second;
  if (std::find(small_.begin(), small_.end(), u) != small_.end()) return false;
  if (small_.size() < kInlineLimit) {
    small_.push_back(u);
    return true;
  }
  large_ = std::make_unique<absl::flat_hash_set<NodeId>>(small_.begin(), small_.end());
  small_.clear();
  small_.shrink_to_fit();
  return large_->insert(u).second;
}

bool NeighborSet::erase(NodeId u) {
  if (large_) {
    const bool removed = large_->erase(u) > 0;
    if (large_->size() < kInlineLimit / 2) {
      small_.assign(large_->begin(), large_->end());
      large_.reset();
    }
    return removed;
  }
  auto it = std::find(small_.begin(), small_.end(), u);
  if (it == small_.end()) return false;
  *it = small_.back();
  small_.pop_back();
  return true;
}

SamplerWorker::SamplerWorker(WorkerIndex id, std::uint64_t budget, std::uint64_t seed)
    : id_(id), budget_(budget), rng_(seed) {
  if (budget < 2) throw std::invalid_argument("worker budget must be at least 2");
}

const NeighborSet* SamplerWorker::neighbors(NodeId u) const {
  auto it = adjacency_.find(u);
  return it == adjacency_.end() ? nullptr : &it->second;
}

bool SamplerWorker::stores(const Edge& e) const {
  const NeighborSet* nu = neighbors(e.u);
  return nu != nullptr && nu->contains(e.v);
}

std::vector<CountUpdate> SamplerWorker::count(const Edge& e, bool eager_zero) const {
  std::vector<CountUpdate> updates;
  const double sum = for_each_triangle(e, [&](NodeId w, double weight) {
    updates.push_back({w, weight});
  });
  if (sum == 0.0 && !eager_zero) return updates;
  updates.push_back({std::nullopt, sum});
  updates.push_back({e.u, sum});
  updates.push_back({e.v, sum});
  return updates;
}

bool SamplerWorker::sample(const Edge& e) {
  ++load_;
  if (reservoir_.size() < budget_) {
    reservoir_.push_back(e);
    link(e);
    return true;
  }
  // One draw j in [0, l): j < b happens with probability b/l and, given that,
  // j is a uniform slot in [0, b).
  const std::uint64_t j = uniform_below(rng_, load_);
  if (j >= budget_) return false;
  unlink(reservoir_[j]);
  reservoir_[j] = e;
  link(e);
  ++evictions_;
  return true;
}

void SamplerWorker::link(const Edge& e) {
  adjacency_[e.u].insert(e.v);
  adjacency_[e.v].insert(e.u);
}

void SamplerWorker::unlink(const Edge& e) {
  for (auto [a, b] : {std::pair{e.u, e.v}, std::pair{e.v, e.u}}) {
    auto it = adjacency_.find(a);
    it->second.erase(b);
    if (it->second.empty()) adjacency_.erase(it);
  }
}

bool SamplerWorker::consistent() const {
  const std::uint64_t expected = load_ < budget_ ? load_ : budget_;
  if (reservoir_.size() != expected) return false;
  std::size_t half_edges = 0;
  for (const auto& [node, nbrs] : adjacency_) {
    if (nbrs.empty()) return false;
    half_edges += nbrs.size();
  }
  if (half_edges != 2 * reservoir_.size()) return false;
  for (const Edge& e : reservoir_) {
    if (!stores(e)) return false;
    const NeighborSet* nv = neighbors(e.v);
    if (nv == nullptr || !nv->contains(e.u)) return false;
  }
  return true;
}

}  // namespace tristream
