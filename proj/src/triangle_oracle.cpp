#include "tristream/triangle_oracle.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

namespace tristream {

std::uint64_t TriangleSet::local(NodeId u) const {
  auto it = per_node.find(u);
  return it == per_node.end() ? 0 : it->second;
}

double variance_bound(std::uint64_t t, std::uint64_t b, std::uint64_t triangles, const PairCounts& pc) {
  if (b < 2) throw std::invalid_argument("budget must be at least 2");
  const double td = static_cast<double>(t);
  const double bd = static_cast<double>(b);
  const double first = static_cast<double>(triangles) * ((td - 1.0) * (td - 2.0) / (bd * (bd - 1.0)) - 1.0);
  const double second = static_cast<double>(pc.total()) * (td - 1.0 - bd) / bd;
  return std::max(0.0, first + second);
}

namespace {

struct Arc {
  std::uint32_t to;
  std::uint32_t time;
};

std::uint64_t choose2(std::uint64_t n) { return n * (n - 1) / 2; }

}  // namespace

StreamTriangles::StreamTriangles(const GraphStream& s) {
  if (s.edges.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("stream too long for the exact oracle");
  }
  absl::flat_hash_map<NodeId, std::uint32_t> dense;
  dense.reserve(s.node_count_hint.value_or(s.edges.size()));
  auto id_of = [&](NodeId u) {
    auto [it, fresh] = dense.try_emplace(u, static_cast<std::uint32_t>(nodes_.size()));
    if (fresh) nodes_.push_back(u);
    return it->second;
  };
  edges_.reserve(s.edges.size());
  for (const Edge& e : s.edges) {
    const std::uint32_t a = id_of(e.u);
    const std::uint32_t b = id_of(e.v);
    edges_.emplace_back(a, b);
  }
  const std::size_t n = nodes_.size();

  // Orient every edge from lower to higher (degree, id) rank.
  std::vector<std::uint32_t> degree(n, 0);
  for (const auto& [a, b] : edges_) {
    ++degree[a];
    ++degree[b];
  }
  auto before = [&](std::uint32_t x, std::uint32_t y) {
    return degree[x] != degree[y] ? degree[x] < degree[y] : x < y;
  };
  std::vector<std::uint64_t> out_start(n + 1, 0);
  for (const auto& [a, b] : edges_) ++out_start[(before(a, b) ? a : b) + 1];
  for (std::size_t x = 0; x < n; ++x) out_start[x + 1] += out_start[x];
  std::vector<Arc> arcs(edges_.size());
  {
    std::vector<std::uint64_t> fill(out_start.begin(), out_start.end() - 1);
    for (std::uint32_t t = 0; t < edges_.size(); ++t) {
      auto [a, b] = edges_[t];
      if (!before(a, b)) std::swap(a, b);
      arcs[fill[a]++] = {b, t};
    }
  }
  for (std::size_t x = 0; x < n; ++x) {
    auto first = arcs.begin() + static_cast<std::ptrdiff_t>(out_start[x]);
    auto last = arcs.begin() + static_cast<std::ptrdiff_t>(out_start[x + 1]);
    std::sort(first, last, [](const Arc& l, const Arc& r) { return l.to < r.to; });
    if (std::adjacent_find(first, last, [](const Arc& l, const Arc& r) { return l.to == r.to; }) != last) {
      throw std::invalid_argument("stream contains a repeated edge");
    }
  }

  // Each triangle as (closing time, the other two edge times).
  struct Found {
    std::uint32_t closing;
    std::uint32_t other[2];
  };
  std::vector<Found> found;
  for (std::uint32_t x = 0; x < n; ++x) {
    for (std::uint64_t i = out_start[x]; i < out_start[x + 1]; ++i) {
      const Arc xy = arcs[i];
      std::uint64_t p = out_start[x];
      std::uint64_t q = out_start[xy.to];
      const std::uint64_t pe = out_start[x + 1];
      const std::uint64_t qe = out_start[xy.to + 1];
      while (p < pe && q < qe) {
        if (arcs[p].to < arcs[q].to) {
          ++p;
        } else if (arcs[q].to < arcs[p].to) {
          ++q;
        } else {
          std::uint32_t times[3] = {xy.time, arcs[p].time, arcs[q].time};
          std::sort(times, times + 3);
          found.push_back({times[2], {times[0], times[1]}});
          ++p;
          ++q;
        }
      }
    }
  }

  closing_.reserve(found.size());
  std::vector<std::uint32_t> per_edge(edges_.size() + 1, 0);
  for (const Found& f : found) {
    const auto [u, v] = edges_[f.closing];
    const auto [a, b] = edges_[f.other[0]];
    const std::uint32_t w = (a == u || a == v) ? b : a;
    closing_.push_back({u, v, w});
    ++per_edge[f.other[0] + 1];
    ++per_edge[f.other[1] + 1];
  }
  std::vector<std::uint64_t> start(edges_.size() + 1, 0);
  for (std::size_t t = 0; t < edges_.size(); ++t) start[t + 1] = start[t] + per_edge[t + 1];
  std::vector<Member> all(start.back());
  {
    std::vector<std::uint64_t> fill(start.begin(), start.end() - 1);
    for (std::uint32_t tri = 0; tri < found.size(); ++tri) {
      const Closed& c = closing_[tri];
      for (std::uint32_t t : found[tri].other) {
        const std::uint32_t low = edges_[t].first;
        const bool touches_low = low == c.u || low == c.v;
        all[fill[t]++] = {tri, static_cast<std::uint8_t>(touches_low ? 0 : 1)};
      }
    }
  }

  group_start_.push_back(0);
  for (std::size_t t = 0; t < edges_.size(); ++t) {
    const std::uint64_t size = start[t + 1] - start[t];
    if (size < 2) continue;
    std::uint64_t side0 = 0;
    for (std::uint64_t j = start[t]; j < start[t + 1]; ++j) {
      members_.push_back(all[j]);
      side0 += all[j].side == 0;
    }
    const std::uint64_t side1 = size - side0;
    pairs_.type1 += choose2(side0) + choose2(side1);
    pairs_.type2 += side0 * side1;
    group_start_.push_back(members_.size());
  }
}

std::vector<Triangle> StreamTriangles::triangles() const {
  std::vector<Triangle> out;
  out.reserve(closing_.size());
  for (const Closed& c : closing_) out.push_back(make_triangle(nodes_[c.u], nodes_[c.v], nodes_[c.w]));
  std::sort(out.begin(), out.end());
  return out;
}

TriangleSet exact_count(const GraphStream& s) {
  StreamTriangles st(s);
  TriangleSet out;
  out.triangles = st.triangles();
  out.per_node.reserve(st.nodes().size());
  for (NodeId u : st.nodes()) out.per_node.emplace(u, 0);
  for (const Triangle& t : out.triangles) {
    for (NodeId u : t) ++out.per_node[u];
  }
  return out;
}

PairCounts pair_counts(const GraphStream& s) { return StreamTriangles(s).pairs(); }

PartitionStats partition_stats(const StreamTriangles& st, const NodeAssignment& f, std::uint64_t budget) {
  const WorkerIndex k = f.worker_count();
  if (k < 1) throw std::invalid_argument("worker count must be at least 1");
  std::vector<WorkerIndex> owner_of(st.nodes_.size());
  for (std::size_t x = 0; x < st.nodes_.size(); ++x) {
    const auto w = f.find(st.nodes_[x]);
    if (!w) throw std::invalid_argument("node " + std::to_string(st.nodes_[x]) + " has no worker");
    if (*w >= k) throw std::invalid_argument("node " + std::to_string(st.nodes_[x]) + " mapped out of range");
    owner_of[x] = *w;
  }

  PartitionStats out;
  out.workers.assign(k, {});
  for (const auto& [a, b] : st.edges_) {
    const WorkerIndex i = owner_of[a];
    const WorkerIndex j = owner_of[b];
    ++out.workers[i].load;
    if (j != i) ++out.workers[j].load;
  }

  std::vector<WorkerIndex> counter(st.closing_.size());
  for (std::size_t tri = 0; tri < st.closing_.size(); ++tri) {
    const auto& c = st.closing_[tri];
    const WorkerIndex fu = owner_of[c.u];
    counter[tri] = fu == owner_of[c.v] ? fu : owner_of[c.w];
    ++out.workers[counter[tri]].triangles;
  }

  std::vector<std::uint64_t> side_count[2] = {std::vector<std::uint64_t>(k, 0), std::vector<std::uint64_t>(k, 0)};
  std::vector<WorkerIndex> touched;
  for (std::size_t g = 0; g + 1 < st.group_start_.size(); ++g) {
    touched.clear();
    for (std::uint64_t j = st.group_start_[g]; j < st.group_start_[g + 1]; ++j) {
      const auto& m = st.members_[j];
      const WorkerIndex i = counter[m.triangle];
      if (side_count[0][i] == 0 && side_count[1][i] == 0) touched.push_back(i);
      ++side_count[m.side][i];
    }
    for (WorkerIndex i : touched) {
      const std::uint64_t a = side_count[0][i];
      const std::uint64_t b = side_count[1][i];
      out.workers[i].pairs.type1 += choose2(a) + choose2(b);
      out.workers[i].pairs.type2 += a * b;
      side_count[0][i] = 0;
      side_count[1][i] = 0;
    }
  }

  for (WorkerPartition& w : out.workers) {
    w.z = variance_bound(w.load, budget, w.triangles, w.pairs);
    out.triangle_sum += w.triangles;
    out.z_sum += w.z;
  }
  return out;
}

PartitionStats partition_stats(const GraphStream& s, const NodeAssignment& f, std::uint64_t budget) {
  return partition_stats(StreamTriangles(s), f, budget);
}

}  // namespace tristream
