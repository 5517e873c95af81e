#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <utility>

namespace tristream {

using NodeId = std::uint64_t;
using WorkerIndex = std::uint32_t;

/// Undirected edge stored as (min, max). Self-loops are rejected at construction.
struct Edge {
  NodeId u = 0;
  NodeId v = 0;

  Edge() = default;
  Edge(NodeId a, NodeId b) : u(a < b ? a : b), v(a < b ? b : a) {
    if (a == b) throw std::invalid_argument("self-loop edge");
  }

  bool touches(NodeId x) const { return u == x || v == x; }
  NodeId other(NodeId x) const { return x == u ? v : u; }

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;

  template <typename H>
  friend H AbslHashValue(H h, const Edge& e) {
    return H::combine(std::move(h), e.u, e.v);
  }
};

/// Sorted node triple.
using Triangle = std::array<NodeId, 3>;

inline Triangle make_triangle(NodeId a, NodeId b, NodeId c) {
  if (a > b) std::swap(a, b);
  if (b > c) std::swap(b, c);
  if (a > b) std::swap(a, b);
  return {a, b, c};
}

// splitmix64 finalizer; all derived seeds go through here.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a) {
  return mix64(mix64(base) ^ (a + 0x632be59bd9b4e019ULL));
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return derive_seed(derive_seed(base, a), b);
}

}  // namespace tristream
