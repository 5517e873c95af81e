#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <absl/container/flat_hash_set.h>

#include "tristream/random.hpp"
#include "tristream/types.hpp"

namespace tristream {

/// Ordered sequence of undirected edges. Edge i (0-based) arrives at time i + 1.
struct GraphStream {
  std::vector<Edge> edges;
  std::optional<std::uint64_t> node_count_hint;

  std::size_t size() const { return edges.size(); }
  bool empty() const { return edges.empty(); }
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Pull interface over a stream; the pipeline consumes one of these exactly once.
class EdgeSource {
 public:
  virtual ~EdgeSource() = default;
  virtual std::optional<Edge> next() = 0;
};

class SpanEdgeSource final : public EdgeSource {
 public:
  explicit SpanEdgeSource(std::span<const Edge> edges) : edges_(edges) {}
  std::optional<Edge> next() override {
    if (pos_ == edges_.size()) return std::nullopt;
    return edges_[pos_++];
  }

 private:
  std::span<const Edge> edges_;
  std::size_t pos_ = 0;
};

struct ParseOptions {
  /// 0 accepts any mix of whitespace and commas.
  char delimiter = 0;
};

/// Lazily reads "u v" pairs from a text file. Comment lines start with '#' or '%'.
/// Self-loops are skipped; duplicates are NOT removed (that needs memory, see
/// parse_edge_list). Columns past the second are ignored.
class EdgeListReader final : public EdgeSource {
 public:
  explicit EdgeListReader(const std::filesystem::path& path, ParseOptions options = {});
  std::optional<Edge> next() override;

  std::size_t line_number() const { return line_no_; }
  std::uint64_t self_loops_skipped() const { return self_loops_; }

 private:
  std::string path_;
  std::ifstream in_;
  ParseOptions options_;
  std::size_t line_no_ = 0;
  std::uint64_t self_loops_ = 0;
};

/// Reads the whole file, dropping self-loops and repeated undirected pairs
/// (first occurrence kept, order preserved).
GraphStream parse_edge_list(const std::filesystem::path& path, ParseOptions options = {});

/// Drops repeated undirected pairs, keeping first occurrences in order.
GraphStream deduplicate(std::span<const Edge> edges);

/// Uniform random permutation; deterministic given the seed. In-memory only.
GraphStream shuffle_stream(const GraphStream& s, std::uint64_t seed);

/// m distinct edges sampled uniformly without replacement among nodes 0..n-1,
/// emitted in sampling order (itself a uniformly random order).
GraphStream gen_random_graph(std::uint64_t n, std::uint64_t m, std::uint64_t seed);

/// On-the-fly variant of gen_random_graph for streams that should not be
/// materialised. Holds only the set of emitted pair keys.
class RandomGraphSource final : public EdgeSource {
 public:
  RandomGraphSource(std::uint64_t n, std::uint64_t m, std::uint64_t seed);
  std::optional<Edge> next() override;

 private:
  std::uint64_t n_;
  std::uint64_t m_;
  std::uint64_t emitted_ = 0;
  Rng rng_;
  absl::flat_hash_set<std::uint64_t> seen_;
  // Dense mode: all pairs materialised, partial Fisher-Yates.
  std::vector<std::uint64_t> pool_;
  bool dense_ = false;
};

/// Holme-Kim style preferential attachment with triad formation: heavy-tailed
/// degrees and many triangles. Each new node adds `edges_per_node` edges; each
/// edge after the first closes a triangle with probability `triad_probability`.
/// Edges come out in growth order; shuffle before streaming.
GraphStream gen_powerlaw_cluster(std::uint64_t n, std::uint64_t edges_per_node,
                                 double triad_probability, std::uint64_t seed);

/// Distinct node ids appearing in the stream, in first-appearance order.
std::vector<NodeId> stream_nodes(const GraphStream& s);

}  // namespace tristream
