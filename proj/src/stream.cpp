#include "tristream/stream.hpp"

#include <algorithm>
#include <charconv>
#include <string_view>

namespace tristream {

namespace {

bool is_separator(char c, char delimiter) {
  if (c == ' ' || c == '\t' || c == '\r' || c == '\n') return true;
  return delimiter == 0 ? c == ',' : c == delimiter;
}

std::uint64_t pair_key(const Edge& e, std::uint64_t n) { return e.u * n + e.v; }

Edge pair_from_key(std::uint64_t key, std::uint64_t n) { return Edge(key / n, key % n); }

}  // namespace

ParseError::ParseError(const std::string& path, std::size_t line, const std::string& what)
    : std::runtime_error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

EdgeListReader::EdgeListReader(const std::filesystem::path& path, ParseOptions options)
    : path_(path.string()), in_(path), options_(options) {
  if (!in_) throw std::runtime_error("cannot open edge list: " + path_);
}

std::optional<Edge> EdgeListReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    std::string_view rest(line);
    const auto first = rest.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) continue;
    if (rest[first] == '#' || rest[first] == '%') continue;

    std::uint64_t ids[2];
    int found = 0;
    std::size_t pos = first;
    while (found < 2) {
      while (pos < rest.size() && is_separator(rest[pos], options_.delimiter)) ++pos;
      if (pos == rest.size()) break;
      std::size_t end = pos;
      while (end < rest.size() && !is_separator(rest[end], options_.delimiter)) ++end;
      const std::string_view token = rest.substr(pos, end - pos);
      if (token.front() == '-') throw ParseError(path_, line_no_, "negative node id '" + std::string(token) + "'");
      auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), ids[found]);
      if (ec != std::errc() || ptr != token.data() + token.size()) {
        throw ParseError(path_, line_no_, "malformed node id '" + std::string(token) + "'");
      }
      ++found;
      pos = end;
    }
    if (found < 2) throw ParseError(path_, line_no_, "expected two node ids");
    if (ids[0] == ids[1]) {
      ++self_loops_;
      continue;
    }
    return Edge(ids[0], ids[1]);
  }
  if (in_.bad()) throw std::runtime_error("read failure on " + path_);
  return std::nullopt;
}

GraphStream deduplicate(std::span<const Edge> edges) {
  GraphStream out;
  absl::flat_hash_set<Edge> seen;
  seen.reserve(edges.size());
  out.edges.reserve(edges.size());
  for (const Edge& e : edges) {
    if (seen.insert(e).second) out.edges.push_back(e);
  }
  return out;
}

GraphStream parse_edge_list(const std::filesystem::path& path, ParseOptions options) {
  EdgeListReader reader(path, options);
  GraphStream out;
  absl::flat_hash_set<Edge> seen;
  absl::flat_hash_set<NodeId> nodes;
  while (auto e = reader.next()) {
    if (!seen.insert(*e).second) continue;
    out.edges.push_back(*e);
    nodes.insert(e->u);
    nodes.insert(e->v);
  }
  out.node_count_hint = nodes.size();
  return out;
}

GraphStream shuffle_stream(const GraphStream& s, std::uint64_t seed) {
  GraphStream out = s;
  Rng rng(seed);
  auto& e = out.edges;
  for (std::size_t i = e.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(e[i - 1], e[j]);
  }
  return out;
}

RandomGraphSource::RandomGraphSource(std::uint64_t n, std::uint64_t m, std::uint64_t seed)
    : n_(n), m_(m), rng_(seed) {
  if (n > (std::uint64_t{1} << 32)) throw std::invalid_argument("node count above 2^32");
  const std::uint64_t total = n < 2 ? 0 : n * (n - 1) / 2;
  if (m > total) {
    throw std::invalid_argument("cannot place " + std::to_string(m) + " distinct edges on " +
                                std::to_string(n) + " nodes");
  }
  dense_ = m > total / 2;
  if (dense_) {
    pool_.reserve(total);
    for (std::uint64_t u = 0; u < n; ++u) {
      for (std::uint64_t v = u + 1; v < n; ++v) pool_.push_back(u * n + v);
    }
  } else {
    seen_.reserve(m);
  }
}

std::optional<Edge> RandomGraphSource::next() {
  if (emitted_ == m_) return std::nullopt;
  if (dense_) {
    const std::uint64_t remaining = pool_.size() - emitted_;
    const std::uint64_t j = emitted_ + uniform_below(rng_, remaining);
    std::swap(pool_[emitted_], pool_[j]);
    return pair_from_key(pool_[emitted_++], n_);
  }
  for (;;) {
    const NodeId a = uniform_below(rng_, n_);
    const NodeId b = uniform_below(rng_, n_);
    if (a == b) continue;
    const Edge e(a, b);
    if (seen_.insert(pair_key(e, n_)).second) {
      ++emitted_;
      return e;
    }
  }
}

GraphStream gen_random_graph(std::uint64_t n, std::uint64_t m, std::uint64_t seed) {
  RandomGraphSource source(n, m, seed);
  GraphStream out;
  out.edges.reserve(m);
  while (auto e = source.next()) out.edges.push_back(*e);
  out.node_count_hint = n;
  return out;
}

GraphStream gen_powerlaw_cluster(std::uint64_t n, std::uint64_t edges_per_node,
                                 double triad_probability, std::uint64_t seed) {
  const std::uint64_t m = edges_per_node;
  if (m < 1 || m >= n) throw std::invalid_argument("need 1 <= edges_per_node < n");
  if (triad_probability < 0.0 || triad_probability > 1.0) {
    throw std::invalid_argument("triad probability outside [0, 1]");
  }
  Rng rng(seed);
  GraphStream out;
  out.node_count_hint = n;
  out.edges.reserve((n - m) * m);

  std::vector<std::vector<NodeId>> adj(n);
  absl::flat_hash_set<Edge> present;
  // Every endpoint of every edge, so a uniform pick is degree-proportional.
  std::vector<NodeId> repeated;
  repeated.reserve(2 * (n - m) * m + m);
  for (NodeId i = 0; i < m; ++i) repeated.push_back(i);

  auto link = [&](NodeId a, NodeId b) {
    if (a == b || !present.insert(Edge(a, b)).second) return false;
    out.edges.emplace_back(a, b);
    adj[a].push_back(b);
    adj[b].push_back(a);
    repeated.push_back(b);
    return true;
  };

  std::vector<NodeId> targets;
  for (NodeId source = m; source < n; ++source) {
    // m distinct preferential targets.
    targets.clear();
    while (targets.size() < m) {
      const NodeId t = repeated[uniform_below(rng, repeated.size())];
      if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
    }
    NodeId target = targets.back();
    targets.pop_back();
    link(source, target);
    for (std::uint64_t count = 1; count < m; ++count) {
      if (uniform01(rng) < triad_probability && !adj[target].empty()) {
        bool closed = false;
        for (int attempt = 0; attempt < 8 && !closed; ++attempt) {
          const NodeId nbr = adj[target][uniform_below(rng, adj[target].size())];
          closed = link(source, nbr);
        }
        if (closed) continue;
      }
      if (targets.empty()) break;
      target = targets.back();
      targets.pop_back();
      link(source, target);
    }
    for (std::uint64_t i = 0; i < m; ++i) repeated.push_back(source);
  }
  return out;
}

std::vector<NodeId> stream_nodes(const GraphStream& s) {
  std::vector<NodeId> nodes;
  absl::flat_hash_set<NodeId> seen;
  for (const Edge& e : s.edges) {
    if (seen.insert(e.u).second) nodes.push_back(e.u);
    if (seen.insert(e.v).second) nodes.push_back(e.v);
  }
  return nodes;
}

}  // namespace tristream
