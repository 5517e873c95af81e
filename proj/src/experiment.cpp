#include "tristream/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "tristream/metrics.hpp"
#include "tristream/random.hpp"
#include "tristream/triangle_oracle.hpp"

namespace tristream {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

struct KindName {
  ExperimentKind kind;
  const char* name;
};

constexpr KindName kKinds[] = {
    {ExperimentKind::kUnbiasedness, "UNBIASEDNESS"},
    {ExperimentKind::kVarianceVsK, "VARIANCE_VS_K"},
    {ExperimentKind::kAccuracyVsBudget, "ACCURACY_VS_BUDGET"},
    {ExperimentKind::kSpeedAccuracy, "SPEED_ACCURACY"},
    {ExperimentKind::kScalability, "SCALABILITY"},
    {ExperimentKind::kThetaSweep, "THETA_SWEEP"},
    {ExperimentKind::kPartitionStats, "PARTITION_STATS"},
};

// Runs fn(0..n-1) over `threads` threads; results must be written by index.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t j = 0; j < n; ++j) fn(j);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < std::min<std::size_t>(threads, n); ++t) {
    pool.emplace_back([&] {
      for (std::size_t j = next++; j < n; j = next++) {
        try {
          fn(j);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

// Mean and standard error; the error is null for a single sample.
std::pair<ordered_json, ordered_json> mean_and_error(const std::vector<double>& xs) {
  if (xs.empty()) return {nullptr, nullptr};
  if (xs.size() < 2) return {xs.front(), nullptr};
  const TrialStats s = trial_stats(xs);
  return {s.mean, s.std_error};
}

struct Oracle {
  std::unique_ptr<StreamTriangles> triangles;
  TriangleSet truth;
};

Oracle build_oracle(const GraphStream& s) {
  Oracle o;
  o.triangles = std::make_unique<StreamTriangles>(s);
  o.truth.triangles = o.triangles->triangles();
  o.truth.per_node.reserve(o.triangles->nodes().size());
  for (NodeId u : o.triangles->nodes()) o.truth.per_node.emplace(u, 0);
  for (const Triangle& t : o.truth.triangles) {
    for (NodeId u : t) ++o.truth.per_node[u];
  }
  return o;
}

// Variance bound for a fixed arrival order.
double variance_bound_for(const PipelineConfig& cfg, const GraphStream& s, const StreamTriangles& st) {
  const WorkerIndex k = cfg.workers;
  if (cfg.algorithm == Algorithm::kTriFly) {
    return variance_bound(st.stream_length(), cfg.budget, st.triangle_count(), st.pairs()) / k;
  }
  NodeAssignment f(k);
  if (cfg.algorithm == Algorithm::kCocosSimple) {
    f = modulo_assignment(st.nodes(), k);
  } else {
    NodeMap map = NodeMap::adaptive(k, cfg.theta);
    for (const Edge& e : s.edges) map.route(e);
    f = map.snapshot();
  }
  return partition_stats(st, f, cfg.budget).z_sum;
}

struct Config {
  std::size_t index;
  PipelineConfig pipeline;
  std::uint64_t size = 0;  // scalability only
};

ordered_json config_columns(const Config& c) {
  ordered_json j;
  j["config"] = c.index;
  j["algorithm"] = to_string(c.pipeline.algorithm);
  j["k"] = c.pipeline.workers;
  j["budget"] = c.pipeline.budget;
  j["theta"] = c.pipeline.theta;
  return j;
}

std::vector<double> column(const std::vector<ordered_json>& rows, const char* key) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    if (!r[key].is_null()) out.push_back(r[key].get<double>());
  }
  return out;
}

void add_run_columns(ordered_json& row, const RunReport& r) {
  std::uint64_t max_load = 0;
  double total_load = 0.0;
  std::uint64_t evictions = 0;
  for (std::size_t i = 0; i < r.worker_loads.size(); ++i) {
    max_load = std::max(max_load, r.worker_loads[i]);
    total_load += static_cast<double>(r.worker_loads[i]);
    evictions += r.worker_evictions[i];
  }
  const double mean_load = total_load / static_cast<double>(r.worker_loads.size());
  row["lucky"] = r.lucky;
  row["unlucky"] = r.unlucky;
  row["messages"] = r.messages.total();
  row["max_load"] = max_load;
  row["load_ratio"] = mean_load > 0 ? static_cast<double>(max_load) / mean_load : 1.0;
  row["evictions"] = evictions;
  row["load_violations"] = r.load_audit ? r.load_audit->violations : 0;
  row["elapsed_s"] = r.elapsed_seconds;
}

void add_accuracy_columns(ordered_json& row, const TriangleSet* truth, const RunReport& r) {
  if (truth == nullptr) {
    for (const char* key : {"truth", "global_error", "local_error", "local_rmse", "spearman"}) row[key] = nullptr;
    return;
  }
  const AccuracyReport a = accuracy(truth->size(), truth->per_node, r.estimates.global(), r.estimates.locals());
  row["truth"] = truth->size();
  row["global_error"] = a.global_error;
  row["local_error"] = a.local_error;
  row["local_rmse"] = a.local_rmse;
  row["spearman"] = a.rank_correlation.defined ? ordered_json(a.rank_correlation.value) : ordered_json(nullptr);
}

ordered_json summarize(const Config& c, std::uint64_t edges, const std::vector<ordered_json>& rows,
                       const TriangleSet* truth, std::optional<double> bound) {
  ordered_json s = config_columns(c);
  s["edges"] = edges;
  s["trials"] = rows.size();
  const std::vector<double> est = column(rows, "estimate");
  s["truth"] = truth ? ordered_json(truth->size()) : ordered_json(nullptr);
  if (est.size() >= 2) {
    const TrialStats st = trial_stats(est);
    s["mean"] = st.mean;
    s["variance"] = st.variance;
    s["std_error"] = st.std_error;
    s["variance_std_error"] = est.size() >= 4 ? ordered_json(variance_std_error(est)) : ordered_json(nullptr);
    if (truth && st.std_error > 0) {
      s["bias_z"] = (st.mean - static_cast<double>(truth->size())) / st.std_error;
    } else {
      s["bias_z"] = nullptr;
    }
  } else {
    s["mean"] = est.empty() ? ordered_json(nullptr) : ordered_json(est.front());
    for (const char* key : {"variance", "std_error", "variance_std_error", "bias_z"}) s[key] = nullptr;
  }
  s["bound"] = bound ? ordered_json(*bound) : ordered_json(nullptr);
  for (const char* key : {"global_error", "local_error", "local_rmse", "spearman"}) {
    auto [m, e] = mean_and_error(column(rows, key));
    s[std::string("mean_") + key] = m;
    if (std::string(key) == "global_error") s["global_error_std_error"] = e;
  }
  auto [t, te] = mean_and_error(column(rows, "elapsed_s"));
  s["mean_elapsed_s"] = t;
  s["elapsed_std_error"] = te;
  s["mean_messages"] = mean_of(column(rows, "messages"));
  s["mean_load_ratio"] = mean_of(column(rows, "load_ratio"));
  std::uint64_t violations = 0;
  for (const auto& r : rows) violations += r["load_violations"].get<std::uint64_t>();
  s["load_violations"] = violations;
  return s;
}

std::vector<Config> grid_configs(const ExperimentSpec& spec, std::uint64_t edges) {
  std::vector<Config> out;
  std::vector<std::uint64_t> sizes = spec.size_grid;
  if (spec.kind != ExperimentKind::kScalability) sizes = {edges};
  for (std::uint64_t size : sizes) {
    for (Algorithm a : spec.algorithms) {
      for (WorkerIndex k : spec.k_grid) {
        for (double b : spec.b_grid) {
          const std::vector<double> thetas =
              a == Algorithm::kCocosOpt ? spec.theta_grid : std::vector<double>{spec.theta_grid.front()};
          for (double theta : thetas) {
            Config c;
            c.index = out.size();
            c.size = size;
            c.pipeline.algorithm = a;
            c.pipeline.workers = k;
            c.pipeline.budget = resolve_budget(b, size);
            c.pipeline.theta = theta;
            c.pipeline.aggregation = spec.aggregation;
            c.pipeline.execution = spec.execution;
            c.pipeline.validate();
            out.push_back(c);
          }
        }
      }
    }
  }
  return out;
}

std::vector<NodeId> choose_tracked(const TriangleSet& truth, std::uint64_t count, std::uint64_t seed) {
  std::vector<NodeId> candidates;
  for (const auto& [u, x] : truth.per_node) {
    if (x > 0) candidates.push_back(u);
  }
  std::sort(candidates.begin(), candidates.end());
  Rng rng(seed);
  const std::size_t take = std::min<std::size_t>(count, candidates.size());
  for (std::size_t j = 0; j < take; ++j) {
    std::swap(candidates[j], candidates[j + uniform_below(rng, candidates.size() - j)]);
  }
  candidates.resize(take);
  std::sort(candidates.begin(), candidates.end());
  return candidates;
}

ExperimentResult run_grid(const ExperimentSpec& spec) {
  ExperimentResult result;
  const GraphStream stream = load_stream(spec.stream);
  const std::uint64_t edges = stream.edges.size();
  std::optional<Oracle> oracle;
  if (edges <= spec.oracle_edge_limit) {
    oracle = build_oracle(stream);
  } else {
    result.oracle_skipped = true;
  }
  const TriangleSet* truth = oracle ? &oracle->truth : nullptr;
  const bool reshuffle = spec.reshuffles();

  std::vector<NodeId> tracked;
  if (spec.kind == ExperimentKind::kUnbiasedness && truth) {
    tracked = choose_tracked(*truth, spec.tracked_nodes, derive_seed(spec.base_seed, 0x747261636bULL));
  }

  const std::vector<Config> configs = grid_configs(spec, edges);
  const std::size_t trials = spec.trials;
  std::vector<ordered_json> rows(configs.size() * trials);
  std::vector<std::vector<double>> tracked_values(configs.size() * trials);

  parallel_for(rows.size(), spec.threads, [&](std::size_t job) {
    const Config& c = configs[job / trials];
    const std::uint64_t j = job % trials;
    PipelineConfig cfg = c.pipeline;
    cfg.seed = trial_seed(spec.base_seed, c.index, j);
    const std::uint64_t order_seed = derive_seed(cfg.seed, 0x6f72646572ULL);
    const RunReport r = reshuffle ? run(cfg, shuffle_stream(stream, order_seed)) : run(cfg, stream);
    ordered_json row = config_columns(c);
    row["trial"] = j;
    row["seed"] = cfg.seed;
    row["order_seed"] = reshuffle ? ordered_json(order_seed) : ordered_json(nullptr);
    row["edges"] = edges;
    row["estimate"] = r.estimates.global();
    add_accuracy_columns(row, truth, r);
    add_run_columns(row, r);
    rows[job] = std::move(row);
    auto& values = tracked_values[job];
    for (NodeId u : tracked) values.push_back(r.estimates.local(u));
  });

  for (const Config& c : configs) {
    std::vector<ordered_json> mine(rows.begin() + static_cast<std::ptrdiff_t>(c.index * trials),
                                   rows.begin() + static_cast<std::ptrdiff_t>((c.index + 1) * trials));
    std::optional<double> bound;
    if (!reshuffle && oracle) bound = variance_bound_for(c.pipeline, stream, *oracle->triangles);
    result.summary.push_back(summarize(c, edges, mine, truth, bound));
    for (std::size_t n = 0; n < tracked.size(); ++n) {
      std::vector<double> xs;
      for (std::size_t j = 0; j < trials; ++j) xs.push_back(tracked_values[c.index * trials + j][n]);
      ordered_json t = config_columns(c);
      t["node"] = tracked[n];
      t["truth"] = truth->local(tracked[n]);
      auto [m, e] = mean_and_error(xs);
      t["mean"] = m;
      t["std_error"] = e;
      if (!m.is_null() && !e.is_null() && e.get<double>() > 0) {
        t["bias_z"] = (m.get<double>() - static_cast<double>(truth->local(tracked[n]))) / e.get<double>();
      } else {
        t["bias_z"] = nullptr;
      }
      result.tracked.push_back(std::move(t));
    }
  }
  result.trials = std::move(rows);
  return result;
}

ExperimentResult run_scalability(const ExperimentSpec& spec) {
  ExperimentResult result;
  const std::vector<Config> configs = grid_configs(spec, 0);
  // One stream per size, shared by every configuration of that size.
  std::map<std::uint64_t, std::optional<Oracle>> oracles;
  std::map<std::uint64_t, GraphStream> materialized;
  const bool file_input = !spec.stream.input.empty();
  for (std::uint64_t size : spec.size_grid) {
    if (size <= spec.oracle_edge_limit || file_input) {
      materialized.emplace(size, load_stream(spec.stream, size));
    }
    if (size <= spec.oracle_edge_limit) {
      oracles[size] = build_oracle(materialized.at(size));
    } else {
      oracles[size] = std::nullopt;
      result.oracle_skipped = true;
    }
  }

  const std::size_t trials = spec.trials;
  std::vector<ordered_json> rows(configs.size() * trials);
  // Timings are the point here, so trials run one at a time.
  for (std::size_t job = 0; job < rows.size(); ++job) {
    const Config& c = configs[job / trials];
    const std::uint64_t j = job % trials;
    PipelineConfig cfg = c.pipeline;
    cfg.seed = trial_seed(spec.base_seed, c.index, j);
    RunReport r;
    if (auto it = materialized.find(c.size); it != materialized.end()) {
      r = run(cfg, it->second);
    } else {
      const std::uint64_t n = spec.stream.nodes ? spec.stream.nodes : std::max<std::uint64_t>(c.size / 10, 2);
      RandomGraphSource source(n, c.size, derive_seed(spec.stream.seed, c.size));
      r = run(cfg, source);
    }
    const auto& oracle = oracles.at(c.size);
    ordered_json row = config_columns(c);
    row["trial"] = j;
    row["seed"] = cfg.seed;
    row["order_seed"] = nullptr;
    row["edges"] = r.edges;
    row["estimate"] = r.estimates.global();
    add_accuracy_columns(row, oracle ? &oracle->truth : nullptr, r);
    add_run_columns(row, r);
    rows[job] = std::move(row);
  }
  for (const Config& c : configs) {
    std::vector<ordered_json> mine(rows.begin() + static_cast<std::ptrdiff_t>(c.index * trials),
                                   rows.begin() + static_cast<std::ptrdiff_t>((c.index + 1) * trials));
    const auto& oracle = oracles.at(c.size);
    ordered_json s = summarize(c, c.size, mine, oracle ? &oracle->truth : nullptr, std::nullopt);
    const double t = s["mean_elapsed_s"].get<double>();
    s["edges_per_s"] = t > 0 ? ordered_json(static_cast<double>(c.size) / t) : ordered_json(nullptr);
    result.summary.push_back(std::move(s));
  }
  result.trials = std::move(rows);
  return result;
}

ExperimentResult run_partition(const ExperimentSpec& spec) {
  ExperimentResult result;
  const GraphStream stream = load_stream(spec.stream);
  if (stream.edges.size() > spec.oracle_edge_limit) {
    throw std::invalid_argument("partition statistics need the exact oracle; stream exceeds the oracle limit");
  }
  const StreamTriangles st(stream);
  const std::uint64_t budget = resolve_budget(spec.b_grid.front(), stream.edges.size());
  const double t = static_cast<double>(st.stream_length());
  const double tri = static_cast<double>(st.triangle_count());
  const double p = static_cast<double>(st.pairs().type1);
  const double q = static_cast<double>(st.pairs().type2);

  const std::size_t trials = spec.trials;
  std::vector<ordered_json> rows(spec.k_grid.size() * trials);
  parallel_for(rows.size(), spec.threads, [&](std::size_t job) {
    const std::size_t ci = job / trials;
    const std::uint64_t j = job % trials;
    const WorkerIndex k = spec.k_grid[ci];
    const std::uint64_t seed = trial_seed(spec.base_seed, ci, j);
    const PartitionStats ps = partition_stats(st, random_assignment(st.nodes(), k, seed), budget);
    double sum_l = 0, sum_p = 0, sum_q = 0;
    for (const auto& w : ps.workers) {
      sum_l += static_cast<double>(w.load);
      sum_p += static_cast<double>(w.pairs.type1);
      sum_q += static_cast<double>(w.pairs.type2);
    }
    const double kd = static_cast<double>(k);
    ordered_json row;
    row["config"] = ci;
    row["k"] = k;
    row["trial"] = j;
    row["seed"] = seed;
    row["t0"] = ps.workers[0].triangles;
    row["l0"] = ps.workers[0].load;
    row["p0"] = ps.workers[0].pairs.type1;
    row["q0"] = ps.workers[0].pairs.type2;
    row["mean_t"] = static_cast<double>(ps.triangle_sum) / kd;
    row["mean_l"] = sum_l / kd;
    row["mean_p"] = sum_p / kd;
    row["mean_q"] = sum_q / kd;
    row["triangle_sum"] = ps.triangle_sum;
    row["z_sum"] = ps.z_sum;
    rows[job] = std::move(row);
  });

  for (std::size_t ci = 0; ci < spec.k_grid.size(); ++ci) {
    std::vector<ordered_json> mine(rows.begin() + static_cast<std::ptrdiff_t>(ci * trials),
                                   rows.begin() + static_cast<std::ptrdiff_t>((ci + 1) * trials));
    const double k = spec.k_grid[ci];
    ordered_json s;
    s["config"] = ci;
    s["k"] = spec.k_grid[ci];
    s["trials"] = trials;
    s["budget"] = budget;
    s["stream_length"] = st.stream_length();
    s["triangles"] = st.triangle_count();
    s["type1"] = st.pairs().type1;
    s["type2"] = st.pairs().type2;
    auto put = [&](const char* name, const char* col) {
      auto [m, e] = mean_and_error(column(mine, col));
      s[std::string("mean_") + name] = m;
      s[std::string(name) + "_std_error"] = e;
    };
    put("t0", "t0");
    s["expected_t"] = tri / k;
    put("l0", "l0");
    s["expected_l"] = (2 * k - 1) * t / (k * k);
    put("p", "mean_p");
    s["expected_p"] = (k * k * k - 2 * k * k + 4 * k - 2) / (k * k * k * k) * p;
    put("q", "mean_q");
    s["expected_q"] = (3 * k * k - 4 * k + 2) / (k * k * k * k) * q;
    std::uint64_t bad = 0;
    for (const auto& r : mine) bad += r["triangle_sum"].get<std::uint64_t>() != st.triangle_count();
    s["bad_partitions"] = bad;
    s["mean_z_sum"] = mean_of(column(mine, "z_sum"));
    result.summary.push_back(std::move(s));
  }
  result.trials = std::move(rows);
  return result;
}

std::string cell(const ordered_json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

ordered_json parse_cell(const std::string& s) {
  if (s.empty()) return nullptr;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (s.find_first_not_of("0123456789") == std::string::npos) {
    std::uint64_t u = 0;
    auto [ptr, ec] = std::from_chars(first, last, u);
    if (ec == std::errc() && ptr == last) return u;
  }
  if (s.front() == '-' && s.find_first_not_of("0123456789", 1) == std::string::npos) {
    std::int64_t i = 0;
    auto [ptr, ec] = std::from_chars(first, last, i);
    if (ec == std::errc() && ptr == last) return i;
  }
  double d = 0;
  auto [ptr, ec] = std::from_chars(first, last, d);
  if (ec == std::errc() && ptr == last) return d;
  if (s == "true") return true;
  if (s == "false") return false;
  return s;
}

std::string file_tag(const std::string& s) {
  std::string out;
  for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' ? c : '_';
  return out;
}

void require_columns(const std::vector<ordered_json>& rows, std::initializer_list<const char*> keys,
                     const fs::path& where) {
  if (rows.empty()) throw std::runtime_error(where.string() + " has no rows");
  for (const char* k : keys) {
    if (!rows.front().contains(k)) throw std::runtime_error(where.string() + " is missing column '" + k + "'");
  }
}

std::string number(const ordered_json& v) { return v.is_null() ? "nan" : v.dump(); }

}  // namespace

const char* to_string(ExperimentKind k) {
  for (const auto& kn : kKinds) {
    if (kn.kind == k) return kn.name;
  }
  return "?";
}

ExperimentKind parse_experiment_kind(const std::string& s) {
  std::string u;
  for (char c : s) u += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (const auto& kn : kKinds) {
    if (u == kn.name) return kn.kind;
  }
  throw std::invalid_argument("unknown experiment kind '" + s + "'");
}

void ExperimentSpec::validate() const {
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
  if (kind != ExperimentKind::kPartitionStats && algorithms.empty()) {
    throw std::invalid_argument("algorithm list is empty");
  }
  if (k_grid.empty() || b_grid.empty() || theta_grid.empty()) throw std::invalid_argument("empty grid");
  for (WorkerIndex k : k_grid) {
    if (k < 1) throw std::invalid_argument("k must be at least 1");
  }
  for (double b : b_grid) {
    if (!(b > 0.0)) throw std::invalid_argument("budget must be positive");
  }
  for (double t : theta_grid) {
    if (!(t >= 0.0)) throw std::invalid_argument("theta must be non-negative");
  }
  if (kind == ExperimentKind::kScalability && size_grid.empty()) {
    throw std::invalid_argument("scalability needs stream sizes");
  }
  if (stream.input.empty()) {
    if (stream.generator != "er" && stream.generator != "powerlaw") {
      throw std::invalid_argument("unknown generator '" + stream.generator + "'");
    }
    if (kind != ExperimentKind::kScalability && stream.edges == 0) {
      throw std::invalid_argument("generator needs an edge count");
    }
  }
}

bool ExperimentSpec::reshuffles() const {
  if (reshuffle) return *reshuffle;
  return kind != ExperimentKind::kVarianceVsK;
}

std::uint64_t resolve_budget(double value, std::uint64_t edges) {
  if (value >= 1.0) return static_cast<std::uint64_t>(std::llround(value));
  if (!(value > 0.0)) throw std::invalid_argument("budget must be positive");
  return std::max<std::uint64_t>(2, static_cast<std::uint64_t>(std::llround(value * static_cast<double>(edges))));
}

std::uint64_t trial_seed(std::uint64_t base, std::uint64_t config, std::uint64_t trial) {
  return derive_seed(base, config, trial);
}

GraphStream load_stream(const StreamSpec& spec, std::uint64_t size) {
  GraphStream s;
  if (!spec.input.empty()) {
    s = parse_edge_list(spec.input);
  } else if (spec.generator == "er") {
    const std::uint64_t m = size ? size : spec.edges;
    std::uint64_t n = spec.nodes;
    if (n == 0) {
      n = std::max<std::uint64_t>(m / 10, 2);
      while (n * (n - 1) / 2 < m) ++n;
    }
    s = gen_random_graph(n, m, spec.seed);
  } else if (spec.generator == "powerlaw") {
    const std::uint64_t per = spec.edges ? spec.edges : 4;
    std::uint64_t n = spec.nodes;
    if (size) n = size / per + 2 * per + 2;
    if (n == 0) throw std::invalid_argument("power-law generator needs a node count");
    s = shuffle_stream(gen_powerlaw_cluster(n, per, spec.triad_probability, spec.seed), derive_seed(spec.seed, 2));
  } else {
    throw std::invalid_argument("unknown generator '" + spec.generator + "'");
  }
  if (size && (!spec.input.empty() || spec.generator == "powerlaw")) {
    if (s.edges.size() < size) throw std::invalid_argument("stream has fewer edges than requested");
    s.edges.resize(size);
  }
  return s;
}

ordered_json spec_to_json(const ExperimentSpec& spec) {
  ordered_json j;
  j["kind"] = to_string(spec.kind);
  j["algorithms"] = ordered_json::array();
  for (Algorithm a : spec.algorithms) j["algorithms"].push_back(to_string(a));
  j["trials"] = spec.trials;
  j["k"] = spec.k_grid;
  j["budget"] = spec.b_grid;
  j["theta"] = spec.theta_grid;
  j["sizes"] = spec.size_grid;
  j["stream"] = {
      {"input", spec.stream.input},
      {"generator", spec.stream.generator},
      {"nodes", spec.stream.nodes},
      {"edges", spec.stream.edges},
      {"triad_probability", spec.stream.triad_probability},
      {"seed", spec.stream.seed},
  };
  j["reshuffle"] = spec.reshuffles();
  j["aggregation"] = to_string(spec.aggregation);
  j["execution"] = to_string(spec.execution);
  j["seed"] = spec.base_seed;
  j["threads"] = spec.threads;
  j["tracked_nodes"] = spec.tracked_nodes;
  j["oracle_edge_limit"] = spec.oracle_edge_limit;
  return j;
}

ExperimentSpec spec_from_json(const json& j) {
  ExperimentSpec s;
  s.kind = parse_experiment_kind(j.at("kind").get<std::string>());
  if (j.contains("algorithms")) {
    s.algorithms.clear();
    for (const auto& a : j["algorithms"]) s.algorithms.push_back(parse_algorithm(a.get<std::string>()));
  }
  s.trials = j.value("trials", s.trials);
  s.k_grid = j.value("k", s.k_grid);
  s.b_grid = j.value("budget", s.b_grid);
  s.theta_grid = j.value("theta", s.theta_grid);
  s.size_grid = j.value("sizes", s.size_grid);
  if (j.contains("stream")) {
    const json& st = j["stream"];
    s.stream.input = st.value("input", s.stream.input);
    s.stream.generator = st.value("generator", s.stream.generator);
    s.stream.nodes = st.value("nodes", s.stream.nodes);
    s.stream.edges = st.value("edges", s.stream.edges);
    s.stream.triad_probability = st.value("triad_probability", s.stream.triad_probability);
    s.stream.seed = st.value("seed", s.stream.seed);
  }
  if (j.contains("reshuffle") && !j["reshuffle"].is_null()) s.reshuffle = j["reshuffle"].get<bool>();
  if (j.contains("aggregation")) s.aggregation = parse_aggregation(j["aggregation"].get<std::string>());
  if (j.contains("execution")) s.execution = parse_execution(j["execution"].get<std::string>());
  s.base_seed = j.value("seed", s.base_seed);
  s.threads = j.value("threads", s.threads);
  s.tracked_nodes = j.value("tracked_nodes", s.tracked_nodes);
  s.oracle_edge_limit = j.value("oracle_edge_limit", s.oracle_edge_limit);
  s.validate();
  return s;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case ExperimentKind::kPartitionStats: return run_partition(spec);
    case ExperimentKind::kScalability: return run_scalability(spec);
    default: return run_grid(spec);
  }
}

void write_csv(const fs::path& path, const std::vector<ordered_json>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  if (rows.empty()) return;
  bool first = true;
  for (const auto& [key, _] : rows.front().items()) {
    out << (first ? "" : ",") << key;
    first = false;
  }
  out << '\n';
  for (const auto& row : rows) {
    first = true;
    for (const auto& [key, _] : rows.front().items()) {
      out << (first ? "" : ",") << (row.contains(key) ? cell(row[key]) : "");
      first = false;
    }
    out << '\n';
  }
}

std::vector<ordered_json> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };
  std::string line;
  std::vector<ordered_json> rows;
  if (!std::getline(in, line)) return rows;
  const std::vector<std::string> header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line);
    ordered_json row;
    for (std::size_t c = 0; c < header.size(); ++c) row[header[c]] = parse_cell(c < cells.size() ? cells[c] : "");
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_results(const ExperimentSpec& spec, const ExperimentResult& result, const fs::path& dir) {
  fs::create_directories(dir);
  write_csv(dir / "trials.csv", result.trials);
  write_csv(dir / "summary.csv", result.summary);
  ordered_json files = {"trials.csv", "summary.csv"};
  if (!result.tracked.empty()) {
    write_csv(dir / "tracked.csv", result.tracked);
    files.push_back("tracked.csv");
  }
  ordered_json manifest;
  manifest["kind"] = to_string(spec.kind);
  manifest["spec"] = spec_to_json(spec);
  manifest["files"] = files;
  manifest["oracle_skipped"] = result.oracle_skipped;
  manifest["trial_rows"] = result.trials.size();
  manifest["summary_rows"] = result.summary.size();
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
}

std::vector<fs::path> emit_plotdata(const fs::path& results_dir, const fs::path& out_dir) {
  std::ifstream mf(results_dir / "manifest.json");
  if (!mf) throw std::runtime_error("no manifest.json in " + results_dir.string());
  const json manifest = json::parse(mf);
  const ExperimentKind kind = parse_experiment_kind(manifest.at("kind").get<std::string>());
  const fs::path summary_path = results_dir / "summary.csv";
  const std::vector<ordered_json> summary = read_csv(summary_path);
  fs::create_directories(out_dir);
  std::vector<fs::path> written;

  // Groups summary rows by a label and writes selected columns per group.
  auto series = [&](const std::string& prefix, auto label_of, std::initializer_list<const char*> cols) {
    std::map<std::string, std::vector<const ordered_json*>> groups;
    for (const auto& r : summary) groups[label_of(r)].push_back(&r);
    for (const auto& [label, rows] : groups) {
      const fs::path p = out_dir / (prefix + (label.empty() ? "" : "_" + file_tag(label)) + ".dat");
      std::ofstream out(p);
      out << '#';
      for (const char* c : cols) out << ' ' << c;
      out << '\n';
      for (const ordered_json* r : rows) {
        bool first = true;
        for (const char* c : cols) {
          out << (first ? "" : " ") << number((*r)[c]);
          first = false;
        }
        out << '\n';
      }
      written.push_back(p);
    }
  };
  auto alg = [](const ordered_json& r) { return r["algorithm"].get<std::string>(); };
  auto alg_k = [](const ordered_json& r) {
    return r["algorithm"].get<std::string>() + "_k" + std::to_string(r["k"].get<std::uint64_t>());
  };

  switch (kind) {
    case ExperimentKind::kUnbiasedness: {
      const fs::path trials_path = results_dir / "trials.csv";
      const std::vector<ordered_json> trials = read_csv(trials_path);
      require_columns(trials, {"config", "algorithm", "k", "budget", "estimate"}, trials_path);
      std::map<std::uint64_t, std::vector<double>> by_config;
      std::map<std::uint64_t, std::string> names;
      for (const auto& r : trials) {
        const std::uint64_t c = r["config"].get<std::uint64_t>();
        by_config[c].push_back(r["estimate"].get<double>());
        names[c] = r["algorithm"].get<std::string>() + "_k" + std::to_string(r["k"].get<std::uint64_t>()) + "_b" +
                   std::to_string(r["budget"].get<std::uint64_t>());
      }
      for (const auto& [c, xs] : by_config) {
        constexpr int kBins = 40;
        const auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
        const double lo = *lo_it;
        const double width = std::max((*hi_it - lo) / kBins, 1e-12);
        std::vector<std::uint64_t> counts(kBins, 0);
        for (double x : xs) ++counts[std::min<int>(kBins - 1, static_cast<int>((x - lo) / width))];
        const fs::path p = out_dir / ("histogram_" + file_tag(names[c]) + ".dat");
        std::ofstream out(p);
        out << "# bin_center count\n";
        for (int b = 0; b < kBins; ++b) out << lo + (b + 0.5) * width << ' ' << counts[b] << '\n';
        written.push_back(p);
      }
      break;
    }
    case ExperimentKind::kVarianceVsK:
      require_columns(summary, {"algorithm", "k", "variance", "bound"}, summary_path);
      series("variance", alg, {"k", "variance", "variance_std_error", "bound"});
      break;
    case ExperimentKind::kAccuracyVsBudget:
    case ExperimentKind::kThetaSweep:
      require_columns(summary, {"algorithm", "k", "budget", "theta", "edges", "mean_global_error", "mean_local_error",
                                "mean_local_rmse", "mean_spearman"},
                      summary_path);
      if (kind == ExperimentKind::kThetaSweep) {
        series("theta", alg_k, {"theta", "budget", "mean_global_error", "mean_local_error", "mean_load_ratio"});
      } else {
        series("accuracy", alg_k,
               {"budget", "edges", "mean_global_error", "global_error_std_error", "mean_local_error",
                "mean_local_rmse", "mean_spearman"});
      }
      break;
    case ExperimentKind::kSpeedAccuracy:
      require_columns(summary, {"algorithm", "mean_elapsed_s", "mean_global_error"}, summary_path);
      series("speed_accuracy", alg, {"k", "budget", "mean_elapsed_s", "mean_global_error", "mean_local_error"});
      break;
    case ExperimentKind::kScalability:
      require_columns(summary, {"algorithm", "k", "edges", "mean_elapsed_s"}, summary_path);
      series("scalability", alg_k, {"edges", "mean_elapsed_s", "elapsed_std_error"});
      break;
    case ExperimentKind::kPartitionStats:
      require_columns(summary, {"k", "mean_t0", "expected_t", "mean_l0", "expected_l", "mean_p", "mean_q"},
                      summary_path);
      series("partition", [](const ordered_json&) { return std::string(); },
             {"k", "mean_t0", "expected_t", "mean_l0", "expected_l", "mean_p", "expected_p", "mean_q", "expected_q"});
      break;
  }
  return written;
}

}  // namespace tristream
