#include "tristream/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <future>
#include <stdexcept>
#include <thread>

#include "tristream/channel.hpp"
#include "tristream/triangle_oracle.hpp"

namespace tristream {

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kTriFly: return "TRIFLY";
    case Algorithm::kCocosSimple: return "COCOS_SIMPLE";
    case Algorithm::kCocosOpt: return "COCOS_OPT";
  }
  return "?";
}

const char* to_string(Aggregation a) { return a == Aggregation::kEager ? "EAGER" : "LAZY"; }
const char* to_string(Execution e) {
  return e == Execution::kDeterministic ? "DETERMINISTIC" : "CONCURRENT";
}

namespace {

std::string upper(std::string s) {
  for (char& c : s) {
    if (c == '-') c = '_';
    c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return s;
}

}  // namespace

Algorithm parse_algorithm(const std::string& s) {
  const std::string u = upper(s);
  if (u == "TRIFLY" || u == "TRI_FLY") return Algorithm::kTriFly;
  if (u == "COCOS_SIMPLE" || u == "SIMPLE") return Algorithm::kCocosSimple;
  if (u == "COCOS_OPT" || u == "OPT") return Algorithm::kCocosOpt;
  throw std::invalid_argument("unknown algorithm '" + s + "'");
}

Aggregation parse_aggregation(const std::string& s) {
  const std::string u = upper(s);
  if (u == "EAGER") return Aggregation::kEager;
  if (u == "LAZY") return Aggregation::kLazy;
  throw std::invalid_argument("unknown aggregation '" + s + "'");
}

Execution parse_execution(const std::string& s) {
  const std::string u = upper(s);
  if (u == "DETERMINISTIC") return Execution::kDeterministic;
  if (u == "CONCURRENT") return Execution::kConcurrent;
  throw std::invalid_argument("unknown execution mode '" + s + "'");
}

bool is_cocos(Algorithm a) { return a != Algorithm::kTriFly; }

void PipelineConfig::validate() const {
  if (workers < 1) throw std::invalid_argument("need at least one worker");
  if (budget < 2) throw std::invalid_argument("budget must be at least 2");
  if (!(theta >= 0.0)) throw std::invalid_argument("theta must be non-negative");
  if (channel_capacity == 0) throw std::invalid_argument("channel capacity must be positive");
}

std::uint64_t worker_seed(std::uint64_t run_seed, WorkerIndex worker) {
  return derive_seed(run_seed, 0x776f726b6572ULL, worker);
}

double EstimateStore::local(NodeId u) const {
  auto it = local_.find(u);
  return it == local_.end() ? 0.0 : it->second;
}

std::uint64_t MessageCounters::total() const {
  std::uint64_t t = query_broadcasts;
  for (auto v : master_to_worker) t += v;
  for (auto v : worker_to_aggregator) t += v;
  return t;
}

std::uint64_t RunReport::max_replication() const {
  for (std::size_t r = replication_histogram.size(); r > 0; --r) {
    if (replication_histogram[r - 1] > 0) return r - 1;
  }
  return 0;
}

std::unique_ptr<Router> make_router(const PipelineConfig& cfg) {
  switch (cfg.algorithm) {
    case Algorithm::kTriFly: return std::make_unique<BroadcastRouter>(cfg.workers);
    case Algorithm::kCocosSimple:
      return std::make_unique<NodeMap>(NodeMap::modulo(cfg.workers, cfg.modulo_salt));
    case Algorithm::kCocosOpt:
      return std::make_unique<NodeMap>(NodeMap::adaptive(cfg.workers, cfg.theta));
  }
  throw std::invalid_argument("unknown algorithm");
}

namespace {

struct Aggregator {
  EstimateStore store;
  double divisor = 1.0;
  bool averaging = false;  // Tri-Fly averages over the k workers

  void apply(const std::optional<NodeId>& key, double delta) {
    const double d = averaging ? delta / divisor : delta;
    if (key) {
      store.add_local(*key, d);
    } else {
      store.add_global(d);
    }
  }
};

struct WorkerEndpoint {
  WorkerEndpoint(WorkerIndex id, std::uint64_t budget, std::uint64_t seed) : sampler(id, budget, seed) {}

  SamplerWorker sampler;
  double pending_global = 0.0;
  bool has_pending_global = false;
  absl::flat_hash_map<NodeId, double> pending_local;
  std::uint64_t received = 0;
  std::uint64_t updates_sent = 0;
  std::uint64_t stored = 0;
  std::vector<std::uint64_t> stored_arrivals;  // instrumented
  std::vector<Triangle> emitted;               // instrumented

  // COUNT then (if assigned) SAMPLE. `send` receives every update that leaves
  // the worker immediately; under lazy aggregation nothing leaves here.
  template <typename Send>
  void receive(const Edge& e, std::uint64_t arrival, bool assigned, const PipelineConfig& cfg, Send&& send) {
    ++received;
    const bool lazy = cfg.aggregation == Aggregation::kLazy;
    auto deliver = [&](std::optional<NodeId> key, double delta) {
      if (lazy) {
        if (key) {
          pending_local[*key] += delta;
        } else {
          pending_global += delta;
          has_pending_global = true;
        }
      } else {
        ++updates_sent;
        send(key, delta);
      }
    };
    const double sum = sampler.for_each_triangle(e, [&](NodeId w, double weight) {
      deliver(w, weight);
      if (cfg.instrument) emitted.push_back(make_triangle(e.u, e.v, w));
    });
    if (sum != 0.0 || cfg.eager_zero) {
      deliver(std::nullopt, sum);
      deliver(e.u, sum);
      deliver(e.v, sum);
    }
    if (assigned && sampler.sample(e)) {
      ++stored;
      if (cfg.instrument) stored_arrivals.push_back(arrival);
    }
  }

  template <typename Send>
  void flush(Send&& send) {
    if (has_pending_global) {
      ++updates_sent;
      send(std::optional<NodeId>{}, pending_global);
    }
    for (const auto& [node, delta] : pending_local) {
      ++updates_sent;
      send(std::optional<NodeId>{node}, delta);
    }
    pending_global = 0.0;
    has_pending_global = false;
    pending_local.clear();
  }
};

struct QueryTicket {
  std::promise<EstimateStore> done;
  WorkerIndex acks = 0;
};

struct WorkerMessage {
  enum class Kind : std::uint8_t { kEdge, kFlush, kStop };
  Kind kind = Kind::kEdge;
  bool assigned = false;
  Edge edge;
  std::uint64_t arrival = 0;
  QueryTicket* ticket = nullptr;
};

struct AggregatorMessage {
  enum class Kind : std::uint8_t { kUpdates, kAck, kDone };
  Kind kind = Kind::kUpdates;
  std::vector<CountUpdate> updates;
  QueryTicket* ticket = nullptr;
};

}  // namespace

struct Pipeline::Impl {
  PipelineConfig cfg;
  std::unique_ptr<Router> router;
  std::vector<WorkerEndpoint> workers;
  Aggregator aggregator;
  RunReport report;
  std::uint64_t arrivals = 0;
  bool finished = false;

  // Concurrent mode only.
  std::vector<std::unique_ptr<BoundedChannel<WorkerMessage>>> inboxes;
  std::unique_ptr<BoundedChannel<AggregatorMessage>> aggregator_inbox;
  std::vector<std::thread> threads;

  Impl(const PipelineConfig& c, std::unique_ptr<Router> r) : cfg(c), router(std::move(r)) {
    cfg.validate();
    if (!router) router = make_router(cfg);
    if (router->worker_count() != cfg.workers) throw std::invalid_argument("router and config disagree on k");
    workers.reserve(cfg.workers);
    for (WorkerIndex i = 0; i < cfg.workers; ++i) workers.emplace_back(i, cfg.budget, worker_seed(cfg.seed, i));
    aggregator.averaging = cfg.algorithm == Algorithm::kTriFly;
    aggregator.divisor = static_cast<double>(cfg.workers);
    report.config = cfg;
    report.messages.master_to_worker.assign(cfg.workers, 0);
    report.messages.worker_to_aggregator.assign(cfg.workers, 0);
    if (cfg.instrument) report.trace.emplace();
    if (cfg.execution == Execution::kConcurrent) start_threads();
  }

  ~Impl() { stop_threads(); }

  void start_threads() {
    aggregator_inbox = std::make_unique<BoundedChannel<AggregatorMessage>>(cfg.channel_capacity);
    for (WorkerIndex i = 0; i < cfg.workers; ++i) {
      inboxes.push_back(std::make_unique<BoundedChannel<WorkerMessage>>(cfg.channel_capacity));
    }
    for (WorkerIndex i = 0; i < cfg.workers; ++i) {
      threads.emplace_back([this, i] { worker_loop(i); });
    }
    threads.emplace_back([this] { aggregator_loop(); });
  }

  void stop_threads() {
    if (threads.empty()) return;
    for (auto& inbox : inboxes) {
      WorkerMessage stop;
      stop.kind = WorkerMessage::Kind::kStop;
      inbox->push(stop);
    }
    for (auto& t : threads) t.join();
    threads.clear();
  }

  void worker_loop(WorkerIndex i) {
    WorkerEndpoint& w = workers[i];
    std::vector<CountUpdate> batch;
    auto collect = [&batch](std::optional<NodeId> key, double delta) { batch.push_back({key, delta}); };
    for (;;) {
      WorkerMessage msg = inboxes[i]->pop();
      switch (msg.kind) {
        case WorkerMessage::Kind::kEdge:
          w.receive(msg.edge, msg.arrival, msg.assigned, cfg, collect);
          break;
        case WorkerMessage::Kind::kFlush:
          w.flush(collect);
          break;
        case WorkerMessage::Kind::kStop:
          {
            AggregatorMessage done;
            done.kind = AggregatorMessage::Kind::kDone;
            aggregator_inbox->push(std::move(done));
          }
          return;
      }
      if (!batch.empty()) {
        AggregatorMessage out;
        out.updates = std::move(batch);
        aggregator_inbox->push(std::move(out));
        batch.clear();
      }
      if (msg.kind == WorkerMessage::Kind::kFlush) {
        AggregatorMessage ack;
        ack.kind = AggregatorMessage::Kind::kAck;
        ack.ticket = msg.ticket;
        aggregator_inbox->push(std::move(ack));
      }
    }
  }

  void aggregator_loop() {
    WorkerIndex done = 0;
    while (done < cfg.workers) {
      AggregatorMessage msg = aggregator_inbox->pop();
      switch (msg.kind) {
        case AggregatorMessage::Kind::kUpdates:
          for (const CountUpdate& u : msg.updates) aggregator.apply(u.node, u.delta);
          break;
        case AggregatorMessage::Kind::kAck:
          if (++msg.ticket->acks == cfg.workers) msg.ticket->done.set_value(aggregator.store);
          break;
        case AggregatorMessage::Kind::kDone:
          ++done;
          break;
      }
    }
  }

  void push(const Edge& e) {
    if (finished) throw std::logic_error("pipeline already finished");
    const std::uint64_t arrival = ++arrivals;
    const RoutingDecision d = router->route(e);
    switch (d.route) {
      case RouteCase::kLucky: ++report.lucky; break;
      case RouteCase::kUnlucky: ++report.unlucky; break;
      case RouteCase::kBroadcastAll: ++report.broadcast; break;
    }
    if (cfg.instrument) report.trace->edges.push_back({e, d, 0});

    if (cfg.execution == Execution::kDeterministic) {
      auto send = [this](std::optional<NodeId> key, double delta) { aggregator.apply(key, delta); };
      if (d.route == RouteCase::kLucky) {
        ++report.messages.master_to_worker[d.owners[0]];
        workers[d.owners[0]].receive(e, arrival, d.is_assigned(d.owners[0]), cfg, send);
        return;
      }
      for (WorkerIndex i = 0; i < cfg.workers; ++i) {
        ++report.messages.master_to_worker[i];
        workers[i].receive(e, arrival, d.is_assigned(i), cfg, send);
      }
      return;
    }

    auto deliver = [&](WorkerIndex i) {
      ++report.messages.master_to_worker[i];
      WorkerMessage msg;
      msg.kind = WorkerMessage::Kind::kEdge;
      msg.edge = e;
      msg.arrival = arrival;
      msg.assigned = d.is_assigned(i);
      inboxes[i]->push(msg);
    };
    if (d.route == RouteCase::kLucky) {
      deliver(d.owners[0]);
    } else {
      for (WorkerIndex i = 0; i < cfg.workers; ++i) deliver(i);
    }
  }

  EstimateStore query() {
    if (cfg.execution == Execution::kDeterministic) {
      if (cfg.aggregation == Aggregation::kLazy) {
        ++report.messages.query_broadcasts;
        auto send = [this](std::optional<NodeId> key, double delta) { aggregator.apply(key, delta); };
        for (auto& w : workers) w.flush(send);
      }
      return aggregator.store;
    }
    ++report.messages.query_broadcasts;
    QueryTicket ticket;
    auto result = ticket.done.get_future();
    for (auto& inbox : inboxes) {
      WorkerMessage msg;
      msg.kind = WorkerMessage::Kind::kFlush;
      msg.ticket = &ticket;
      inbox->push(msg);
    }
    return result.get();
  }

  RunReport finish() {
    if (finished) throw std::logic_error("pipeline already finished");
    report.estimates = query();
    stop_threads();
    finished = true;
    report.edges = arrivals;

    const WorkerIndex k = cfg.workers;
    for (WorkerIndex i = 0; i < k; ++i) {
      const WorkerEndpoint& w = workers[i];
      report.worker_loads.push_back(w.sampler.load());
      report.worker_stored.push_back(w.stored);
      report.worker_evictions.push_back(w.sampler.evictions());
      report.messages.worker_to_aggregator[i] = w.updates_sent;
    }
    if (auto* map = dynamic_cast<NodeMap*>(router.get())) {
      report.master_loads.assign(map->loads().begin(), map->loads().end());
      if (map->policy() == MappingPolicy::kAdaptive) report.load_audit = map->audit();
    }

    if (cfg.instrument) {
      auto& trace = *report.trace;
      for (WorkerIndex i = 0; i < k; ++i) {
        for (std::uint64_t t : workers[i].stored_arrivals) ++trace.edges[t - 1].stored_by;
        for (const Triangle& tri : workers[i].emitted) trace.emitters[tri].push_back(i);
      }
      for (auto& [tri, ws] : trace.emitters) std::sort(ws.begin(), ws.end());
      report.replication_histogram.assign(k + 1, 0);
      for (const EdgeTrace& et : trace.edges) ++report.replication_histogram[et.stored_by];

      if (auto* map = dynamic_cast<NodeMap*>(router.get())) {
        if (map->policy() == MappingPolicy::kAdaptive) {
          report.final_assignment = map->snapshot();
        } else {
          GraphStream seen;
          seen.edges.reserve(trace.edges.size());
          for (const EdgeTrace& et : trace.edges) seen.edges.push_back(et.edge);
          const auto nodes = stream_nodes(seen);
          report.final_assignment = map->snapshot(nodes);
        }
      }
    }
    return std::move(report);
  }
};

Pipeline::Pipeline(const PipelineConfig& cfg) : impl_(std::make_unique<Impl>(cfg, nullptr)) {}

Pipeline::Pipeline(const PipelineConfig& cfg, std::unique_ptr<Router> router)
    : impl_(std::make_unique<Impl>(cfg, std::move(router))) {}

Pipeline::~Pipeline() = default;

void Pipeline::push(const Edge& e) { impl_->push(e); }

EstimateStore Pipeline::query_estimates() {
  if (impl_->finished) return impl_->report.estimates;
  return impl_->query();
}

RunReport Pipeline::finish() { return impl_->finish(); }

std::uint64_t Pipeline::edges_seen() const { return impl_->arrivals; }

RunReport run(const PipelineConfig& cfg, EdgeSource& source, std::unique_ptr<Router> router) {
  using clock = std::chrono::steady_clock;
  Pipeline pipeline(cfg, std::move(router));
  constexpr std::size_t kChunk = 4096;
  std::vector<Edge> chunk;
  chunk.reserve(kChunk);
  clock::duration busy{};
  bool exhausted = false;
  while (!exhausted) {
    chunk.clear();
    while (chunk.size() < kChunk) {
      auto e = source.next();
      if (!e) {
        exhausted = true;
        break;
      }
      chunk.push_back(*e);
    }
    const auto start = clock::now();
    for (const Edge& e : chunk) pipeline.push(e);
    busy += clock::now() - start;
  }
  const auto start = clock::now();
  RunReport report = pipeline.finish();
  busy += clock::now() - start;
  report.elapsed_seconds = std::chrono::duration<double>(busy).count();
  return report;
}

RunReport run(const PipelineConfig& cfg, const GraphStream& s, std::unique_ptr<Router> router) {
  SpanEdgeSource source(s.edges);
  return run(cfg, source, std::move(router));
}

StructuralVerdict verify_structural_properties(const RunReport& r, const TriangleSet& oracle) {
  if (!r.trace) throw std::logic_error("structural checks need an instrumented run");
  const Instrumentation& trace = *r.trace;
  const WorkerIndex k = r.config.workers;
  StructuralVerdict v;
  v.cocos = is_cocos(r.config.algorithm);

  v.max_replication = r.max_replication();
  v.p1 = v.max_replication <= (v.cocos ? 2u : k);

  absl::flat_hash_set<Triangle> known(oracle.triangles.begin(), oracle.triangles.end());
  for (const auto& [tri, ws] : trace.emitters) {
    // A worker may legitimately emit the same triangle at most once.
    std::uint64_t distinct = 0;
    for (std::size_t j = 0; j < ws.size(); ++j) {
      if (j == 0 || ws[j] != ws[j - 1]) ++distinct;
    }
    v.max_emitters = std::max<std::uint64_t>(v.max_emitters, ws.size());
    if (distinct > 1 || ws.size() > distinct) ++v.multiply_emitted;
    if (!known.contains(tri)) ++v.unknown_emitted;
  }
  v.p2 = !v.cocos || v.max_emitters <= 1;

  absl::flat_hash_map<Edge, std::uint64_t> arrival;
  arrival.reserve(trace.edges.size());
  for (std::uint64_t t = 0; t < trace.edges.size(); ++t) arrival.emplace(trace.edges[t].edge, t);

  std::vector<WorkerIndex> potential;
  for (const Triangle& tri : oracle.triangles) {
    const Edge sides[3] = {Edge(tri[0], tri[1]), Edge(tri[0], tri[2]), Edge(tri[1], tri[2])};
    std::uint64_t times[3];
    bool complete = true;
    for (int j = 0; j < 3; ++j) {
      auto it = arrival.find(sides[j]);
      if (it == arrival.end()) {
        complete = false;
        break;
      }
      times[j] = it->second;
    }
    if (!complete) continue;
    ++v.triangles_checked;
    const int last = static_cast<int>(std::max_element(times, times + 3) - times);
    const EdgeTrace& closing = trace.edges[times[last]];
    const EdgeTrace& first = trace.edges[times[(last + 1) % 3]];
    const EdgeTrace& second = trace.edges[times[(last + 2) % 3]];
    potential.clear();
    for (WorkerIndex i = 0; i < k; ++i) {
      if (closing.decision.is_target(i) && first.decision.is_assigned(i) && second.decision.is_assigned(i)) {
        potential.push_back(i);
      }
    }
    if (potential.empty()) ++v.without_potential_counter;
    if (potential.size() > 1) ++v.with_several_potential_counters;

    if (v.cocos && r.final_assignment && potential.size() == 1) {
      const Edge& ce = closing.edge;
      const NodeId third = tri[0] != ce.u && tri[0] != ce.v ? tri[0] : (tri[1] != ce.u && tri[1] != ce.v ? tri[1] : tri[2]);
      const auto fu = r.final_assignment->find(ce.u);
      const auto fv = r.final_assignment->find(ce.v);
      const auto fw = r.final_assignment->find(third);
      if (fu && fv && fw) {
        const WorkerIndex designated = *fu == *fv ? *fu : *fw;
        if (designated != potential.front()) ++v.designated_mismatches;
      }
    }
  }
  v.p3 = v.without_potential_counter == 0 && v.designated_mismatches == 0 &&
         (!v.cocos || v.with_several_potential_counters == 0);
  return v;
}

}  // namespace tristream
