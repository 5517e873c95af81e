#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <thread>

#include "reference.hpp"
#include "tristream/channel.hpp"
#include "tristream/metrics.hpp"
#include "tristream/pipeline.hpp"
#include "tristream/triangle_oracle.hpp"

using namespace tristream;

namespace {

PipelineConfig config(Algorithm a, WorkerIndex k, std::uint64_t b, std::uint64_t seed = 1) {
  PipelineConfig c;
  c.algorithm = a;
  c.workers = k;
  c.budget = b;
  c.seed = seed;
  return c;
}

GraphStream stream_of(std::vector<Edge> edges) {
  GraphStream s;
  s.edges = std::move(edges);
  return s;
}

const Algorithm kAll[] = {Algorithm::kTriFly, Algorithm::kCocosSimple, Algorithm::kCocosOpt};

// Drops every assigned bit: edges are still delivered but never stored.
class DropAssignedRouter final : public Router {
 public:
  explicit DropAssignedRouter(WorkerIndex k) : inner_(NodeMap::modulo(k)) {}
  WorkerIndex worker_count() const override { return inner_.worker_count(); }
  RoutingDecision route(const Edge& e) override {
    RoutingDecision d = inner_.route(e);
    d.owner_count = 0;
    return d;
  }

 private:
  NodeMap inner_;
};

class CountingSource final : public EdgeSource {
 public:
  explicit CountingSource(const std::vector<Edge>& edges) : edges_(edges) {}
  std::optional<Edge> next() override {
    ++calls;
    if (pos_ == edges_.size()) return std::nullopt;
    return edges_[pos_++];
  }
  std::size_t calls = 0;

 private:
  const std::vector<Edge>& edges_;
  std::size_t pos_ = 0;
};

class SlowSource final : public EdgeSource {
 public:
  explicit SlowSource(const std::vector<Edge>& edges) : edges_(edges) {}
  std::optional<Edge> next() override {
    if (pos_ == 0) std::this_thread::sleep_for(std::chrono::milliseconds(300));
    if (pos_ == edges_.size()) return std::nullopt;
    return edges_[pos_++];
  }

 private:
  const std::vector<Edge>& edges_;
  std::size_t pos_ = 0;
};

}  // namespace

TEST(PipelineConfig, Validation) {
  EXPECT_THROW(config(Algorithm::kTriFly, 0, 10).validate(), std::invalid_argument);
  EXPECT_THROW(config(Algorithm::kTriFly, 2, 1).validate(), std::invalid_argument);
  PipelineConfig c = config(Algorithm::kCocosOpt, 2, 10);
  c.theta = -1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.theta = 0.2;
  c.channel_capacity = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_THROW(Pipeline(config(Algorithm::kTriFly, 3, 10), std::make_unique<BroadcastRouter>(2)),
               std::invalid_argument);
}

TEST(PipelineConfig, ParseNames) {
  EXPECT_EQ(parse_algorithm("trifly"), Algorithm::kTriFly);
  EXPECT_EQ(parse_algorithm("cocos-opt"), Algorithm::kCocosOpt);
  EXPECT_EQ(parse_algorithm("COCOS_SIMPLE"), Algorithm::kCocosSimple);
  EXPECT_EQ(parse_aggregation("lazy"), Aggregation::kLazy);
  EXPECT_EQ(parse_execution("concurrent"), Execution::kConcurrent);
  EXPECT_THROW(parse_algorithm("mascot"), std::invalid_argument);
  EXPECT_STREQ(to_string(Algorithm::kCocosOpt), "COCOS_OPT");
}

TEST(Pipeline, TriFlySingleTriangle) {
  const RunReport r = run(config(Algorithm::kTriFly, 1, 10), stream_of({{1, 2}, {2, 3}, {1, 3}}));
  EXPECT_EQ(r.estimates.global(), 1.0);
  for (NodeId u : {1, 2, 3}) EXPECT_EQ(r.estimates.local(u), 1.0);
}

TEST(Pipeline, CocosSimpleK4AnyOrder) {
  std::vector<Edge> edges = ref::complete_graph(4);
  std::sort(edges.begin(), edges.end());
  int orders = 0;
  do {
    PipelineConfig c = config(Algorithm::kCocosSimple, 3, 10);
    c.instrument = true;
    const RunReport r = run(c, stream_of(edges));
    ASSERT_EQ(r.estimates.global(), 4.0);
    for (NodeId u = 0; u < 4; ++u) ASSERT_EQ(r.estimates.local(u), 3.0);
    const StructuralVerdict v = verify_structural_properties(r, exact_count(stream_of(edges)));
    ASSERT_TRUE(v.p1 && v.p2 && v.p3);
    ++orders;
  } while (std::next_permutation(edges.begin(), edges.end()));
  EXPECT_EQ(orders, 720);
}

TEST(Pipeline, ExactWhenNothingIsEvicted) {
  const GraphStream s = shuffle_stream(gen_random_graph(60, 500, 7), 3);
  const auto truth = ref::local_counts(s.edges);
  const double total = static_cast<double>(ref::triangles(s.edges).size());
  for (Algorithm a : kAll) {
    for (WorkerIndex k : {1u, 2u, 5u}) {
      const RunReport r = run(config(a, k, s.edges.size()), s);
      for (auto ev : r.worker_evictions) ASSERT_EQ(ev, 0u);
      // Tri-Fly divides by k, so allow rounding.
      EXPECT_NEAR(r.estimates.global(), total, 1e-9 * total) << to_string(a) << " k=" << k;
      for (const auto& [u, x] : truth) ASSERT_NEAR(r.estimates.local(u), static_cast<double>(x), 1e-9 * (1.0 + x));
    }
  }
}

TEST(Pipeline, QueryBeforeAnyEdge) {
  for (Execution ex : {Execution::kDeterministic, Execution::kConcurrent}) {
    PipelineConfig c = config(Algorithm::kCocosOpt, 3, 10);
    c.execution = ex;
    Pipeline p(c);
    const EstimateStore e = p.query_estimates();
    EXPECT_EQ(e.global(), 0.0);
    EXPECT_TRUE(e.locals().empty());
    p.finish();
  }
}

TEST(Pipeline, LazyQueriesDoNotDoubleCount) {
  const GraphStream s = gen_random_graph(50, 400, 2);
  for (Execution ex : {Execution::kDeterministic, Execution::kConcurrent}) {
    PipelineConfig c = config(Algorithm::kTriFly, 3, 50);
    c.aggregation = Aggregation::kLazy;
    c.execution = ex;
    Pipeline p(c);
    for (std::size_t t = 0; t < 200; ++t) p.push(s.edges[t]);
    const EstimateStore first = p.query_estimates();
    const EstimateStore second = p.query_estimates();
    EXPECT_EQ(first.global(), second.global());
    EXPECT_EQ(first.locals(), second.locals());
    for (std::size_t t = 200; t < s.edges.size(); ++t) p.push(s.edges[t]);
    const RunReport r = p.finish();
    EXPECT_EQ(r.messages.query_broadcasts, 3u);
  }
}

TEST(Pipeline, EagerLazyDeterministicConcurrentAgree) {
  const GraphStream s = shuffle_stream(gen_random_graph(150, 1500, 4), 1);
  for (Algorithm a : kAll) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      std::vector<RunReport> reports;
      for (Aggregation ag : {Aggregation::kEager, Aggregation::kLazy}) {
        for (Execution ex : {Execution::kDeterministic, Execution::kConcurrent}) {
          PipelineConfig c = config(a, 4, 60, seed);
          c.aggregation = ag;
          c.execution = ex;
          c.channel_capacity = 7;  // small, so backpressure is exercised
          reports.push_back(run(c, s));
        }
      }
      const double g = reports[0].estimates.global();
      for (const RunReport& r : reports) {
        EXPECT_NEAR(r.estimates.global(), g, 1e-9 * std::max(1.0, std::abs(g)));
        EXPECT_EQ(r.worker_loads, reports[0].worker_loads);
        EXPECT_EQ(r.worker_stored, reports[0].worker_stored);
        for (const auto& [u, x] : reports[0].estimates.locals()) {
          EXPECT_NEAR(r.estimates.local(u), x, 1e-9 * std::max(1.0, x));
        }
      }
    }
  }
}

TEST(Pipeline, DeterministicModeIsReproducible) {
  const GraphStream s = gen_random_graph(120, 900, 5);
  for (Algorithm a : kAll) {
    PipelineConfig c = config(a, 3, 40, 9);
    c.instrument = true;
    const RunReport x = run(c, s);
    const RunReport y = run(c, s);
    EXPECT_EQ(x.estimates.global(), y.estimates.global());
    EXPECT_EQ(x.estimates.locals(), y.estimates.locals());
    EXPECT_EQ(x.worker_evictions, y.worker_evictions);
    EXPECT_EQ(x.replication_histogram, y.replication_histogram);
    EXPECT_EQ(x.trace->emitters, y.trace->emitters);
    EXPECT_EQ(x.messages.total(), y.messages.total());
  }
}

TEST(Pipeline, TriFlySingleWorkerMatchesDirectWorker) {
  const GraphStream s = shuffle_stream(gen_random_graph(100, 1200, 8), 2);
  const std::uint64_t seed = 31;
  const RunReport r = run(config(Algorithm::kTriFly, 1, 50, seed), s);
  SamplerWorker w(0, 50, worker_seed(seed, 0));
  double global = 0;
  absl::flat_hash_map<NodeId, double> local;
  for (const Edge& e : s.edges) {
    for (const CountUpdate& u : w.count(e)) {
      if (u.is_global()) {
        global += u.delta;
      } else {
        local[*u.node] += u.delta;
      }
    }
    w.sample(e);
  }
  EXPECT_EQ(r.estimates.global(), global);
  EXPECT_EQ(r.estimates.locals(), local);
}

TEST(Pipeline, RoutingCountersAndMessages) {
  const GraphStream s = gen_random_graph(100, 800, 6);
  PipelineConfig c = config(Algorithm::kCocosSimple, 4, 30);
  const RunReport r = run(c, s);
  EXPECT_EQ(r.lucky + r.unlucky, s.edges.size());
  std::uint64_t sent = 0;
  for (auto m : r.messages.master_to_worker) sent += m;
  EXPECT_EQ(sent, r.lucky + 4 * r.unlucky);
  std::uint64_t loads = 0;
  for (auto l : r.worker_loads) loads += l;
  EXPECT_EQ(loads, r.lucky + 2 * r.unlucky);
  EXPECT_EQ(std::vector<std::uint64_t>(r.master_loads.begin(), r.master_loads.end()), r.worker_loads);

  const RunReport t = run(config(Algorithm::kTriFly, 3, 30), s);
  EXPECT_EQ(t.broadcast, s.edges.size());
  for (auto l : t.worker_loads) EXPECT_EQ(l, s.edges.size());
  EXPECT_TRUE(t.master_loads.empty());
}

TEST(Pipeline, EagerZeroOnlyAddsMessages) {
  const GraphStream s = gen_random_graph(80, 500, 9);
  PipelineConfig c = config(Algorithm::kCocosOpt, 3, 30, 4);
  const RunReport a = run(c, s);
  c.eager_zero = true;
  const RunReport b = run(c, s);
  EXPECT_EQ(a.estimates.global(), b.estimates.global());
  EXPECT_GT(b.messages.total(), a.messages.total());
}

TEST(Pipeline, SinglePassOverSource) {
  const GraphStream s = gen_random_graph(70, 300, 3);
  CountingSource src(s.edges);
  const RunReport r = run(config(Algorithm::kCocosOpt, 2, 20), src);
  EXPECT_EQ(r.edges, s.edges.size());
  EXPECT_EQ(src.calls, s.edges.size() + 1);
}

TEST(Pipeline, ElapsedExcludesSourceWait) {
  const GraphStream s = gen_random_graph(70, 300, 3);
  SlowSource src(s.edges);
  const auto start = std::chrono::steady_clock::now();
  const RunReport r = run(config(Algorithm::kCocosOpt, 2, 20), src);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_GE(wall, 0.3);
  EXPECT_LT(r.elapsed_seconds, 0.1);
}

TEST(Pipeline, FinishTwiceThrows) {
  Pipeline p(config(Algorithm::kTriFly, 2, 10));
  p.push(Edge(1, 2));
  p.finish();
  EXPECT_THROW(p.finish(), std::logic_error);
  EXPECT_THROW(p.push(Edge(2, 3)), std::logic_error);
}

TEST(Structure, CocosRunsSatisfyAllProperties) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const GraphStream s = shuffle_stream(gen_powerlaw_cluster(400, 3, 0.6, seed), seed);
    const TriangleSet truth = exact_count(s);
    for (Algorithm a : {Algorithm::kCocosSimple, Algorithm::kCocosOpt}) {
      for (WorkerIndex k : {1u, 3u, 8u}) {
        PipelineConfig c = config(a, k, 40, seed);
        c.instrument = true;
        const RunReport r = run(c, s);
        const StructuralVerdict v = verify_structural_properties(r, truth);
        EXPECT_TRUE(v.all()) << to_string(a) << " k=" << k;
        EXPECT_LE(v.max_replication, 2u);
        EXPECT_LE(v.max_emitters, 1u);
        EXPECT_EQ(v.triangles_checked, truth.size());
        EXPECT_EQ(v.designated_mismatches, 0u);
        ASSERT_TRUE(r.final_assignment.has_value());
        EXPECT_EQ(partition_stats(s, *r.final_assignment, 40).triangle_sum, truth.size());
      }
    }
  }
}

TEST(Structure, TriFlyReplicatesUpToK) {
  const GraphStream s = gen_random_graph(30, 60, 2);
  PipelineConfig c = config(Algorithm::kTriFly, 3, 100);
  c.instrument = true;
  const RunReport r = run(c, s);
  const StructuralVerdict v = verify_structural_properties(r, exact_count(s));
  EXPECT_EQ(v.max_replication, 3u);
  EXPECT_TRUE(v.p1);
  EXPECT_TRUE(v.p2);  // not applied to Tri-Fly
  EXPECT_TRUE(v.p3);
  EXPECT_FALSE(v.cocos);
}

TEST(Structure, DroppingAssignedBitsBreaksCoverage) {
  const GraphStream s = gen_random_graph(40, 300, 5);
  const TriangleSet truth = exact_count(s);
  ASSERT_GT(truth.size(), 0u);
  PipelineConfig c = config(Algorithm::kCocosSimple, 3, 100);
  c.instrument = true;
  const RunReport r = run(c, s, std::make_unique<DropAssignedRouter>(3));
  const StructuralVerdict v = verify_structural_properties(r, truth);
  EXPECT_FALSE(v.p3);
  EXPECT_EQ(v.without_potential_counter, truth.size());
  EXPECT_EQ(r.estimates.global(), 0.0);
}

TEST(Structure, NeedsInstrumentation) {
  const GraphStream s = gen_random_graph(20, 40, 1);
  const RunReport r = run(config(Algorithm::kCocosOpt, 2, 10), s);
  EXPECT_THROW(verify_structural_properties(r, exact_count(s)), std::logic_error);
}

TEST(Unbiasedness, CocosOptOnRandomGraph) {
  const GraphStream s = gen_random_graph(1000, 10000, 21);
  const double truth = static_cast<double>(exact_count(s).size());
  std::vector<double> estimates;
  for (std::uint64_t t = 0; t < 10000; ++t) {
    estimates.push_back(run(config(Algorithm::kCocosOpt, 4, 100, derive_seed(5, t)), s).estimates.global());
  }
  const TrialStats st = trial_stats(estimates);
  EXPECT_LE(std::abs(st.mean - truth), 3 * st.std_error) << "mean " << st.mean << " truth " << truth;
}

TEST(Channel, FifoWithBackpressure) {
  BoundedChannel<int> ch(2);
  constexpr int kItems = 20000;
  std::thread producer([&] {
    for (int i = 0; i < kItems; ++i) ch.push(i);
  });
  for (int i = 0; i < kItems; ++i) ASSERT_EQ(ch.pop(), i);
  producer.join();
  EXPECT_THROW(BoundedChannel<int>(0), std::invalid_argument);
}

TEST(Channel, ManyProducersNothingLost) {
  BoundedChannel<int> ch(3);
  std::vector<std::thread> producers;
  for (int p = 0; p < 4; ++p) {
    producers.emplace_back([&, p] {
      for (int i = 0; i < 5000; ++i) ch.push(p);
    });
  }
  std::vector<int> counts(4, 0);
  for (int i = 0; i < 20000; ++i) ++counts[ch.pop()];
  for (auto& t : producers) t.join();
  for (int c : counts) EXPECT_EQ(c, 5000);
}
