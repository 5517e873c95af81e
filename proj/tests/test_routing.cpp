#include <gtest/gtest.h>

#include <map>

#include "tristream/routing.hpp"
#include "tristream/stream.hpp"

using namespace tristream;

TEST(RouteModulo, LuckyPair) {
  const RoutingDecision d = route_modulo(Edge(4, 8), 4);
  EXPECT_EQ(d.route, RouteCase::kLucky);
  EXPECT_EQ(d.targets(), std::vector<WorkerIndex>{0});
  EXPECT_EQ(d.assigned_workers(), std::vector<WorkerIndex>{0});
}

TEST(RouteModulo, UnluckyPair) {
  const RoutingDecision d = route_modulo(Edge(1, 2), 4);
  EXPECT_EQ(d.route, RouteCase::kUnlucky);
  EXPECT_EQ(d.targets(), (std::vector<WorkerIndex>{0, 1, 2, 3}));
  EXPECT_EQ(d.assigned_workers(), (std::vector<WorkerIndex>{1, 2}));
}

TEST(RouteModulo, SingleWorkerAlwaysLucky) {
  for (const Edge& e : gen_random_graph(50, 200, 1).edges) {
    const RoutingDecision d = route_modulo(e, 1);
    EXPECT_EQ(d.route, RouteCase::kLucky);
    EXPECT_EQ(d.targets(), std::vector<WorkerIndex>{0});
  }
  NodeMap m = NodeMap::modulo(1);
  EXPECT_EQ(m.route(Edge(3, 8)).route, RouteCase::kLucky);
}

TEST(RouteModulo, MatchesNodeMap) {
  NodeMap m = NodeMap::modulo(5);
  for (const Edge& e : gen_random_graph(100, 500, 2).edges) {
    const RoutingDecision a = route_modulo(e, 5);
    const RoutingDecision b = m.route(e);
    EXPECT_EQ(a.route, b.route);
    EXPECT_EQ(a.assigned_workers(), b.assigned_workers());
  }
}

TEST(RoutingDecision, BroadcastAssignsEveryone) {
  const RoutingDecision d = RoutingDecision::broadcast_all(3);
  EXPECT_EQ(d.targets(), (std::vector<WorkerIndex>{0, 1, 2}));
  EXPECT_EQ(d.assigned_workers(), (std::vector<WorkerIndex>{0, 1, 2}));
  EXPECT_STREQ(to_string(d.route), "BROADCAST_ALL");
}

TEST(RouteAdaptive, BothFreshGoToLeastLoaded) {
  NodeMap m = NodeMap::adaptive(3, 0.2);
  const RoutingDecision d = route_adaptive(m, Edge(1, 2));
  EXPECT_EQ(d.route, RouteCase::kLucky);
  EXPECT_EQ(d.targets(), std::vector<WorkerIndex>{0});
  EXPECT_EQ(*m.lookup(1), 0u);
  EXPECT_EQ(*m.lookup(2), 0u);
  EXPECT_EQ(std::vector<std::uint64_t>(m.loads().begin(), m.loads().end()), (std::vector<std::uint64_t>{1, 0, 0}));
}

TEST(RouteAdaptive, ZeroLeastLoadForcesFreshWorker) {
  NodeMap m = NodeMap::adaptive(3, 0.2);
  route_adaptive(m, Edge(1, 2));
  // l_f(1) = 1 > 1.2 * 0, so node 3 goes to i* = 1.
  const RoutingDecision d = route_adaptive(m, Edge(1, 3));
  EXPECT_EQ(d.route, RouteCase::kUnlucky);
  EXPECT_EQ(*m.lookup(3), 1u);
  EXPECT_EQ(d.assigned_workers(), (std::vector<WorkerIndex>{0, 1}));
  EXPECT_EQ(std::vector<std::uint64_t>(m.loads().begin(), m.loads().end()), (std::vector<std::uint64_t>{2, 1, 0}));
}

TEST(RouteAdaptive, LargeToleranceFollowsPartner) {
  NodeMap m = NodeMap::adaptive(3, 10.0);
  route_adaptive(m, Edge(1, 2));                    // loads [1,0,0]
  route_adaptive(m, Edge(1, 3));                    // 1 > 11*0: f(3)=1, loads [2,1,0]
  const RoutingDecision d4 = route_adaptive(m, Edge(1, 4));  // 2 > 11*0: f(4)=2
  EXPECT_EQ(*m.lookup(4), 2u);
  EXPECT_EQ(d4.route, RouteCase::kUnlucky);
  // An Unlucky edge charges both owners.
  EXPECT_EQ(std::vector<std::uint64_t>(m.loads().begin(), m.loads().end()), (std::vector<std::uint64_t>{3, 1, 1}));
  // i* = 1 with load 1; 3 <= 11 * 1, so node 5 follows node 1.
  const RoutingDecision d5 = route_adaptive(m, Edge(1, 5));
  EXPECT_EQ(*m.lookup(5), 0u);
  EXPECT_EQ(d5.route, RouteCase::kLucky);
  EXPECT_EQ(m.audit().follow_assignments, 1u);
  EXPECT_EQ(m.audit().violations, 0u);
}

TEST(RouteAdaptive, RequiresAdaptiveMap) {
  NodeMap m = NodeMap::modulo(3);
  EXPECT_THROW(route_adaptive(m, Edge(1, 2)), std::invalid_argument);
  EXPECT_THROW(NodeMap::adaptive(3, -0.1), std::invalid_argument);
  EXPECT_THROW(NodeMap::adaptive(0, 0.2), std::invalid_argument);
}

TEST(RouteAdaptive, TiesBreakToLowestIndex) {
  NodeMap m = NodeMap::adaptive(4, 0.2);
  route_adaptive(m, Edge(1, 2));  // worker 0
  route_adaptive(m, Edge(3, 4));  // worker 1
  route_adaptive(m, Edge(5, 6));  // worker 2
  route_adaptive(m, Edge(7, 8));  // worker 3
  route_adaptive(m, Edge(9, 10));  // all tied at 1 -> worker 0
  EXPECT_EQ(*m.lookup(9), 0u);
}

// Replays an adaptive run with independent bookkeeping: write-once
// assignments, load accounting, and the tolerance rule at assignment time.
class AdaptiveReplay : public ::testing::TestWithParam<double> {};

TEST_P(AdaptiveReplay, WriteOnceLoadsAndToleranceRule) {
  const double theta = GetParam();
  constexpr WorkerIndex k = 6;
  const GraphStream s = shuffle_stream(gen_powerlaw_cluster(3000, 3, 0.5, 11), 4);
  NodeMap m = NodeMap::adaptive(k, theta);
  std::map<NodeId, WorkerIndex> seen;
  std::vector<std::uint64_t> loads(k, 0);
  std::uint64_t follows = 0;
  for (const Edge& e : s.edges) {
    const bool had_u = seen.count(e.u) > 0;
    const bool had_v = seen.count(e.v) > 0;
    const std::uint64_t least = *std::min_element(loads.begin(), loads.end());
    const RoutingDecision d = m.route(e);
    const WorkerIndex fu = *m.lookup(e.u);
    const WorkerIndex fv = *m.lookup(e.v);
    if (had_u) ASSERT_EQ(fu, seen[e.u]);
    if (had_v) ASSERT_EQ(fv, seen[e.v]);
    if (had_u != had_v) {
      const NodeId fresh = had_u ? e.v : e.u;
      const WorkerIndex partner = had_u ? seen[e.u] : seen[e.v];
      const WorkerIndex chosen = had_u ? fv : fu;
      const bool picked_least = loads[chosen] == least;
      if (chosen == partner && !picked_least) {
        ++follows;
        ASSERT_LE(static_cast<double>(loads[partner]), (1.0 + theta) * static_cast<double>(least)) << fresh;
      }
      if (chosen != partner) ASSERT_EQ(loads[chosen], least);
    }
    seen[e.u] = fu;
    seen[e.v] = fv;
    ASSERT_EQ(d.route, fu == fv ? RouteCase::kLucky : RouteCase::kUnlucky);
    ++loads[fu];
    if (fv != fu) ++loads[fv];
    if (d.route == RouteCase::kUnlucky) ASSERT_EQ(d.assigned_workers().size(), 2u);
  }
  EXPECT_EQ(std::vector<std::uint64_t>(m.loads().begin(), m.loads().end()), loads);
  EXPECT_EQ(m.audit().violations, 0u);
  if (theta > 0) EXPECT_GT(follows, 0u);
}

INSTANTIATE_TEST_SUITE_P(Thetas, AdaptiveReplay, ::testing::Values(0.0, 0.2, 1.0));

TEST(NodeMap, ModuloLoadsCountOwners) {
  NodeMap m = NodeMap::modulo(3);
  std::uint64_t lucky = 0, unlucky = 0;
  for (const Edge& e : gen_random_graph(80, 400, 3).edges) {
    (m.route(e).route == RouteCase::kLucky ? lucky : unlucky)++;
  }
  std::uint64_t total = 0;
  for (auto l : m.loads()) total += l;
  EXPECT_EQ(total, lucky + 2 * unlucky);
}

TEST(NodeMap, SaltedModuloIsStableAndSpread) {
  NodeMap m = NodeMap::modulo(4, 12345);
  std::vector<int> hist(4, 0);
  for (NodeId u = 0; u < 4000; u += 4) {
    ++hist[*m.lookup(u)];  // plain modulo would put all of these on worker 0
    EXPECT_EQ(m.lookup(u), m.lookup(u));
  }
  for (int h : hist) EXPECT_GT(h, 150);
}

TEST(NodeMap, Snapshots) {
  NodeMap a = NodeMap::adaptive(3, 0.2);
  a.route(Edge(1, 2));
  a.route(Edge(2, 3));
  const NodeAssignment snap = a.snapshot();
  EXPECT_EQ(snap.size(), 3u);
  EXPECT_EQ(snap.at(1), *a.lookup(1));
  EXPECT_THROW(snap.at(99), std::out_of_range);
  EXPECT_FALSE(a.lookup(99).has_value());

  NodeMap m = NodeMap::modulo(3);
  EXPECT_THROW(m.snapshot(), std::logic_error);
  const std::vector<NodeId> nodes{4, 5, 9};
  const NodeAssignment ms = m.snapshot(nodes);
  EXPECT_EQ(ms.at(4), 1u);
  EXPECT_EQ(ms.at(9), 0u);
}

TEST(NodeAssignment, RandomAssignmentIsUniformish) {
  std::vector<NodeId> nodes(8000);
  for (NodeId u = 0; u < nodes.size(); ++u) nodes[u] = u * 7;
  const NodeAssignment f = random_assignment(nodes, 4, 3);
  std::vector<int> hist(4, 0);
  for (NodeId u : nodes) ++hist[f.at(u)];
  for (int h : hist) EXPECT_NEAR(h, 2000, 200);
  EXPECT_EQ(modulo_assignment(nodes, 4).at(7), 3u);
}
