#include "lgnn/graph.hpp"
#include "lgnn/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace lgnn;

namespace {

State at_positions(std::vector<double> q) {
  State s;
  s.q = Eigen::Map<Vec>(q.data(), static_cast<Eigen::Index>(q.size()));
  s.qdot = Vec::Zero(s.q.size());
  return s;
}

}  // namespace

TEST(BuildSystemGraph, PendulumChain) {
  auto g = build_system_graph({Topology::chain, 3, 2, {}, 0, {}});
  EXPECT_EQ(g.n, 3u);
  EXPECT_EQ(g.edges, (std::vector<Edge>{{0, 1}, {1, 2}}));
}

TEST(BuildSystemGraph, SpringRing) {
  auto g = build_system_graph({Topology::ring, 5, 2, {}, 0, {}});
  EXPECT_EQ(g.edges, (std::vector<Edge>{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}}));
}

TEST(BuildSystemGraph, RingHasNEdgesAndDegreeTwo) {
  for (std::size_t n = 3; n <= 60; ++n) {
    auto g = build_system_graph({Topology::ring, n, 2, {}, 0, {}});
    ASSERT_EQ(g.edges.size(), n);
    for (auto d : g.degrees()) ASSERT_EQ(d, 2u);
  }
}

TEST(BuildSystemGraph, ExplicitEdges) {
  auto g = build_system_graph(
      {Topology::explicit_edges, 4, 2, {0, 0, 1, 1}, 0, {{0, 1}, {1, 2}, {2, 3}, {1, 3}, {0, 2}}});
  EXPECT_EQ(g.edges.size(), 5u);
  EXPECT_EQ(g.n_types, 2u);
}

TEST(BuildSystemGraph, RejectsDuplicateEdge) {
  EXPECT_THROW(build_system_graph({Topology::explicit_edges, 3, 2, {}, 0, {{0, 1}, {1, 0}}}),
               ValidationError);
}

TEST(BuildSystemGraph, RejectsOutOfRangeNode) {
  EXPECT_THROW(build_system_graph({Topology::explicit_edges, 3, 2, {}, 0, {{0, 3}}}),
               ValidationError);
}

TEST(BuildSystemGraph, RejectsSelfEdgeAndBadType) {
  EXPECT_THROW(build_system_graph({Topology::explicit_edges, 3, 2, {}, 0, {{1, 1}}}),
               ValidationError);
  EXPECT_THROW(build_system_graph({Topology::chain, 2, 2, {0, 2}, 2, {}}), ValidationError);
  EXPECT_THROW(build_system_graph({Topology::chain, 0, 2, {}, 0, {}}), ValidationError);
}

TEST(DynamicEdges, WithinThreshold) {
  auto base = build_system_graph({Topology::explicit_edges, 2, 2, {}, 0, {}});
  auto g = dynamic_edges(at_positions({0, 0, 1, 0}), base, 2.0);
  ASSERT_EQ(g.edges.size(), 1u);
  EXPECT_DOUBLE_EQ(g.edge_weights[0], 1.0);
}

TEST(DynamicEdges, BeyondThreshold) {
  auto base = build_system_graph({Topology::explicit_edges, 2, 2, {}, 0, {}});
  EXPECT_TRUE(dynamic_edges(at_positions({0, 0, 3, 0}), base, 2.0).edges.empty());
}

TEST(DynamicEdges, CollinearNodes) {
  auto base = build_system_graph({Topology::explicit_edges, 3, 2, {}, 0, {}});
  auto g = dynamic_edges(at_positions({0, 0, 1, 0, 2, 0}), base, 1.0);
  EXPECT_EQ(g.edges, (std::vector<Edge>{{0, 1}, {1, 2}}));
}

TEST(DynamicEdges, RejectsNonPositiveTheta) {
  auto base = build_system_graph({Topology::explicit_edges, 2, 2, {}, 0, {}});
  EXPECT_THROW(dynamic_edges(at_positions({0, 0, 1, 0}), base, 0.0), ValidationError);
}

TEST(DynamicEdges, IdempotentAndSymmetricWeights) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> q(16);
    for (auto& x : q) x = rng.uniform(-2, 2);
    State s = at_positions(q);
    auto base = build_system_graph({Topology::explicit_edges, 8, 2, {}, 0, {}});
    auto once = dynamic_edges(s, base, 1.5);
    auto twice = dynamic_edges(s, once, 1.5);
    ASSERT_EQ(once.edges, twice.edges);
    ASSERT_EQ(once.edge_weights, twice.edge_weights);
    for (std::size_t e = 0; e < once.edges.size(); ++e) {
      const auto [i, j] = once.edges[e];
      ASSERT_EQ(particle_distance(s.q, 2, i, j), particle_distance(s.q, 2, j, i));
      ASSERT_GE(once.edge_weights[e], 0.0);
    }
  }
}

TEST(OneHot, Examples) {
  EXPECT_EQ(one_hot(0, 1), (Vec(1) << 1).finished());
  EXPECT_EQ(one_hot(1, 3), (Vec(3) << 0, 1, 0).finished());
  EXPECT_EQ(one_hot(2, 3), (Vec(3) << 0, 0, 1).finished());
}

TEST(OneHot, OutOfRange) {
  EXPECT_THROW(one_hot(3, 3), ValidationError);
  EXPECT_THROW(one_hot(-1, 3), ValidationError);
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next(), b.next());
  std::vector<int> x(50), y(50);
  for (int i = 0; i < 50; ++i) x[i] = y[i] = i;
  Rng c(3), d(3);
  c.shuffle(x);
  d.shuffle(y);
  EXPECT_EQ(x, y);
  std::sort(x.begin(), x.end());
  for (int i = 0; i < 50; ++i) ASSERT_EQ(x[i], i);
}

TEST(Rng, UniformRange) {
  Rng r(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform(-0.5, 0.5);
    ASSERT_GE(u, -0.5);
    ASSERT_LT(u, 0.5);
  }
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
}
