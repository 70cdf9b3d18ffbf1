#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "communityfish/community_graph.hpp"
#include "communityfish/error.hpp"
#include "graph_suite.hpp"
#include "oracles.hpp"

using namespace cfish;
using fixtures::make_graph;

namespace {

std::vector<int> as_ints(const Partition& p) { return {p.assignment().begin(), p.assignment().end()}; }

std::vector<int> as_ints(const std::vector<std::uint32_t>& a) { return {a.begin(), a.end()}; }

BigramCounts counts_of(std::map<WordPair, std::uint64_t> pairs) {
  BigramCounts c;
  c.pairs = std::move(pairs);
  return c;
}

fixtures::SuiteGraph random_graph(int n, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<WeightedEdge> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (unit(rng) < density) edges.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), 1.0 + 4.0 * unit(rng)});
    }
  }
  if (edges.empty()) edges.push_back({0, 1, 1.0});
  return make_graph("random", n, edges);
}

}  // namespace

TEST(BuildGraph, SingleEdge) {
  const WordGraph g = build_graph(counts_of({{{"a", "b"}, 4}}));
  EXPECT_EQ(g.num_nodes(), 2u);
  EXPECT_EQ(g.num_edges(), 1u);
  EXPECT_DOUBLE_EQ(g.weight(0, 1), 4.0);
  EXPECT_DOUBLE_EQ(g.total_weight(), 4.0);
  EXPECT_DOUBLE_EQ(g.strength(0), 4.0);
  EXPECT_DOUBLE_EQ(g.strength(1), 4.0);
}

TEST(BuildGraph, PathOfTwoPairs) {
  const WordGraph g = build_graph(counts_of({{{"a", "b"}, 2}, {{"b", "c"}, 3}}));
  EXPECT_EQ(g.num_nodes(), 3u);
  EXPECT_EQ(g.words(), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_DOUBLE_EQ(g.strength(1), 5.0);
  EXPECT_DOUBLE_EQ(g.total_weight(), 5.0);
}

TEST(BuildGraph, EmptyIsAnError) { EXPECT_THROW(build_graph(BigramCounts{}), EmptyStageError); }

TEST(BuildGraph, SymmetricStrengthsAndTotals) {
  const auto s = random_graph(9, 0.5, 4);
  const WordGraph& g = s.graph;
  double grand = 0.0;
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    EXPECT_EQ(g.weight(i, i), 0.0);
    double row = 0.0;
    for (std::size_t j = 0; j < g.num_nodes(); ++j) {
      EXPECT_EQ(g.weight(i, j), g.weight(j, i));
      row += g.weight(i, j);
    }
    EXPECT_NEAR(row, g.strength(i), 1e-12);
    grand += row;
  }
  EXPECT_NEAR(g.total_weight(), grand / 2, 1e-12);
}

TEST(WordGraphCtor, RejectsSelfLoopsAndBadWeights) {
  EXPECT_THROW(WordGraph({"a", "b"}, std::vector<WeightedEdge>{{0, 0, 1.0}}), InputError);
  EXPECT_THROW(WordGraph({"a", "b"}, std::vector<WeightedEdge>{{0, 1, -1.0}}), InputError);
  EXPECT_THROW(WordGraph({"a", "b"}, std::vector<WeightedEdge>{{0, 2, 1.0}}), InputError);
}

TEST(Modularity, HandValues) {
  const auto two = make_graph("two", 4, {{0, 1, 1.0}, {2, 3, 1.0}});
  EXPECT_NEAR(modularity(two.graph, std::vector<std::uint32_t>{0, 0, 1, 1}), 0.5, 1e-12);
  EXPECT_NEAR(modularity(two.graph, std::vector<std::uint32_t>{0, 1, 2, 3}), -0.25, 1e-12);
  const auto one = make_graph("one", 2, {{0, 1, 1.0}});
  EXPECT_NEAR(modularity(one.graph, std::vector<std::uint32_t>{0, 0}), 0.0, 1e-12);
}

TEST(Modularity, MatchesDirectFormulaOnRandomGraphs) {
  std::mt19937_64 rng(11);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto s = random_graph(8, 0.4, seed);
    std::uniform_int_distribution<std::uint32_t> pick(0, 3);
    std::vector<std::uint32_t> a(8);
    for (auto& c : a) c = pick(rng);
    EXPECT_NEAR(modularity(s.graph, a), oracle::modularity(s.adjacency, as_ints(a)), 1e-12);
  }
}

TEST(Modularity, SingletonPartitionClosedForm) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = random_graph(7, 0.5, seed + 100);
    const WordGraph& g = s.graph;
    double expected = 0.0;
    for (std::size_t i = 0; i < g.num_nodes(); ++i) expected -= g.strength(i) * g.strength(i);
    expected /= 4 * g.total_weight() * g.total_weight();
    EXPECT_NEAR(modularity(g, Partition::singletons(g)), expected, 1e-12);
  }
}

TEST(Modularity, Errors) {
  const auto one = make_graph("one", 2, {{0, 1, 1.0}});
  EXPECT_THROW(modularity(one.graph, std::vector<std::uint32_t>{0}), InputError);
  const WordGraph empty({"a", "b"}, std::vector<WeightedEdge>{});
  EXPECT_THROW(modularity(empty, std::vector<std::uint32_t>{0, 1}), EmptyStageError);
}

TEST(Partition, CanonicalInvariants) {
  const Partition p({"d", "c", "b", "a"}, std::vector<std::uint32_t>{7, 3, 7, 9}, 2);
  // Community order follows each community's smallest word: {a}, {b, d}, {c}.
  EXPECT_EQ(p.members(), (std::vector<std::vector<std::string>>{{"a"}, {"b", "d"}, {"c"}}));
  EXPECT_EQ(p.assignment(), (std::vector<std::uint32_t>{1, 2, 1, 0}));
  EXPECT_EQ(p.feature_communities(), (std::vector<std::uint32_t>{1}));
  for (std::size_t c = 0; c < p.num_communities(); ++c) {
    EXPECT_FALSE(p.members()[c].empty());
    for (const auto& w : p.members()[c]) {
      const auto node = std::find(p.words().begin(), p.words().end(), w) - p.words().begin();
      EXPECT_EQ(p.community_of(static_cast<std::size_t>(node)), c);
    }
  }
  EXPECT_THROW(Partition({"a"}, std::vector<std::uint32_t>{0, 1}), InputError);
}

TEST(BruteForce, HandExamples) {
  const auto two = make_graph("two", 4, {{0, 1, 1.0}, {2, 3, 1.0}});
  auto best = brute_force_best_partition(two.graph);
  EXPECT_NEAR(best.modularity, 0.5, 1e-12);
  EXPECT_EQ(best.partition.assignment(), (std::vector<std::uint32_t>{0, 0, 1, 1}));

  best = brute_force_best_partition(make_graph("edge", 2, {{0, 1, 1.0}}).graph);
  EXPECT_NEAR(best.modularity, 0.0, 1e-12);
  EXPECT_EQ(best.partition.num_communities(), 1u);

  best = brute_force_best_partition(make_graph("tri", 3, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}}).graph);
  EXPECT_NEAR(best.modularity, 0.0, 1e-12);
  EXPECT_EQ(best.partition.num_communities(), 1u);
}

TEST(BruteForce, AgreesWithRecursiveEnumeration) {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    const auto s = random_graph(6, 0.5, seed + 7);
    const auto best = brute_force_best_partition(s.graph);
    EXPECT_NEAR(best.modularity, oracle::best_modularity(s.adjacency), 1e-12);
    EXPECT_NEAR(best.modularity, oracle::modularity(s.adjacency, as_ints(best.partition)), 1e-12);
  }
}

TEST(BruteForce, RefusesLargeGraphs) {
  EXPECT_THROW(brute_force_best_partition(random_graph(11, 0.5, 1).graph), InputError);
}

TEST(Louvain, HandExamples) {
  const auto tri = make_graph("tri", 6, {{0, 1, 1}, {1, 2, 1}, {0, 2, 1}, {3, 4, 1}, {4, 5, 1}, {3, 5, 1}});
  const Partition p = louvain(tri.graph);
  EXPECT_EQ(p.assignment(), (std::vector<std::uint32_t>{0, 0, 0, 1, 1, 1}));

  const Partition edge = louvain(make_graph("edge", 2, {{0, 1, 1.0}}).graph);
  EXPECT_EQ(edge.num_communities(), 1u);

  std::vector<WeightedEdge> k4;
  for (std::uint32_t i = 0; i < 4; ++i) {
    for (std::uint32_t j = i + 1; j < 4; ++j) k4.push_back({i, j, 1.0});
  }
  EXPECT_EQ(louvain(make_graph("k4", 4, k4).graph).num_communities(), 1u);
}

TEST(Louvain, SuiteAgainstBruteForce) {
  for (const auto& s : fixtures::clustering_suite()) {
    ClusteringStats stats;
    const Partition p = louvain(s.graph, {}, &stats);
    const double best = oracle::best_modularity(s.adjacency);
    const double q = oracle::modularity(s.adjacency, as_ints(p));
    if (s.disconnected_cliques) {
      EXPECT_NEAR(q, best, 1e-12) << s.name;
    } else {
      EXPECT_GE(q, 0.95 * best - 1e-12) << s.name;
    }
  }
}

TEST(Louvain, GainsPositiveAndReportedQExact) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = random_graph(30, 0.15, seed);
    ClusteringOptions options;
    options.seed = seed;
    options.verify_moves = true;
    ClusteringStats stats;
    const Partition p = louvain(s.graph, options, &stats);
    for (double gain : stats.move_gains) EXPECT_GT(gain, 0.0);
    EXPECT_NEAR(stats.modularity, oracle::modularity(s.adjacency, as_ints(p)), 1e-10);
    EXPECT_GE(stats.modularity, modularity(s.graph, Partition::singletons(s.graph)) - 1e-12);
  }
}

TEST(Louvain, SameSeedSamePartition) {
  const auto s = random_graph(40, 0.1, 99);
  ClusteringOptions options;
  options.seed = 5;
  EXPECT_EQ(louvain(s.graph, options).assignment(), louvain(s.graph, options).assignment());
}

TEST(Leiden, MatchesLouvainOnTrianglesAndConnects) {
  if (!leiden_available()) GTEST_SKIP() << "built without leiden";
  const auto tri = make_graph("tri", 6, {{0, 1, 1}, {1, 2, 1}, {0, 2, 1}, {3, 4, 1}, {4, 5, 1}, {3, 5, 1}});
  EXPECT_EQ(leiden(tri.graph).assignment(), louvain(tri.graph).assignment());
  EXPECT_EQ(leiden(make_graph("edge", 2, {{0, 1, 1.0}}).graph).num_communities(), 1u);
  const auto path = make_graph("path", 3, {{0, 1, 1.0}, {1, 2, 1.0}});
  EXPECT_TRUE(communities_connected(path.graph, leiden(path.graph)));
}

TEST(Leiden, CommunitiesConnectedOnRandomGraphs) {
  if (!leiden_available()) GTEST_SKIP() << "built without leiden";
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = random_graph(40, 0.08, seed + 500);
    ClusteringOptions options;
    options.seed = seed;
    ClusteringStats stats;
    const Partition p = leiden(s.graph, options, &stats);
    EXPECT_TRUE(communities_connected(s.graph, p));
    EXPECT_NEAR(stats.modularity, oracle::modularity(s.adjacency, as_ints(p)), 1e-10);
    EXPECT_EQ(leiden(s.graph, options).assignment(), p.assignment());
  }
}

TEST(Leiden, SuiteAgainstBruteForce) {
  if (!leiden_available()) GTEST_SKIP() << "built without leiden";
  for (const auto& s : fixtures::clustering_suite()) {
    const double q = oracle::modularity(s.adjacency, as_ints(leiden(s.graph)));
    EXPECT_GE(q, 0.95 * oracle::best_modularity(s.adjacency) - 1e-12) << s.name;
  }
}

TEST(Export, PartitionAndEdgeListCsv) {
  const auto g = make_graph("g", 5, {{0, 1, 1}, {1, 2, 1}, {3, 4, 2}});
  const Partition p(g.graph.words(), std::vector<std::uint32_t>{0, 0, 0, 1, 2}, 2);
  std::ostringstream part, edges;
  write_partition_csv(part, p);
  EXPECT_EQ(part.str(), "community_id,word\n1,n0\n1,n1\n1,n2\n");
  write_edge_list_csv(edges, g.graph);
  EXPECT_EQ(edges.str(), "word_a,word_b,weight\nn0,n1,1\nn1,n2,1\nn3,n4,2\n");
}
