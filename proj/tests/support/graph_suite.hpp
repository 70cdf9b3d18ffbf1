#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "communityfish/community_graph.hpp"

namespace fixtures {

struct SuiteGraph {
  std::string name;
  cfish::WordGraph graph;
  Eigen::MatrixXd adjacency;
  bool disconnected_cliques = false;
};

// Builds a graph on words n0, n1, ... from (u, v, weight) triples.
SuiteGraph make_graph(std::string name, int nodes, const std::vector<cfish::WeightedEdge>& edges,
                      bool disconnected_cliques = false);

// Fixed clustering test suite: paths, stars, cycles, cliques, barbells,
// disjoint clique pairs and seeded random weighted graphs, all connected
// except the clique pairs.
std::vector<SuiteGraph> clustering_suite();

}  // namespace fixtures
