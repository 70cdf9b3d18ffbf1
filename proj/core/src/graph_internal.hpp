#pragma once

// Working graph shared by the Louvain and Leiden backends. Unlike WordGraph
// it carries self loops, which appear once communities are aggregated.

#include <cstdint>
#include <span>
#include <vector>

#include "communityfish/community_graph.hpp"
#include "communityfish/rng.hpp"

namespace cfish::detail {

struct LevelGraph {
  std::vector<std::size_t> offsets{0};
  std::vector<WordGraph::Neighbor> adjacency;  // no self entries
  // Sum of A_uv over ordered pairs (u, v) folded into this node.
  std::vector<double> self_loop;
  std::vector<double> strength;
  double two_m = 0.0;

  std::size_t size() const { return strength.size(); }
  std::span<const WordGraph::Neighbor> neighbors(std::size_t node) const {
    return {adjacency.data() + offsets[node], adjacency.data() + offsets[node + 1]};
  }

  static LevelGraph from(const WordGraph& graph);
  // Collapses nodes sharing a community id in [0, num_communities).
  LevelGraph aggregate(std::span<const std::uint32_t> community, std::size_t num_communities) const;
};

double level_modularity(const LevelGraph& graph, std::span<const std::uint32_t> community);

// Renumbers community ids to 0..K-1 in order of first appearance; returns K.
std::size_t compact_ids(std::vector<std::uint32_t>& community);

// Minimum modularity gain for a node move to be accepted.
inline constexpr double kMinMoveGain = 1e-13;
// A level that improves modularity by less than this ends the outer loop.
inline constexpr double kLevelTolerance = 1e-12;

}  // namespace cfish::detail
