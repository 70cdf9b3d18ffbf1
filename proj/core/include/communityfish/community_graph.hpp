#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "communityfish/corpus.hpp"

namespace cfish {

struct WeightedEdge {
  std::uint32_t u = 0;
  std::uint32_t v = 0;
  double weight = 0.0;
};

// Undirected weighted word graph without self loops. Nodes are indexed in
// lexicographic word order; adjacency is stored in CSR form.
class WordGraph {
 public:
  WordGraph() = default;
  // Parallel edges are summed. Throws InputError on self loops, negative
  // weights or out-of-range endpoints.
  WordGraph(std::vector<std::string> words, std::span<const WeightedEdge> edges);

  std::size_t num_nodes() const { return words_.size(); }
  std::size_t num_edges() const { return neighbors_.size() / 2; }
  const std::vector<std::string>& words() const { return words_; }
  const std::string& word(std::size_t node) const { return words_[node]; }

  // k_i: total weight of edges incident to node i.
  double strength(std::size_t node) const { return strength_[node]; }
  const std::vector<double>& strengths() const { return strength_; }
  // m: sum of all edge weights (each undirected edge once).
  double total_weight() const { return total_weight_; }

  struct Neighbor {
    std::uint32_t node;
    double weight;
  };
  std::span<const Neighbor> neighbors(std::size_t node) const {
    return {neighbors_.data() + offsets_[node], neighbors_.data() + offsets_[node + 1]};
  }
  // A_ij; 0 when not adjacent.
  double weight(std::size_t i, std::size_t j) const;
  std::vector<WeightedEdge> edges() const;

 private:
  std::vector<std::string> words_;
  std::vector<std::size_t> offsets_{0};
  std::vector<Neighbor> neighbors_;
  std::vector<double> strength_;
  double total_weight_ = 0.0;
};

// One word per node that appears in a retained pair; weights are the pair
// counts. Throws EmptyStageError when no pair survived the threshold.
WordGraph build_graph(const BigramCounts& counts);

// Hard assignment of every node to one community. Ids are contiguous and
// numbered in order of each community's lexicographically smallest word.
class Partition {
 public:
  Partition() = default;
  // Relabels `assignment` canonically. Throws InputError when sizes differ.
  Partition(std::vector<std::string> words, std::span<const std::uint32_t> assignment,
            std::size_t min_community_size = 1);

  static Partition singletons(const WordGraph& graph);

  std::size_t num_nodes() const { return assignment_.size(); }
  std::size_t num_communities() const { return members_.size(); }
  std::uint32_t community_of(std::size_t node) const { return assignment_[node]; }
  const std::vector<std::uint32_t>& assignment() const { return assignment_; }
  // Sorted member words of each community.
  const std::vector<std::vector<std::string>>& members() const { return members_; }
  const std::vector<std::string>& words() const { return words_; }

  // Communities with fewer words than this are not used as features.
  std::size_t min_community_size() const { return min_community_size_; }
  std::vector<std::uint32_t> feature_communities() const;

  friend bool operator==(const Partition&, const Partition&) = default;

 private:
  std::vector<std::string> words_;
  std::vector<std::uint32_t> assignment_;
  std::vector<std::vector<std::string>> members_;
  std::size_t min_community_size_ = 1;
};

// Q = (1/2m) sum_ij [A_ij - k_i k_j / 2m] delta(c_i, c_j). Throws InputError
// when the partition does not cover the graph and EmptyStageError when m = 0.
double modularity(const WordGraph& graph, const Partition& partition);
double modularity(const WordGraph& graph, std::span<const std::uint32_t> assignment);

struct ClusteringOptions {
  std::uint64_t seed = 0;
  std::size_t min_community_size = 2;
  // Independent runs with node orders drawn from streams of `seed`; the
  // partition with the highest modularity is kept (ties go to the earlier run).
  std::size_t restarts = 10;
  // Cross-check every incremental modularity gain against a full
  // recomputation; throws std::logic_error on disagreement.
  bool verify_moves = false;
};

struct ClusteringStats {
  std::size_t levels = 0;
  std::size_t moves = 0;
  double modularity = 0.0;
  // Modularity gain of every accepted node move, in order.
  std::vector<double> move_gains;
};

Partition louvain(const WordGraph& graph, const ClusteringOptions& options = {},
                  ClusteringStats* stats = nullptr);

// True when this build includes the Leiden backend.
bool leiden_available();

// Leiden: fast local moving, refinement within communities, and aggregation
// of the refined partition. Every returned community induces a connected
// subgraph. Throws InputError when built without the backend.
Partition leiden(const WordGraph& graph, const ClusteringOptions& options = {},
                 ClusteringStats* stats = nullptr);

struct BestPartition {
  Partition partition;
  double modularity = 0.0;
};

// Exhaustive search over all set partitions (restricted growth strings).
// Ties are broken by fewer communities, then the lexicographically smallest
// assignment. Throws InputError above max_nodes.
BestPartition brute_force_best_partition(const WordGraph& graph, std::size_t max_nodes = 10);

// True when every community of the partition induces a connected subgraph.
bool communities_connected(const WordGraph& graph, const Partition& partition);

// `community_id,word` rows for feature communities, numbered from 1 in
// canonical order, sorted by community then word.
void write_partition_csv(std::ostream& out, const Partition& partition);
// `word_a,word_b,weight` with word_a < word_b.
void write_edge_list_csv(std::ostream& out, const WordGraph& graph);

}  // namespace cfish
