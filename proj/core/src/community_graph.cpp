#include "communityfish/community_graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "communityfish/csv.hpp"
#include "communityfish/error.hpp"
#include "graph_internal.hpp"

namespace cfish {

WordGraph::WordGraph(std::vector<std::string> words, std::span<const WeightedEdge> edges)
    : words_(std::move(words)) {
  const std::size_t n = words_.size();
  std::vector<std::map<std::uint32_t, double>> rows(n);
  for (const auto& e : edges) {
    if (e.u >= n || e.v >= n) throw InputError("edge endpoint out of range");
    if (e.u == e.v) throw InputError("self loop on word '" + words_[e.u] + "'");
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) throw InputError("edge weights must be finite and non-negative");
    if (e.weight == 0.0) continue;
    rows[e.u][e.v] += e.weight;
    rows[e.v][e.u] += e.weight;
  }
  offsets_.assign(n + 1, 0);
  strength_.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [j, w] : rows[i]) {
      neighbors_.push_back({j, w});
      strength_[i] += w;
    }
    offsets_[i + 1] = neighbors_.size();
  }
  total_weight_ = std::accumulate(strength_.begin(), strength_.end(), 0.0) / 2.0;
}

double WordGraph::weight(std::size_t i, std::size_t j) const {
  const auto row = neighbors(i);
  auto it = std::lower_bound(row.begin(), row.end(), j,
                             [](const Neighbor& nb, std::size_t target) { return nb.node < target; });
  return (it != row.end() && it->node == j) ? it->weight : 0.0;
}

std::vector<WeightedEdge> WordGraph::edges() const {
  std::vector<WeightedEdge> out;
  out.reserve(num_edges());
  for (std::uint32_t i = 0; i < num_nodes(); ++i) {
    for (const auto& nb : neighbors(i)) {
      if (nb.node > i) out.push_back({i, nb.node, nb.weight});
    }
  }
  return out;
}

WordGraph build_graph(const BigramCounts& counts) {
  if (counts.pairs.empty()) throw EmptyStageError("empty graph: no bigrams survive threshold");
  std::vector<std::string> words;
  for (const auto& [pair, count] : counts.pairs) {
    words.push_back(pair.first);
    words.push_back(pair.second);
  }
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  const auto index = [&](const std::string& w) {
    return static_cast<std::uint32_t>(std::lower_bound(words.begin(), words.end(), w) - words.begin());
  };
  std::vector<WeightedEdge> edges;
  edges.reserve(counts.pairs.size());
  for (const auto& [pair, count] : counts.pairs) {
    edges.push_back({index(pair.first), index(pair.second), static_cast<double>(count)});
  }
  return WordGraph(std::move(words), edges);
}

Partition::Partition(std::vector<std::string> words, std::span<const std::uint32_t> assignment,
                     std::size_t min_community_size)
    : words_(std::move(words)), min_community_size_(min_community_size) {
  if (assignment.size() != words_.size()) {
    throw InputError("partition assigns " + std::to_string(assignment.size()) + " nodes but graph has " +
                     std::to_string(words_.size()));
  }
  std::map<std::uint32_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < assignment.size(); ++i) groups[assignment[i]].push_back(i);

  std::vector<std::vector<std::string>> communities;
  communities.reserve(groups.size());
  for (const auto& [id, nodes] : groups) {
    std::vector<std::string> names;
    names.reserve(nodes.size());
    for (auto node : nodes) names.push_back(words_[node]);
    std::sort(names.begin(), names.end());
    communities.push_back(std::move(names));
  }
  std::vector<std::size_t> order(communities.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return communities[a].front() < communities[b].front(); });
  std::vector<std::uint32_t> relabel(communities.size());
  for (std::size_t rank = 0; rank < order.size(); ++rank) relabel[order[rank]] = static_cast<std::uint32_t>(rank);

  members_.resize(communities.size());
  for (std::size_t c = 0; c < communities.size(); ++c) members_[relabel[c]] = std::move(communities[c]);

  std::map<std::uint32_t, std::uint32_t> raw_to_rank;
  std::uint32_t raw_index = 0;
  for (const auto& [id, nodes] : groups) raw_to_rank[id] = relabel[raw_index++];
  assignment_.resize(assignment.size());
  for (std::size_t i = 0; i < assignment.size(); ++i) assignment_[i] = raw_to_rank[assignment[i]];
}

Partition Partition::singletons(const WordGraph& graph) {
  std::vector<std::uint32_t> assignment(graph.num_nodes());
  std::iota(assignment.begin(), assignment.end(), 0U);
  return Partition(graph.words(), assignment);
}

std::vector<std::uint32_t> Partition::feature_communities() const {
  std::vector<std::uint32_t> ids;
  for (std::uint32_t c = 0; c < members_.size(); ++c) {
    if (members_[c].size() >= min_community_size_) ids.push_back(c);
  }
  return ids;
}

double modularity(const WordGraph& graph, std::span<const std::uint32_t> assignment) {
  if (assignment.size() != graph.num_nodes()) throw InputError("partition does not cover every graph node");
  const double two_m = 2.0 * graph.total_weight();
  if (!(two_m > 0.0)) throw EmptyStageError("modularity is undefined for a graph without edges");
  std::map<std::uint32_t, std::pair<double, double>> sums;  // internal, total
  for (std::size_t i = 0; i < graph.num_nodes(); ++i) {
    auto& [internal, total] = sums[assignment[i]];
    total += graph.strength(i);
    for (const auto& nb : graph.neighbors(i)) {
      if (assignment[nb.node] == assignment[i]) internal += nb.weight;
    }
  }
  double q = 0.0;
  for (const auto& [c, s] : sums) q += s.first / two_m - (s.second / two_m) * (s.second / two_m);
  return q;
}

double modularity(const WordGraph& graph, const Partition& partition) {
  return modularity(graph, partition.assignment());
}

namespace detail {

LevelGraph LevelGraph::from(const WordGraph& graph) {
  LevelGraph g;
  const std::size_t n = graph.num_nodes();
  g.offsets.reserve(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = graph.neighbors(i);
    g.adjacency.insert(g.adjacency.end(), row.begin(), row.end());
    g.offsets.push_back(g.adjacency.size());
  }
  g.self_loop.assign(n, 0.0);
  g.strength = graph.strengths();
  g.two_m = 2.0 * graph.total_weight();
  return g;
}

LevelGraph LevelGraph::aggregate(std::span<const std::uint32_t> community,
                                 std::size_t num_communities) const {
  LevelGraph g;
  g.two_m = two_m;
  g.self_loop.assign(num_communities, 0.0);
  g.strength.assign(num_communities, 0.0);
  std::vector<std::vector<std::size_t>> nodes_of(num_communities);
  for (std::size_t i = 0; i < size(); ++i) {
    const auto c = community[i];
    nodes_of[c].push_back(i);
    g.strength[c] += strength[i];
    g.self_loop[c] += self_loop[i];
  }
  std::vector<double> acc(num_communities, 0.0);
  std::vector<std::uint32_t> touched;
  g.offsets.assign(1, 0);
  for (std::uint32_t c = 0; c < num_communities; ++c) {
    for (auto i : nodes_of[c]) {
      for (const auto& nb : neighbors(i)) {
        const auto d = community[nb.node];
        if (d == c) {
          g.self_loop[c] += nb.weight;
          continue;
        }
        if (acc[d] == 0.0) touched.push_back(d);
        acc[d] += nb.weight;
      }
    }
    std::sort(touched.begin(), touched.end());
    for (auto d : touched) {
      g.adjacency.push_back({d, acc[d]});
      acc[d] = 0.0;
    }
    touched.clear();
    g.offsets.push_back(g.adjacency.size());
  }
  return g;
}

double level_modularity(const LevelGraph& graph, std::span<const std::uint32_t> community) {
  std::vector<double> internal(graph.size(), 0.0);
  std::vector<double> total(graph.size(), 0.0);
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const auto c = community[i];
    total[c] += graph.strength[i];
    internal[c] += graph.self_loop[i];
    for (const auto& nb : graph.neighbors(i)) {
      if (community[nb.node] == c) internal[c] += nb.weight;
    }
  }
  double q = 0.0;
  for (std::size_t c = 0; c < graph.size(); ++c) {
    const double t = total[c] / graph.two_m;
    q += internal[c] / graph.two_m - t * t;
  }
  return q;
}

std::size_t compact_ids(std::vector<std::uint32_t>& community) {
  std::vector<std::uint32_t> remap(community.size(), UINT32_MAX);
  std::uint32_t next = 0;
  for (auto& c : community) {
    if (remap[c] == UINT32_MAX) remap[c] = next++;
    c = remap[c];
  }
  return next;
}

}  // namespace detail

namespace {

using detail::LevelGraph;

// Greedy node moves until a full pass changes nothing. Returns the number of
// accepted moves.
std::size_t move_nodes(const LevelGraph& g, std::vector<std::uint32_t>& community, Rng& rng,
                       const ClusteringOptions& options, ClusteringStats* stats) {
  const std::size_t n = g.size();
  std::vector<double> total(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) total[community[i]] += g.strength[i];

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0U);
  shuffle(std::span(order), rng);

  std::vector<double> link(n, 0.0);
  std::vector<char> seen(n, 0);
  std::vector<std::uint32_t> candidates;
  std::size_t moves = 0;
  double q_expected = options.verify_moves ? detail::level_modularity(g, community) : 0.0;

  bool changed = true;
  while (changed) {
    changed = false;
    for (auto i : order) {
      const auto own = community[i];
      const double k = g.strength[i];
      candidates.clear();
      for (const auto& nb : g.neighbors(i)) {
        const auto c = community[nb.node];
        if (!seen[c]) {
          seen[c] = 1;
          candidates.push_back(c);
        }
        link[c] += nb.weight;
      }
      total[own] -= k;
      const double own_gain = link[own] - total[own] * k / g.two_m;
      std::sort(candidates.begin(), candidates.end());
      auto best = own;
      double best_gain = own_gain;
      for (auto c : candidates) {
        if (c == own) continue;
        const double gain = link[c] - total[c] * k / g.two_m;
        if (gain > best_gain) {
          best = c;
          best_gain = gain;
        }
      }
      const double delta_q = 2.0 * (best_gain - own_gain) / g.two_m;
      if (best != own && delta_q > detail::kMinMoveGain) {
        community[i] = best;
        total[best] += k;
        ++moves;
        changed = true;
        if (stats) stats->move_gains.push_back(delta_q);
        if (options.verify_moves) {
          q_expected += delta_q;
          const double q_full = detail::level_modularity(g, community);
          if (std::abs(q_full - q_expected) > 1e-10) {
            throw std::logic_error("incremental modularity gain disagrees with full recomputation");
          }
          q_expected = q_full;
        }
      } else {
        total[own] += k;
      }
      for (auto c : candidates) {
        link[c] = 0.0;
        seen[c] = 0;
      }
    }
  }
  return moves;
}

}  // namespace

namespace {

Partition louvain_run(const WordGraph& graph, const ClusteringOptions& options, Rng rng, ClusteringStats& st) {
  st = {};
  LevelGraph level = LevelGraph::from(graph);
  std::vector<std::uint32_t> node_community(graph.num_nodes());
  std::iota(node_community.begin(), node_community.end(), 0U);

  double q_prev = detail::level_modularity(level, std::vector<std::uint32_t>(node_community));

  while (true) {
    std::vector<std::uint32_t> community(level.size());
    std::iota(community.begin(), community.end(), 0U);
    const std::size_t moves = move_nodes(level, community, rng, options, &st);
    ++st.levels;
    st.moves += moves;
    if (moves == 0) break;
    const std::size_t k = detail::compact_ids(community);
    for (auto& c : node_community) c = community[c];
    const double q = detail::level_modularity(level, community);
    if (q - q_prev < detail::kLevelTolerance || k == level.size()) break;
    q_prev = q;
    level = level.aggregate(community, k);
  }

  Partition partition(graph.words(), node_community, options.min_community_size);
  st.modularity = modularity(graph, partition);
  return partition;
}

}  // namespace

Partition louvain(const WordGraph& graph, const ClusteringOptions& options, ClusteringStats* stats) {
  if (graph.num_nodes() == 0 || !(graph.total_weight() > 0.0)) {
    throw EmptyStageError("empty graph: nothing to cluster");
  }
  ClusteringStats best_stats;
  Partition best = louvain_run(graph, options, make_rng(options.seed), best_stats);
  for (std::size_t r = 1; r < options.restarts; ++r) {
    ClusteringStats st;
    Partition candidate = louvain_run(graph, options, make_rng(options.seed, r), st);
    if (st.modularity > best_stats.modularity + 1e-12) {
      best = std::move(candidate);
      best_stats = std::move(st);
    }
  }
  if (stats) *stats = std::move(best_stats);
  return best;
}

BestPartition brute_force_best_partition(const WordGraph& graph, std::size_t max_nodes) {
  const std::size_t n = graph.num_nodes();
  if (n == 0) throw EmptyStageError("empty graph");
  if (n > max_nodes) {
    throw InputError("brute force partition search supports at most " + std::to_string(max_nodes) +
                     " nodes, graph has " + std::to_string(n));
  }
  std::vector<std::uint32_t> rgs(n, 0);
  std::vector<std::uint32_t> prefix_max(n, 0);  // max label among rgs[0..i]
  std::vector<std::uint32_t> best = rgs;
  double best_q = modularity(graph, rgs);
  std::uint32_t best_k = 1;

  // Restricted growth strings in lexicographic order: rgs[i] <= max(rgs[0..i-1]) + 1.
  while (true) {
    std::size_t i = n - 1;
    while (i > 0 && rgs[i] > prefix_max[i - 1]) --i;
    if (i == 0) break;
    ++rgs[i];
    prefix_max[i] = std::max(prefix_max[i - 1], rgs[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      rgs[j] = 0;
      prefix_max[j] = prefix_max[i];
    }
    const double q = modularity(graph, rgs);
    const std::uint32_t k = prefix_max[n - 1] + 1;
    if (q > best_q + 1e-12 || (std::abs(q - best_q) <= 1e-12 && k < best_k)) {
      best = rgs;
      best_q = q;
      best_k = k;
    }
  }
  return {Partition(graph.words(), best), best_q};
}

bool communities_connected(const WordGraph& graph, const Partition& partition) {
  const std::size_t n = graph.num_nodes();
  std::vector<char> visited(n, 0);
  std::vector<std::size_t> seen_per_community(partition.num_communities(), 0);
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < n; ++start) {
    const auto c = partition.community_of(start);
    if (seen_per_community[c] > 0) continue;  // one traversal per community
    stack.assign(1, start);
    visited[start] = 1;
    std::size_t reached = 0;
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      ++reached;
      for (const auto& nb : graph.neighbors(u)) {
        if (!visited[nb.node] && partition.community_of(nb.node) == c) {
          visited[nb.node] = 1;
          stack.push_back(nb.node);
        }
      }
    }
    seen_per_community[c] = reached;
    if (reached != partition.members()[c].size()) return false;
  }
  return true;
}

void write_partition_csv(std::ostream& out, const Partition& partition) {
  out << "community_id,word\n";
  std::size_t label = 0;
  for (auto c : partition.feature_communities()) {
    ++label;
    for (const auto& word : partition.members()[c]) {
      csv::write_row(out, {std::to_string(label), word});
    }
  }
}

void write_edge_list_csv(std::ostream& out, const WordGraph& graph) {
  out << "word_a,word_b,weight\n";
  for (const auto& e : graph.edges()) {
    csv::write_row(out, {graph.word(e.u), graph.word(e.v), csv::format_number(e.weight)});
  }
}

}  // namespace cfish
