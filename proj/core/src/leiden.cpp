#include <algorithm>
#include <deque>
#include <numeric>

#include "communityfish/community_graph.hpp"
#include "communityfish/error.hpp"
#include "graph_internal.hpp"

namespace cfish {

#if defined(COMMUNITYFISH_HAS_LEIDEN)

namespace {

using detail::LevelGraph;

constexpr std::size_t kMaxLevels = 64;

// Queue-driven local moving: only neighbours of moved nodes are revisited.
std::size_t fast_move_nodes(const LevelGraph& g, std::vector<std::uint32_t>& community, Rng& rng,
                            ClusteringStats& stats) {
  const std::size_t n = g.size();
  std::vector<double> total(n, 0.0);
  std::vector<std::size_t> size(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    total[community[i]] += g.strength[i];
    ++size[community[i]];
  }
  std::vector<std::uint32_t> empty;
  for (std::uint32_t c = static_cast<std::uint32_t>(n); c-- > 0;) {
    if (size[c] == 0) empty.push_back(c);
  }

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0U);
  shuffle(std::span(order), rng);
  std::deque<std::uint32_t> queue(order.begin(), order.end());
  std::vector<char> queued(n, 1);

  std::vector<double> link(n, 0.0);
  std::vector<char> seen(n, 0);
  std::vector<std::uint32_t> candidates;
  std::size_t moves = 0;

  while (!queue.empty()) {
    const auto v = queue.front();
    queue.pop_front();
    queued[v] = 0;
    const auto own = community[v];
    const double k = g.strength[v];

    candidates.clear();
    for (const auto& nb : g.neighbors(v)) {
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
    // Leaving for an empty community has gain 0.
    if (size[own] > 1 && 0.0 > best_gain && !empty.empty()) {
      best = empty.back();
      best_gain = 0.0;
    }
    for (auto c : candidates) {
      link[c] = 0.0;
      seen[c] = 0;
    }

    const double delta_q = 2.0 * (best_gain - own_gain) / g.two_m;
    if (best == own || !(delta_q > detail::kMinMoveGain)) {
      total[own] += k;
      continue;
    }
    if (!empty.empty() && best == empty.back()) empty.pop_back();
    community[v] = best;
    total[best] += k;
    --size[own];
    ++size[best];
    if (size[own] == 0) empty.push_back(own);
    ++moves;
    stats.move_gains.push_back(delta_q);
    for (const auto& nb : g.neighbors(v)) {
      if (!queued[nb.node] && community[nb.node] != best) {
        queued[nb.node] = 1;
        queue.push_back(nb.node);
      }
    }
  }
  return moves;
}

// Splits each community into well-connected sub-communities. Nodes start as
// singletons and greedily merge, along edges inside their community, into the
// sub-community with the largest non-negative gain. Merged sets stay connected.
std::vector<std::uint32_t> refine(const LevelGraph& g, std::span<const std::uint32_t> community, Rng& rng) {
  const std::size_t n = g.size();
  std::vector<double> community_total(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) community_total[community[i]] += g.strength[i];

  std::vector<std::uint32_t> refined(n);
  std::iota(refined.begin(), refined.end(), 0U);
  std::vector<double> total(g.strength);
  std::vector<double> external(n, 0.0);  // weight from the sub-community to the rest of its community
  std::vector<std::size_t> size(n, 1);
  for (std::size_t v = 0; v < n; ++v) {
    for (const auto& nb : g.neighbors(v)) {
      if (community[nb.node] == community[v]) external[v] += nb.weight;
    }
  }

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0U);
  shuffle(std::span(order), rng);

  std::vector<double> link(n, 0.0);
  std::vector<char> seen(n, 0);
  std::vector<std::uint32_t> candidates;
  for (auto v : order) {
    if (size[refined[v]] > 1) continue;
    const auto c = community[v];
    const double k = g.strength[v];
    const double node_external = external[refined[v]];
    if (node_external < k * (community_total[c] - k) / g.two_m) continue;

    candidates.clear();
    for (const auto& nb : g.neighbors(v)) {
      if (community[nb.node] != c) continue;
      const auto r = refined[nb.node];
      if (!seen[r]) {
        seen[r] = 1;
        candidates.push_back(r);
      }
      link[r] += nb.weight;
    }
    std::sort(candidates.begin(), candidates.end());
    const auto own = refined[v];
    auto best = own;
    double best_gain = 0.0;
    bool found = false;
    for (auto r : candidates) {
      if (r == own) continue;
      const bool well_connected = external[r] >= total[r] * (community_total[c] - total[r]) / g.two_m;
      if (!well_connected) continue;
      const double gain = link[r] - total[r] * k / g.two_m;
      if (gain >= 0.0 && (!found || gain > best_gain)) {
        best = r;
        best_gain = gain;
        found = true;
      }
    }
    if (found) {
      external[best] = external[best] + node_external - 2.0 * link[best];
      total[best] += k;
      ++size[best];
      total[own] = 0.0;
      external[own] = 0.0;
      size[own] = 0;
      refined[v] = best;
    }
    for (auto r : candidates) {
      link[r] = 0.0;
      seen[r] = 0;
    }
  }
  return refined;
}

// Splits communities of the original graph into connected components.
std::vector<std::uint32_t> split_disconnected(const WordGraph& graph, std::span<const std::uint32_t> community) {
  const std::size_t n = graph.num_nodes();
  std::vector<std::uint32_t> out(n, UINT32_MAX);
  std::uint32_t next = 0;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < n; ++start) {
    if (out[start] != UINT32_MAX) continue;
    out[start] = next;
    stack.assign(1, start);
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      for (const auto& nb : graph.neighbors(u)) {
        if (out[nb.node] == UINT32_MAX && community[nb.node] == community[start]) {
          out[nb.node] = next;
          stack.push_back(nb.node);
        }
      }
    }
    ++next;
  }
  return out;
}

}  // namespace

bool leiden_available() { return true; }

namespace {

Partition leiden_run(const WordGraph& graph, const ClusteringOptions& options, Rng rng, ClusteringStats& st) {
  st = {};

  LevelGraph level = LevelGraph::from(graph);
  std::vector<std::uint32_t> node_to_level(graph.num_nodes());
  std::iota(node_to_level.begin(), node_to_level.end(), 0U);
  std::vector<std::uint32_t> community(level.size());
  std::iota(community.begin(), community.end(), 0U);

  for (std::size_t round = 0; round < kMaxLevels; ++round) {
    st.moves += fast_move_nodes(level, community, rng, st);
    ++st.levels;
    const std::size_t k = detail::compact_ids(community);
    if (k == level.size()) break;

    std::vector<std::uint32_t> refined = refine(level, community, rng);
    std::size_t r = detail::compact_ids(refined);
    if (r == level.size()) {
      // Refinement merged nothing; aggregate by the unrefined partition.
      refined = community;
      r = k;
    }
    std::vector<std::uint32_t> next_community(r);
    for (std::size_t i = 0; i < level.size(); ++i) next_community[refined[i]] = community[i];
    for (auto& node : node_to_level) node = refined[node];
    level = level.aggregate(refined, r);
    community = std::move(next_community);
  }

  std::vector<std::uint32_t> assignment(graph.num_nodes());
  for (std::size_t v = 0; v < assignment.size(); ++v) assignment[v] = community[node_to_level[v]];
  assignment = split_disconnected(graph, assignment);
  Partition partition(graph.words(), assignment, options.min_community_size);
  st.modularity = modularity(graph, partition);
  return partition;
}

}  // namespace

Partition leiden(const WordGraph& graph, const ClusteringOptions& options, ClusteringStats* stats) {
  if (graph.num_nodes() == 0 || !(graph.total_weight() > 0.0)) {
    throw EmptyStageError("empty graph: nothing to cluster");
  }
  ClusteringStats best_stats;
  Partition best = leiden_run(graph, options, make_rng(options.seed), best_stats);
  for (std::size_t r = 1; r < options.restarts; ++r) {
    ClusteringStats st;
    Partition candidate = leiden_run(graph, options, make_rng(options.seed, r), st);
    if (st.modularity > best_stats.modularity + 1e-12) {
      best = std::move(candidate);
      best_stats = std::move(st);
    }
  }
  if (stats) *stats = std::move(best_stats);
  return best;
}

#else

bool leiden_available() { return false; }

Partition leiden(const WordGraph&, const ClusteringOptions&, ClusteringStats*) {
  throw InputError("clustering backend 'leiden' not built");
}

#endif

}  // namespace cfish
