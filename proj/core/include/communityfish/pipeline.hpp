#pragma once

#include <cstdint>
#include <string_view>

#include "communityfish/community_graph.hpp"
#include "communityfish/corpus.hpp"
#include "communityfish/feature_matrix.hpp"

namespace cfish {

enum class ClusteringBackend { louvain, leiden };

ClusteringBackend parse_clustering_backend(std::string_view name);
std::string_view to_string(ClusteringBackend backend);

struct CommunityOptions {
  std::uint64_t min_bigram_count = 30;
  bool strict_greater = false;
  ClusteringBackend clustering = ClusteringBackend::louvain;
  std::size_t min_community_size = 2;
  DtmConvention convention = DtmConvention::member_count;
  std::uint64_t seed = 0;
};

// Bigrams -> threshold -> word graph -> communities.
struct CommunityStructure {
  BigramCounts bigrams;  // after the threshold
  WordGraph graph;
  Partition partition;
  ClusteringStats stats;
};

// Throws EmptyStageError("no bigrams survive threshold") when the threshold
// removes every pair, and when no community reaches min_community_size.
CommunityStructure detect_communities(const Corpus& tokenized, const CommunityOptions& options);

}  // namespace cfish
