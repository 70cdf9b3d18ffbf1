#include "communityfish/pipeline.hpp"

#include "communityfish/error.hpp"

namespace cfish {

ClusteringBackend parse_clustering_backend(std::string_view name) {
  if (name == "louvain") return ClusteringBackend::louvain;
  if (name == "leiden") return ClusteringBackend::leiden;
  throw InputError("unknown clustering backend '" + std::string(name) + "' (expected louvain or leiden)");
}

std::string_view to_string(ClusteringBackend backend) {
  return backend == ClusteringBackend::louvain ? "louvain" : "leiden";
}

CommunityStructure detect_communities(const Corpus& tokenized, const CommunityOptions& options) {
  CommunityStructure out;
  out.bigrams = filter_bigrams(count_bigrams(tokenized), options.min_bigram_count, options.strict_greater);
  if (out.bigrams.empty()) throw EmptyStageError("no bigrams survive threshold");
  out.graph = build_graph(out.bigrams);

  ClusteringOptions clustering;
  clustering.seed = options.seed;
  clustering.min_community_size = options.min_community_size;
  out.partition = options.clustering == ClusteringBackend::louvain ? louvain(out.graph, clustering, &out.stats)
                                                                   : leiden(out.graph, clustering, &out.stats);
  if (out.partition.feature_communities().empty()) {
    throw EmptyStageError("no communities with at least " + std::to_string(options.min_community_size) + " words");
  }
  return out;
}

}  // namespace cfish
