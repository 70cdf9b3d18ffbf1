#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "communityfish/corpus.hpp"
#include "communityfish/pipeline.hpp"
#include "communityfish/poisson_scaler.hpp"

namespace cfish::cli {

enum class SeMethod { bootstrap, analytic, none };

// Every setting the command-line tool understands. Defaults here are the
// documented defaults; see README.md for the key list.
struct RunConfig {
  std::filesystem::path input;
  CorpusFormat format = CorpusFormat::jsonl;
  std::optional<std::filesystem::path> stopwords;
  std::optional<std::filesystem::path> lemmas;
  std::optional<std::string> sentence_pattern;
  bool lowercase = true;
  bool drop_numbers = true;

  std::uint64_t min_bigram_count = 30;
  bool strict_greater = false;
  ClusteringBackend clustering = ClusteringBackend::louvain;
  std::size_t min_community_size = 2;
  DtmConvention dtm = DtmConvention::member_count;
  std::uint64_t unigram_min_count = 5;
  bool baseline = false;

  double tol = 1e-8;
  int max_iter = 500;
  std::optional<std::string> anchor_low;
  std::optional<std::string> anchor_high;
  double clamp = 30.0;
  double beta_prior_sd = 0.0;

  SeMethod se = SeMethod::bootstrap;
  std::size_t replicates = 200;
  double level = 0.95;
  unsigned threads = 0;

  std::size_t n_docs = 25;
  std::size_t n_features = 40;
  double expected_row_total = 500.0;
  double beta_sd = 0.5;
  double psi_sd = 1.0;
  double length_sd = 0.3;
  std::size_t replications = 1;

  std::uint64_t seed = 42;
  std::filesystem::path out = "communityfish-out";

  // Throws InputError naming the key when it is unknown or the value is bad.
  void set(const std::string& key, const std::string& value);
  // Canonical `key=value` lines for every setting, in key order.
  std::vector<std::pair<std::string, std::string>> entries() const;

  CommunityOptions community_options() const;
  FitConfig fit_config() const;
  TokenizerConfig tokenizer() const;
};

std::string_view to_string(SeMethod method);

// Flat `key = value` lines; `#` starts a comment. Throws InputError with the
// path when the file cannot be read.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path);

// FNV-1a 64 over the canonical entries, as 16 hex digits.
std::string config_hash(const RunConfig& config);

}  // namespace cfish::cli
