#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "communityfish/corpus.hpp"
#include "communityfish/feature_matrix.hpp"
#include "communityfish/pipeline.hpp"
#include "communityfish/poisson_scaler.hpp"

namespace cfish {

// Planted-truth Poisson scaling data. Empty parameter vectors are drawn:
// theta* standard normal then z-scored, beta* ~ N(0, beta_sd^2),
// psi* ~ N(0, psi_sd^2), and alpha* chosen so that document i has expected
// total expected_row_total * exp(length_sd * z_i - length_sd^2 / 2).
struct SyntheticSpec {
  std::size_t n_docs = 25;
  std::size_t n_features = 40;
  double expected_row_total = 500.0;
  double beta_sd = 0.5;
  double psi_sd = 1.0;
  double length_sd = 0.3;
  Eigen::VectorXd theta_star;
  Eigen::VectorXd beta_star;
  Eigen::VectorXd psi_star;
  Eigen::VectorXd alpha_star;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticMatrix {
  CountMatrix matrix;
  SyntheticSpec truth;  // every parameter vector filled
};

// Draws y_ij ~ Poisson(exp(alpha_i + psi_j + theta_i beta_j)). Draws with an
// all-zero row or column are repeated up to 10 times, then EstimationError.
SyntheticMatrix generate_matrix(const SyntheticSpec& spec);

struct PlantedCommunity {
  std::vector<std::string> words;
  double beta = 0.0;
  double psi = 0.0;
};

// Documents are sequences of phrases. Each phrase picks community c with
// probability proportional to exp(psi_c + theta_i beta_c) and emits a random
// ordering of a random subset (size >= 2) of its words, followed by a Poisson
// number of noise words drawn uniformly from a separate noise vocabulary.
struct CorpusSpec {
  std::size_t n_docs = 40;
  double phrases_per_doc = 60.0;
  double length_sd = 0.2;
  std::vector<PlantedCommunity> communities;
  std::size_t noise_vocabulary = 600;
  double noise_per_phrase = 1.0;
  Eigen::VectorXd theta_star;  // drawn and z-scored when empty
  std::uint64_t seed = 0;

  void validate() const;
};

// `count` communities with `words_each` letter-only words; betas alternate in
// sign with magnitude `beta`, the last `shared` communities get beta 0.
std::vector<PlantedCommunity> make_planted_communities(std::size_t count, std::size_t words_each, double beta,
                                                       std::size_t shared = 0);

struct SyntheticCorpus {
  Corpus corpus;  // tokenized; text is the space-joined tokens
  Eigen::VectorXd theta_star;
};

SyntheticCorpus generate_corpus(const CorpusSpec& spec);

struct RecoveryMetrics {
  double pearson = 0.0;   // after sign alignment, so >= 0 unless degenerate
  double spearman = 0.0;  // after sign alignment
  double rmse = 0.0;      // of truth regressed on the estimate
  bool sign_flipped = false;
  std::optional<double> coverage;  // share of documents whose interval covers aligned truth
};

RecoveryMetrics recovery_report(const Eigen::VectorXd& truth, const ScalingResult& result);

double pearson_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
double spearman_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct CompareOptions {
  CommunityOptions community;
  std::uint64_t unigram_min_count = 5;
  FitConfig fit;
};

struct BranchResult {
  bool ok = false;
  std::string error;
  std::size_t features = 0;
  std::optional<ScalingResult> fit;
  TrimReport trim;
  double runtime_seconds = 0.0;  // feature extraction and fit
};

struct ComparisonReport {
  std::size_t vocabulary_size = 0;
  std::size_t communities = 0;
  std::optional<Partition> partition;
  BranchResult community;
  BranchResult unigram;
  // Spearman correlation of the two position vectors over shared documents.
  double rank_correlation = std::numeric_limits<double>::quiet_NaN();
  std::size_t shared_documents = 0;
};

// Runs the community and the unigram branch on the same tokenized corpus. A
// failing branch is reported with its error; the other still runs. Throws
// EmptyStageError on an empty corpus.
ComparisonReport compare_models(const Corpus& corpus, const CompareOptions& options);

// `doc_id,theta_community,theta_unigram` (empty cell when a branch dropped
// the document or failed), plus metadata columns.
void write_comparison_csv(std::ostream& out, const ComparisonReport& report, const Corpus& corpus);

}  // namespace cfish
