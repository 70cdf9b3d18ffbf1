#include "communityfish/synthbench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

#include "communityfish/csv.hpp"
#include "communityfish/error.hpp"
#include "communityfish/rng.hpp"

namespace cfish {
namespace {

Eigen::VectorXd zscore(Eigen::VectorXd v) {
  const double mean = v.mean();
  const double sd = std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
  return (v.array() - mean) / sd;
}

Eigen::VectorXd draw_normal(Rng& rng, std::size_t n, double sd) {
  std::normal_distribution<double> normal(0.0, sd);
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
  return v;
}

// Base-26 lowercase rendering, at least `width` letters.
std::string letters(std::size_t value, std::size_t width) {
  std::string out;
  do {
    out.push_back(static_cast<char>('a' + value % 26));
    value /= 26;
  } while (value > 0);
  while (out.size() < width) out.push_back('a');
  std::reverse(out.begin(), out.end());
  return out;
}

Eigen::VectorXd ranks(const Eigen::VectorXd& v) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(v.size()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return v[a] < v[b]; });
  Eigen::VectorXd r(v.size());
  for (std::size_t k = 0; k < order.size();) {
    std::size_t end = k;
    while (end + 1 < order.size() && v[order[end + 1]] == v[order[k]]) ++end;
    const double average = (static_cast<double>(k) + static_cast<double>(end)) / 2.0 + 1.0;
    for (std::size_t t = k; t <= end; ++t) r[order[t]] = average;
    k = end + 1;
  }
  return r;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (n_docs < 2) throw InputError("synthetic spec needs n_docs >= 2");
  if (n_features < 2) throw InputError("synthetic spec needs n_features >= 2");
  if (!(expected_row_total > 0.0)) throw InputError("expected_row_total must be positive");
  const auto check = [](const Eigen::VectorXd& v, std::size_t n, const char* name) {
    if (v.size() != 0 && static_cast<std::size_t>(v.size()) != n) {
      throw InputError(std::string("synthetic spec: ") + name + " has the wrong length");
    }
  };
  check(theta_star, n_docs, "theta_star");
  check(alpha_star, n_docs, "alpha_star");
  check(beta_star, n_features, "beta_star");
  check(psi_star, n_features, "psi_star");
}

SyntheticMatrix generate_matrix(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng = make_rng(spec.seed);
  SyntheticSpec truth = spec;
  const std::size_t n = spec.n_docs, m = spec.n_features;
  if (truth.theta_star.size() == 0) truth.theta_star = zscore(draw_normal(rng, n, 1.0));
  if (truth.beta_star.size() == 0) truth.beta_star = draw_normal(rng, m, spec.beta_sd);
  if (truth.psi_star.size() == 0) truth.psi_star = draw_normal(rng, m, spec.psi_sd);
  if (truth.alpha_star.size() == 0) {
    const Eigen::VectorXd z = draw_normal(rng, n, 1.0);
    truth.alpha_star.resize(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < truth.alpha_star.size(); ++i) {
      const double target = spec.expected_row_total * std::exp(spec.length_sd * z[i] - spec.length_sd * spec.length_sd / 2);
      const double base = (truth.psi_star.array() + truth.theta_star[i] * truth.beta_star.array()).exp().sum();
      truth.alpha_star[i] = std::log(target / base);
    }
  }

  Eigen::MatrixXd eta = truth.theta_star * truth.beta_star.transpose();
  eta.colwise() += truth.alpha_star;
  eta.rowwise() += truth.psi_star.transpose();

  std::vector<std::string> ids, labels;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("doc_" + std::to_string(i + 1));
  for (std::size_t j = 0; j < m; ++j) labels.push_back("f_" + std::to_string(j + 1));

  for (int attempt = 0; attempt < 10; ++attempt) {
    Eigen::MatrixXd y(eta.rows(), eta.cols());
    for (Eigen::Index j = 0; j < eta.cols(); ++j) {
      for (Eigen::Index i = 0; i < eta.rows(); ++i) {
        std::poisson_distribution<long long> draw(std::exp(std::min(eta(i, j), 30.0)));
        y(i, j) = static_cast<double>(draw(rng));
      }
    }
    if ((y.rowwise().sum().array() > 0).all() && (y.colwise().sum().array() > 0).all()) {
      return {CountMatrix::from_dense(ids, labels, y), truth};
    }
  }
  throw EstimationError("synthetic draws kept producing an all-zero row or column");
}

void CorpusSpec::validate() const {
  if (n_docs == 0) throw InputError("synthetic corpus needs at least one document");
  if (communities.size() < 2) throw InputError("synthetic corpus needs at least two planted communities");
  for (const auto& c : communities) {
    if (c.words.size() < 2) throw InputError("planted communities need at least two words");
  }
  if (!(phrases_per_doc > 0.0)) throw InputError("phrases_per_doc must be positive");
  if (noise_per_phrase < 0.0) throw InputError("noise_per_phrase must be non-negative");
  if (noise_per_phrase > 0.0 && noise_vocabulary == 0) throw InputError("noise needs a non-empty noise vocabulary");
  if (theta_star.size() != 0 && static_cast<std::size_t>(theta_star.size()) != n_docs) {
    throw InputError("theta_star has the wrong length");
  }
}

std::vector<PlantedCommunity> make_planted_communities(std::size_t count, std::size_t words_each, double beta,
                                                       std::size_t shared) {
  std::vector<PlantedCommunity> out;
  for (std::size_t c = 0; c < count; ++c) {
    PlantedCommunity community;
    for (std::size_t w = 0; w < words_each; ++w) community.words.push_back("c" + letters(c, 2) + "w" + letters(w, 2));
    const bool is_shared = c + shared >= count;
    community.beta = is_shared ? 0.0 : (c % 2 == 0 ? beta : -beta);
    out.push_back(std::move(community));
  }
  return out;
}

SyntheticCorpus generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  Rng rng = make_rng(spec.seed);
  SyntheticCorpus out;
  out.theta_star = spec.theta_star.size() ? spec.theta_star : zscore(draw_normal(rng, spec.n_docs, 1.0));

  std::vector<std::string> noise;
  for (std::size_t k = 0; k < spec.noise_vocabulary; ++k) noise.push_back("n" + letters(k, 3));

  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Document> docs;
  std::vector<double> weights(spec.communities.size());
  for (std::size_t i = 0; i < spec.n_docs; ++i) {
    const double theta = out.theta_star[static_cast<Eigen::Index>(i)];
    double total = 0.0;
    for (std::size_t c = 0; c < spec.communities.size(); ++c) {
      weights[c] = std::exp(spec.communities[c].psi + theta * spec.communities[c].beta);
      total += weights[c];
    }
    const double length = spec.phrases_per_doc * std::exp(spec.length_sd * normal(rng) - spec.length_sd * spec.length_sd / 2);
    std::poisson_distribution<int> phrase_count(length);
    std::poisson_distribution<int> noise_count(spec.noise_per_phrase > 0 ? spec.noise_per_phrase : 1.0);

    Document doc;
    doc.id = "doc_" + letters(i, 3);
    const int phrases = std::max(1, phrase_count(rng));
    for (int ph = 0; ph < phrases; ++ph) {
      double pick = unit(rng) * total;
      std::size_t c = 0;
      while (c + 1 < weights.size() && pick >= weights[c]) pick -= weights[c++];
      // A random ordering of a random subset of at least two member words.
      std::vector<std::string> members = spec.communities[c].words;
      shuffle(std::span(members), rng);
      const std::size_t run = 2 + uniform_index(rng, members.size() - 1);
      doc.tokens.insert(doc.tokens.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(run));
      if (spec.noise_per_phrase > 0) {
        const int extra = noise_count(rng);
        for (int e = 0; e < extra; ++e) doc.tokens.push_back(noise[uniform_index(rng, noise.size())]);
      }
    }
    for (std::size_t k = 0; k < doc.tokens.size(); ++k) {
      if (k) doc.text.push_back(' ');
      doc.text += doc.tokens[k];
    }
    doc.metadata["theta_star"] = csv::format_number(theta);
    docs.push_back(std::move(doc));
  }
  out.corpus = Corpus(std::move(docs));
  return out;
}

double pearson_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size() || a.size() < 2) throw InputError("correlation needs two vectors of equal length >= 2");
  const Eigen::ArrayXd da = a.array() - a.mean();
  const Eigen::ArrayXd db = b.array() - b.mean();
  const double denom = std::sqrt(da.square().sum() * db.square().sum());
  return denom > 0 ? (da * db).sum() / denom : 0.0;
}

double spearman_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return pearson_correlation(ranks(a), ranks(b));
}

RecoveryMetrics recovery_report(const Eigen::VectorXd& truth, const ScalingResult& result) {
  const Eigen::VectorXd& estimate = result.params.theta;
  if (truth.size() != estimate.size()) throw InputError("truth and estimate differ in length");
  RecoveryMetrics metrics;
  const double r = pearson_correlation(truth, estimate);
  metrics.sign_flipped = r < 0;
  const Eigen::VectorXd aligned = metrics.sign_flipped ? Eigen::VectorXd(-truth) : truth;
  metrics.pearson = std::abs(r);
  metrics.spearman = spearman_correlation(aligned, estimate);

  // Least-squares fit truth ~ a + b * estimate.
  const Eigen::ArrayXd de = estimate.array() - estimate.mean();
  const double slope = de.square().sum() > 0 ? (de * (aligned.array() - aligned.mean())).sum() / de.square().sum() : 0.0;
  const double intercept = aligned.mean() - slope * estimate.mean();
  const Eigen::ArrayXd residual = aligned.array() - intercept - slope * estimate.array();
  metrics.rmse = std::sqrt(residual.square().mean());

  if (result.has_intervals()) {
    std::size_t covered = 0;
    for (Eigen::Index i = 0; i < aligned.size(); ++i) {
      if (aligned[i] >= result.theta_ci_low[i] && aligned[i] <= result.theta_ci_high[i]) ++covered;
    }
    metrics.coverage = static_cast<double>(covered) / static_cast<double>(aligned.size());
  }
  return metrics;
}

namespace {

template <class Build>
BranchResult run_branch(Build&& build, const FitConfig& config) {
  BranchResult branch;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    TrimmedMatrix dtm = build();
    branch.features = dtm.matrix.cols();
    branch.trim = std::move(dtm.report);
    FitConfig local = config;
    // Anchors may have been trimmed away in this branch.
    if (local.anchor_low && !dtm.matrix.doc_ids().empty() &&
        std::find(dtm.matrix.doc_ids().begin(), dtm.matrix.doc_ids().end(), *local.anchor_low) == dtm.matrix.doc_ids().end()) {
      local.anchor_low.reset();
    }
    if (local.anchor_high &&
        std::find(dtm.matrix.doc_ids().begin(), dtm.matrix.doc_ids().end(), *local.anchor_high) == dtm.matrix.doc_ids().end()) {
      local.anchor_high.reset();
    }
    branch.fit = fit(dtm.matrix, local);
    branch.ok = true;
  } catch (const Error& e) {
    branch.error = e.what();
  }
  branch.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return branch;
}

}  // namespace

ComparisonReport compare_models(const Corpus& corpus, const CompareOptions& options) {
  if (corpus.empty()) throw EmptyStageError("empty corpus");
  ComparisonReport report;
  report.vocabulary_size = corpus.vocabulary().size();

  report.community = run_branch(
      [&] {
        CommunityStructure structure = detect_communities(corpus, options.community);
        report.communities = structure.partition.feature_communities().size();
        report.partition = structure.partition;
        return community_dtm(corpus, structure.partition, options.community.convention);
      },
      options.fit);
  report.unigram = run_branch([&] { return unigram_dtm(corpus, options.unigram_min_count); }, options.fit);

  if (report.community.ok && report.unigram.ok) {
    const auto& a = *report.community.fit;
    const auto& b = *report.unigram.fit;
    std::map<std::string, Eigen::Index> in_b;
    for (std::size_t k = 0; k < b.doc_ids.size(); ++k) in_b[b.doc_ids[k]] = static_cast<Eigen::Index>(k);
    std::vector<double> xa, xb;
    for (std::size_t k = 0; k < a.doc_ids.size(); ++k) {
      if (auto it = in_b.find(a.doc_ids[k]); it != in_b.end()) {
        xa.push_back(a.params.theta[static_cast<Eigen::Index>(k)]);
        xb.push_back(b.params.theta[it->second]);
      }
    }
    report.shared_documents = xa.size();
    if (xa.size() >= 2) {
      report.rank_correlation = spearman_correlation(Eigen::Map<Eigen::VectorXd>(xa.data(), static_cast<Eigen::Index>(xa.size())),
                                                     Eigen::Map<Eigen::VectorXd>(xb.data(), static_cast<Eigen::Index>(xb.size())));
    }
  }
  return report;
}

void write_comparison_csv(std::ostream& out, const ComparisonReport& report, const Corpus& corpus) {
  const auto lookup = [](const BranchResult& branch) {
    std::map<std::string, double> theta;
    if (branch.ok) {
      for (std::size_t k = 0; k < branch.fit->doc_ids.size(); ++k) {
        theta[branch.fit->doc_ids[k]] = branch.fit->params.theta[static_cast<Eigen::Index>(k)];
      }
    }
    return theta;
  };
  const auto community = lookup(report.community);
  const auto unigram = lookup(report.unigram);
  std::set<std::string> keys;
  for (const auto& doc : corpus) {
    for (const auto& [key, value] : doc.metadata) keys.insert(key);
  }
  std::vector<std::string> header{"doc_id", "theta_community", "theta_unigram"};
  header.insert(header.end(), keys.begin(), keys.end());
  csv::write_row(out, header);
  for (const auto& doc : corpus) {
    std::vector<std::string> row{doc.id};
    for (const auto* table : {&community, &unigram}) {
      auto it = table->find(doc.id);
      row.push_back(it == table->end() ? std::string() : csv::format_number(it->second));
    }
    for (const auto& key : keys) {
      auto it = doc.metadata.find(key);
      row.push_back(it == doc.metadata.end() ? std::string() : it->second);
    }
    csv::write_row(out, row);
  }
}

}  // namespace cfish
