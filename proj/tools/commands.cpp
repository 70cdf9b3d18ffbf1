#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>

#include <Eigen/Core>
#include <json.hpp>

#include "communityfish/community_graph.hpp"
#include "communityfish/csv.hpp"
#include "communityfish/error.hpp"
#include "communityfish/feature_matrix.hpp"
#include "communityfish/pipeline.hpp"
#include "communityfish/poisson_scaler.hpp"
#include "communityfish/rng.hpp"
#include "communityfish/synthbench.hpp"

#ifndef COMMUNITYFISH_VERSION
#define COMMUNITYFISH_VERSION "unknown"
#endif

namespace cfish::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Facts collected while a command runs, for the manifest.
struct RunRecord {
  std::optional<std::size_t> communities;
  std::optional<std::pair<std::size_t, std::size_t>> matrix;
  std::vector<std::string> outputs;
};

class Writer {
 public:
  Writer(const fs::path& dir, RunRecord& record) : dir_(dir), record_(record) {}

  template <class Fn>
  void file(const std::string& name, Fn&& fill) {
    const fs::path path = dir_ / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    fill(out);
    if (!out) throw InputError("failed writing '" + path.string() + "'");
    record_.outputs.push_back(name);
  }

  void json_file(const std::string& name, const json& value) {
    file(name, [&](std::ostream& out) { out << value.dump(2) << '\n'; });
  }

 private:
  fs::path dir_;
  RunRecord& record_;
};

json to_json(const std::vector<std::string>& v) { return json(v); }

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

Corpus prepare_corpus(const RunConfig& config, std::ostream& log) {
  if (config.input.empty()) throw InputError("no input corpus given (set 'input' or pass --input)");
  Corpus raw = load_corpus(config.input, config.format);
  Corpus tokens = tokenize(raw, config.tokenizer());
  if (config.lemmas) tokens = apply_lemmas(tokens, read_lemma_table(*config.lemmas));
  log << "loaded " << tokens.size() << " documents, " << tokens.token_count() << " tokens, "
      << tokens.vocabulary().size() << " types\n";
  return tokens;
}

std::map<std::string, std::map<std::string, std::string>> metadata_of(const Corpus& corpus) {
  std::map<std::string, std::map<std::string, std::string>> out;
  for (const auto& doc : corpus) out[doc.id] = doc.metadata;
  return out;
}

json graph_stats(const CommunityStructure& s, const Corpus& corpus, const RunConfig& config) {
  const auto features = s.partition.feature_communities();
  std::vector<std::size_t> sizes;
  json communities = json::array();
  for (std::size_t k = 0; k < features.size(); ++k) {
    const auto& members = s.partition.members()[features[k]];
    sizes.push_back(members.size());
    communities.push_back({{"community_id", k + 1},
                           {"size", members.size()},
                           {"label", community_label(k + 1, members, corpus)}});
  }
  std::vector<std::size_t> sorted = sizes;
  std::sort(sorted.begin(), sorted.end());
  json distribution = json::object();
  if (!sorted.empty()) {
    distribution = {{"min", sorted.front()},
                    {"median", sorted[sorted.size() / 2]},
                    {"max", sorted.back()},
                    {"sizes", sizes}};
  }
  return {{"min_bigram_count", config.min_bigram_count},
          {"strict_greater", config.strict_greater},
          {"bigram_pairs", s.bigrams.pairs.size()},
          {"nodes", s.graph.num_nodes()},
          {"edges", s.graph.num_edges()},
          {"total_weight", s.graph.total_weight()},
          {"clustering", to_string(config.clustering)},
          {"seed", config.seed},
          {"modularity", s.stats.modularity},
          {"levels", s.stats.levels},
          {"moves", s.stats.moves},
          {"communities_total", s.partition.num_communities()},
          {"min_community_size", config.min_community_size},
          {"K", features.size()},
          {"size_distribution", distribution},
          {"communities", communities}};
}

CommunityStructure run_communities(const Corpus& corpus, const RunConfig& config, Writer& writer, RunRecord& record,
                                   std::ostream& log) {
  if (config.clustering == ClusteringBackend::leiden && !leiden_available()) {
    throw InputError("clustering backend 'leiden' not built");
  }
  CommunityStructure s = detect_communities(corpus, config.community_options());
  record.communities = s.partition.feature_communities().size();
  log << "graph: " << s.graph.num_nodes() << " words, " << s.graph.num_edges() << " edges; " << *record.communities
      << " communities, Q = " << s.stats.modularity << '\n';
  writer.file("communities.csv", [&](std::ostream& out) { write_partition_csv(out, s.partition); });
  writer.json_file("graph_stats.json", graph_stats(s, corpus, config));
  return s;
}

ScalingResult add_uncertainty(const CountMatrix& matrix, ScalingResult result, const RunConfig& config,
                              std::ostream& log) {
  switch (config.se) {
    case SeMethod::none:
      return result;
    case SeMethod::analytic:
      apply_analytic_errors(matrix, result, config.level);
      return result;
    case SeMethod::bootstrap: {
      BootstrapConfig boot;
      boot.replicates = config.replicates;
      boot.seed = config.seed;
      boot.level = config.level;
      boot.threads = config.threads;
      boot.fit = config.fit_config();
      log << "bootstrap: " << config.replicates << " replicates\n";
      return bootstrap(matrix, result, boot);
    }
  }
  return result;
}

json fit_summary(const ScalingResult& r) {
  return {{"converged", r.converged},
          {"iterations", r.iterations},
          {"log_likelihood", r.log_likelihood()},
          {"dispersion", number_or_null(r.dispersion)},
          {"runtime_seconds", r.runtime_seconds},
          {"clamp_activated", r.clamp_activated},
          {"warnings", to_json(r.warnings)}};
}

json fit_report(const ScalingResult& r, const TrimReport& trim, const RunConfig& config) {
  json report = fit_summary(r);
  report["model"] = config.baseline ? "wordfish-unigram" : "communityfish";
  report["documents"] = r.doc_ids.size();
  report["features"] = r.feature_labels.size();
  report["loglik_trace"] = r.loglik_trace;
  report["anchors"] = {{"low", r.doc_ids[r.anchor_low]}, {"high", r.doc_ids[r.anchor_high]}};
  report["uncertainty"] = {{"method", to_string(r.uncertainty)}, {"level", config.level}};
  if (r.uncertainty == UncertaintyMethod::bootstrap) {
    report["uncertainty"]["replicates_requested"] = config.replicates;
    report["uncertainty"]["replicates_used"] = r.bootstrap_replicates;
    report["uncertainty"]["failures"] = r.bootstrap_failures;
    report["uncertainty"]["unconverged"] = r.bootstrap_unconverged;
  }
  report["dropped_documents"] = trim.dropped_documents;
  report["dropped_features"] = trim.dropped_features;
  return report;
}

void cmd_communities(const RunConfig& config, Writer& writer, RunRecord& record, std::ostream& log) {
  const Corpus corpus = prepare_corpus(config, log);
  run_communities(corpus, config, writer, record, log);
}

void cmd_scale(const RunConfig& config, Writer& writer, RunRecord& record, std::ostream& log) {
  const Corpus corpus = prepare_corpus(config, log);
  TrimmedMatrix dtm;
  if (config.baseline) {
    dtm = unigram_dtm(corpus, config.unigram_min_count);
  } else {
    const CommunityStructure s = run_communities(corpus, config, writer, record, log);
    dtm = community_dtm(corpus, s.partition, config.dtm);
  }
  record.matrix = {dtm.matrix.rows(), dtm.matrix.cols()};
  log << "matrix: " << dtm.matrix.rows() << " x " << dtm.matrix.cols() << '\n';

  ScalingResult result = fit(dtm.matrix, config.fit_config());
  log << "fit: " << (result.converged ? "converged" : "not converged") << " after " << result.iterations
      << " rounds, log-likelihood " << result.log_likelihood() << '\n';
  result = add_uncertainty(dtm.matrix, std::move(result), config, log);

  const auto metadata = metadata_of(corpus);
  writer.file("positions.csv", [&](std::ostream& out) { write_positions_csv(out, result, metadata); });
  writer.file("features.csv", [&](std::ostream& out) { write_features_csv(out, result); });
  writer.json_file("fit_report.json", fit_report(result, dtm.report, config));
}

json branch_json(const BranchResult& b) {
  json out = {{"ok", b.ok}, {"features", b.features}, {"runtime_seconds", b.runtime_seconds}};
  if (!b.ok) {
    out["error"] = b.error;
    return out;
  }
  out.update(fit_summary(*b.fit));
  out["documents"] = b.fit->doc_ids.size();
  out["dropped_documents"] = b.trim.dropped_documents;
  return out;
}

void cmd_compare(const RunConfig& config, Writer& writer, RunRecord& record, std::ostream& log) {
  const Corpus corpus = prepare_corpus(config, log);
  CompareOptions options;
  options.community = config.community_options();
  options.unigram_min_count = config.unigram_min_count;
  options.fit = config.fit_config();
  const ComparisonReport report = compare_models(corpus, options);
  if (!report.community.ok && !report.unigram.ok) {
    throw EstimationError("both branches failed: " + report.community.error + "; " + report.unigram.error);
  }
  record.communities = report.communities;
  if (report.community.ok) {
    const auto& fit = *report.community.fit;
    record.matrix = {fit.doc_ids.size(), fit.feature_labels.size()};
  }
  log << "community branch: " << (report.community.ok ? "ok" : report.community.error) << "; unigram branch: "
      << (report.unigram.ok ? "ok" : report.unigram.error) << '\n';

  writer.file("comparison.csv", [&](std::ostream& out) { write_comparison_csv(out, report, corpus); });
  json summary = {{"documents", corpus.size()},
                  {"vocabulary_size", report.vocabulary_size},
                  {"communities", report.communities},
                  {"community", branch_json(report.community)},
                  {"unigram", branch_json(report.unigram)},
                  {"rank_correlation", number_or_null(report.rank_correlation)},
                  {"shared_documents", report.shared_documents}};
  if (report.partition) {
    writer.file("communities.csv", [&](std::ostream& out) { write_partition_csv(out, *report.partition); });
  }
  writer.json_file("report.json", summary);
}

void cmd_simulate(const RunConfig& config, Writer& writer, RunRecord& record, std::ostream& log) {
  json replications = json::array();
  double min_pearson = 1.0, sum_pearson = 0.0;
  std::size_t covered_docs = 0, total_docs = 0;
  for (std::size_t r = 0; r < config.replications; ++r) {
    SyntheticSpec spec;
    spec.n_docs = config.n_docs;
    spec.n_features = config.n_features;
    spec.expected_row_total = config.expected_row_total;
    spec.beta_sd = config.beta_sd;
    spec.psi_sd = config.psi_sd;
    spec.length_sd = config.length_sd;
    spec.seed = mix_seed(config.seed, r);
    const SyntheticMatrix data = generate_matrix(spec);
    record.matrix = {data.matrix.rows(), data.matrix.cols()};

    RunConfig local = config;
    local.seed = spec.seed;
    ScalingResult result = fit(data.matrix, local.fit_config());
    result = add_uncertainty(data.matrix, std::move(result), local, log);
    const RecoveryMetrics m = recovery_report(data.truth.theta_star, result);
    log << "replication " << r + 1 << ": pearson " << m.pearson << '\n';

    min_pearson = std::min(min_pearson, m.pearson);
    sum_pearson += m.pearson;
    json entry = {{"seed", spec.seed},
                  {"pearson", m.pearson},
                  {"spearman", m.spearman},
                  {"rmse", m.rmse},
                  {"sign_flipped", m.sign_flipped},
                  {"coverage", m.coverage ? json(*m.coverage) : json(nullptr)}};
    entry.update(fit_summary(result));
    replications.push_back(entry);
    if (m.coverage) {
      covered_docs += static_cast<std::size_t>(std::lround(*m.coverage * static_cast<double>(spec.n_docs)));
      total_docs += spec.n_docs;
    }

    if (r == 0) {
      std::map<std::string, std::map<std::string, std::string>> metadata;
      for (std::size_t i = 0; i < result.doc_ids.size(); ++i) {
        metadata[result.doc_ids[i]]["theta_star"] = csv::format_number(data.truth.theta_star[static_cast<Eigen::Index>(i)]);
      }
      writer.file("positions.csv", [&](std::ostream& out) { write_positions_csv(out, result, metadata); });
      writer.file("features.csv", [&](std::ostream& out) { write_features_csv(out, result); });
    }
  }
  json report = {{"n_docs", config.n_docs},
                 {"n_features", config.n_features},
                 {"expected_row_total", config.expected_row_total},
                 {"replications", replications},
                 {"min_pearson", min_pearson},
                 {"mean_pearson", sum_pearson / static_cast<double>(config.replications)},
                 {"coverage", total_docs ? json(static_cast<double>(covered_docs) / static_cast<double>(total_docs))
                                         : json(nullptr)}};
  writer.json_file("report.json", report);
}

}  // namespace

Command parse_command(std::string_view name) {
  if (name == "communities") return Command::communities;
  if (name == "scale") return Command::scale;
  if (name == "compare") return Command::compare;
  if (name == "simulate") return Command::simulate;
  throw InputError("unknown command '" + std::string(name) + "'");
}

std::string_view to_string(Command command) {
  switch (command) {
    case Command::communities: return "communities";
    case Command::scale: return "scale";
    case Command::compare: return "compare";
    case Command::simulate: return "simulate";
  }
  return "";
}

int run_command(Command command, const RunConfig& config, std::ostream& log, std::ostream& err) {
  RunRecord record;
  int status = 0;
  std::string message;
  bool have_dir = false;
  try {
    std::error_code ec;
    fs::create_directories(config.out, ec);
    if (ec) throw InputError("cannot create output directory '" + config.out.string() + "': " + ec.message());
    have_dir = true;
    Writer writer(config.out, record);
    switch (command) {
      case Command::communities: cmd_communities(config, writer, record, log); break;
      case Command::scale: cmd_scale(config, writer, record, log); break;
      case Command::compare: cmd_compare(config, writer, record, log); break;
      case Command::simulate: cmd_simulate(config, writer, record, log); break;
    }
  } catch (const EmptyStageError& e) {
    status = 2;
    message = e.what();
  } catch (const EstimationError& e) {
    status = 3;
    message = e.what();
  } catch (const std::exception& e) {
    status = 1;
    message = e.what();
  }
  if (status != 0) err << "error: " << message << '\n';
  if (!have_dir) return status;

  json settings = json::object();
  for (const auto& [key, value] : config.entries()) settings[key] = value;
  json manifest = {{"command", to_string(command)},
                   {"versions",
                    {{"communityfish", COMMUNITYFISH_VERSION},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)}}},
                   {"config", settings},
                   {"config_hash", config_hash(config)},
                   {"seed", config.seed},
                   {"K", record.communities ? json(*record.communities) : json(nullptr)},
                   {"matrix", record.matrix ? json{{"rows", record.matrix->first}, {"cols", record.matrix->second}}
                                            : json(nullptr)},
                   {"outputs", record.outputs},
                   {"exit_status", status}};
  if (status != 0) manifest["error"] = message;
  std::ofstream out(config.out / "manifest.json", std::ios::binary);
  if (!out) {
    err << "error: cannot write manifest in '" << config.out.string() << "'\n";
    return status ? status : 1;
  }
  out << manifest.dump(2) << '\n';
  return status;
}

}  // namespace cfish::cli
