#include "run_config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>

#include "communityfish/error.hpp"

namespace cfish::cli {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw InputError("config key '" + key + "': invalid value '" + value + "' (expected " + expected + ")");
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, value, "a number");
  return out;
}

template <class T>
T parse_positive(const std::string& key, const std::string& value) {
  const T out = parse_number<T>(key, value);
  if (!(out > T{})) bad_value(key, value, "a positive number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value, "true or false");
}

std::optional<std::string> optional_text(const std::string& value) {
  if (value.empty()) return std::nullopt;
  return value;
}

std::string show(bool v) { return v ? "true" : "false"; }
std::string show(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}
template <class T>
std::string show(const std::optional<T>& v) {
  if (!v) return {};
  if constexpr (std::is_same_v<T, std::filesystem::path>) {
    return v->string();
  } else {
    return *v;
  }
}

}  // namespace

std::string_view to_string(SeMethod method) {
  switch (method) {
    case SeMethod::bootstrap: return "bootstrap";
    case SeMethod::analytic: return "analytic";
    case SeMethod::none: return "none";
  }
  return "none";
}

void RunConfig::set(const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  using Setter = std::function<void(RunConfig&, const std::string&)>;
  static const std::map<std::string, Setter> setters = {
      {"input", [](RunConfig& c, const std::string& v) { c.input = v; }},
      {"format",
       [](RunConfig& c, const std::string& v) { c.format = parse_corpus_format(v); }},
      {"stopwords", [](RunConfig& c, const std::string& v) { c.stopwords = optional_text(v); }},
      {"lemmas", [](RunConfig& c, const std::string& v) { c.lemmas = optional_text(v); }},
      {"sentence_pattern", [](RunConfig& c, const std::string& v) { c.sentence_pattern = optional_text(v); }},
      {"lowercase", [](RunConfig& c, const std::string& v) { c.lowercase = parse_bool("lowercase", v); }},
      {"drop_numbers", [](RunConfig& c, const std::string& v) { c.drop_numbers = parse_bool("drop_numbers", v); }},
      {"min_bigram_count",
       [](RunConfig& c, const std::string& v) { c.min_bigram_count = parse_positive<std::uint64_t>("min_bigram_count", v); }},
      {"strict_greater", [](RunConfig& c, const std::string& v) { c.strict_greater = parse_bool("strict_greater", v); }},
      {"clustering", [](RunConfig& c, const std::string& v) { c.clustering = parse_clustering_backend(v); }},
      {"min_community_size",
       [](RunConfig& c, const std::string& v) { c.min_community_size = parse_positive<std::size_t>("min_community_size", v); }},
      {"dtm_convention", [](RunConfig& c, const std::string& v) { c.dtm = parse_dtm_convention(v); }},
      {"unigram_min_count",
       [](RunConfig& c, const std::string& v) { c.unigram_min_count = parse_positive<std::uint64_t>("unigram_min_count", v); }},
      {"baseline", [](RunConfig& c, const std::string& v) { c.baseline = parse_bool("baseline", v); }},
      {"tol", [](RunConfig& c, const std::string& v) { c.tol = parse_positive<double>("tol", v); }},
      {"max_iter", [](RunConfig& c, const std::string& v) { c.max_iter = parse_positive<int>("max_iter", v); }},
      {"anchor_low", [](RunConfig& c, const std::string& v) { c.anchor_low = optional_text(v); }},
      {"anchor_high", [](RunConfig& c, const std::string& v) { c.anchor_high = optional_text(v); }},
      {"clamp", [](RunConfig& c, const std::string& v) { c.clamp = parse_positive<double>("clamp", v); }},
      {"beta_prior_sd",
       [](RunConfig& c, const std::string& v) {
         c.beta_prior_sd = parse_number<double>("beta_prior_sd", v);
         if (!(c.beta_prior_sd >= 0.0)) bad_value("beta_prior_sd", v, "a number >= 0");
       }},
      {"se",
       [](RunConfig& c, const std::string& v) {
         if (v == "bootstrap") c.se = SeMethod::bootstrap;
         else if (v == "analytic") c.se = SeMethod::analytic;
         else if (v == "none") c.se = SeMethod::none;
         else bad_value("se", v, "bootstrap, analytic or none");
       }},
      {"replicates", [](RunConfig& c, const std::string& v) { c.replicates = parse_positive<std::size_t>("replicates", v); }},
      {"level",
       [](RunConfig& c, const std::string& v) {
         c.level = parse_number<double>("level", v);
         if (!(c.level > 0 && c.level < 1)) bad_value("level", v, "a value in (0, 1)");
       }},
      {"threads", [](RunConfig& c, const std::string& v) { c.threads = parse_number<unsigned>("threads", v); }},
      {"n_docs", [](RunConfig& c, const std::string& v) { c.n_docs = parse_positive<std::size_t>("n_docs", v); }},
      {"n_features", [](RunConfig& c, const std::string& v) { c.n_features = parse_positive<std::size_t>("n_features", v); }},
      {"expected_row_total",
       [](RunConfig& c, const std::string& v) { c.expected_row_total = parse_positive<double>("expected_row_total", v); }},
      {"beta_sd", [](RunConfig& c, const std::string& v) { c.beta_sd = parse_number<double>("beta_sd", v); }},
      {"psi_sd", [](RunConfig& c, const std::string& v) { c.psi_sd = parse_number<double>("psi_sd", v); }},
      {"length_sd", [](RunConfig& c, const std::string& v) { c.length_sd = parse_number<double>("length_sd", v); }},
      {"replications",
       [](RunConfig& c, const std::string& v) { c.replications = parse_positive<std::size_t>("replications", v); }},
      {"seed", [](RunConfig& c, const std::string& v) { c.seed = parse_number<std::uint64_t>("seed", v); }},
      {"out", [](RunConfig& c, const std::string& v) { c.out = v; }},
  };
  auto it = setters.find(key);
  if (it == setters.end()) throw InputError("unknown config key '" + key + "'");
  try {
    it->second(*this, value);
  } catch (const InputError& e) {
    const std::string what = e.what();
    if (what.rfind("config key", 0) == 0) throw;
    throw InputError("config key '" + key + "': " + what);
  }
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
  std::map<std::string, std::string> all = {
      {"input", input.string()},
      {"format", std::string(to_string(format))},
      {"stopwords", show(stopwords)},
      {"lemmas", show(lemmas)},
      {"sentence_pattern", show(sentence_pattern)},
      {"lowercase", show(lowercase)},
      {"drop_numbers", show(drop_numbers)},
      {"min_bigram_count", std::to_string(min_bigram_count)},
      {"strict_greater", show(strict_greater)},
      {"clustering", std::string(to_string(clustering))},
      {"min_community_size", std::to_string(min_community_size)},
      {"dtm_convention", std::string(to_string(dtm))},
      {"unigram_min_count", std::to_string(unigram_min_count)},
      {"baseline", show(baseline)},
      {"tol", show(tol)},
      {"max_iter", std::to_string(max_iter)},
      {"anchor_low", show(anchor_low)},
      {"anchor_high", show(anchor_high)},
      {"clamp", show(clamp)},
      {"beta_prior_sd", show(beta_prior_sd)},
      {"se", std::string(to_string(se))},
      {"replicates", std::to_string(replicates)},
      {"level", show(level)},
      {"threads", std::to_string(threads)},
      {"n_docs", std::to_string(n_docs)},
      {"n_features", std::to_string(n_features)},
      {"expected_row_total", show(expected_row_total)},
      {"beta_sd", show(beta_sd)},
      {"psi_sd", show(psi_sd)},
      {"length_sd", show(length_sd)},
      {"replications", std::to_string(replications)},
      {"seed", std::to_string(seed)},
      {"out", out.string()},
  };
  return {all.begin(), all.end()};
}

CommunityOptions RunConfig::community_options() const {
  CommunityOptions options;
  options.min_bigram_count = min_bigram_count;
  options.strict_greater = strict_greater;
  options.clustering = clustering;
  options.min_community_size = min_community_size;
  options.convention = dtm;
  options.seed = seed;
  return options;
}

FitConfig RunConfig::fit_config() const {
  FitConfig config;
  config.tol = tol;
  config.max_iter = max_iter;
  config.anchor_low = anchor_low;
  config.anchor_high = anchor_high;
  config.linear_predictor_clamp = clamp;
  config.beta_prior_sd = beta_prior_sd;
  config.seed = seed;
  return config;
}

TokenizerConfig RunConfig::tokenizer() const {
  TokenizerConfig rules;
  rules.lowercase = lowercase;
  rules.drop_numbers = drop_numbers;
  rules.sentence_pattern = sentence_pattern;
  if (stopwords) rules.stopwords = read_stopwords(*stopwords);
  return rules;
}

std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read config file '" + path.string() + "'");
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw InputError(path.string() + ":" + std::to_string(number) + ": expected key = value");
    }
    out.emplace_back(trim(std::string_view(body).substr(0, eq)), trim(std::string_view(body).substr(eq + 1)));
  }
  return out;
}

std::string config_hash(const RunConfig& config) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const auto& [key, value] : config.entries()) {
    for (char c : key + "=" + value + "\n") {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace cfish::cli
