#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace cfish {

struct Document {
  std::string id;
  std::map<std::string, std::string> metadata;
  std::string text;
  std::vector<std::string> tokens;
  // Token indices at which a new sentence begins (excluding 0). Empty unless
  // a sentence pattern was configured; bigrams never cross these boundaries.
  std::vector<std::size_t> sentence_starts;
};

// Ordered, immutable collection of documents. Document order is the input
// order and defines the default direction anchors of the scaling model.
class Corpus {
 public:
  Corpus() = default;
  // Throws InputError on an empty or duplicate id.
  explicit Corpus(std::vector<Document> documents);

  const std::vector<Document>& documents() const { return documents_; }
  std::size_t size() const { return documents_.size(); }
  bool empty() const { return documents_.empty(); }
  const Document& operator[](std::size_t i) const { return documents_[i]; }
  auto begin() const { return documents_.begin(); }
  auto end() const { return documents_.end(); }

  // Distinct tokens with their summed occurrences across all documents.
  const std::map<std::string, std::uint64_t>& vocabulary() const { return vocabulary_; }
  std::uint64_t token_count() const { return token_count_; }
  std::optional<std::size_t> index_of(std::string_view id) const;

 private:
  std::vector<Document> documents_;
  std::map<std::string, std::uint64_t> vocabulary_;
  std::unordered_map<std::string, std::size_t> index_;
  std::uint64_t token_count_ = 0;
};

enum class CorpusFormat { jsonl, text_directory, csv };

CorpusFormat parse_corpus_format(std::string_view name);
std::string_view to_string(CorpusFormat format);

Corpus load_corpus(const std::filesystem::path& source, CorpusFormat format);
// Stream variants for jsonl and csv; `origin` is used in error messages.
Corpus load_corpus(std::istream& in, CorpusFormat format, std::string_view origin = "<stream>");

struct TokenizerConfig {
  bool lowercase = true;
  bool drop_numbers = true;
  std::unordered_set<std::string> stopwords;
  // ECMAScript regex matching sentence separators, e.g. "[.!?]+\\s". Unset
  // means document-level adjacency.
  std::optional<std::string> sentence_pattern;
};

using LemmaTable = std::unordered_map<std::string, std::string>;

// Lowercased Unicode-aware word tokens. Runs of letters and digits form a
// token; an apostrophe between two word characters stays inside the token.
std::vector<std::string> tokenize_text(std::string_view text, const TokenizerConfig& rules);
Document tokenize(Document doc, const TokenizerConfig& rules);
Document apply_lemmas(Document doc, const LemmaTable& lemma_table);

Corpus tokenize(const Corpus& corpus, const TokenizerConfig& rules);
Corpus apply_lemmas(const Corpus& corpus, const LemmaTable& lemma_table);

std::unordered_set<std::string> read_stopwords(const std::filesystem::path& path);
LemmaTable read_lemma_table(const std::filesystem::path& path);

// Unordered word pair, stored with first < second.
using WordPair = std::pair<std::string, std::string>;

struct BigramCounts {
  std::map<WordPair, std::uint64_t> pairs;
  std::uint64_t threshold = 1;

  bool empty() const { return pairs.empty(); }
  std::uint64_t max_count() const;
};

WordPair make_pair_key(std::string_view a, std::string_view b);

// Adjacent token pairs within each document (and sentence, when configured),
// merged across orientation. Self pairs are excluded.
BigramCounts count_bigrams(const Corpus& corpus);

// Keeps pairs with count >= min_count, or > min_count when strict_greater.
// Throws InputError when min_count is 0.
BigramCounts filter_bigrams(const BigramCounts& counts, std::uint64_t min_count,
                            bool strict_greater = false);

}  // namespace cfish
