#include "communityfish/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "communityfish/csv.hpp"
#include "communityfish/error.hpp"

namespace cfish {

Corpus::Corpus(std::vector<Document> documents) : documents_(std::move(documents)) {
  index_.reserve(documents_.size());
  for (std::size_t i = 0; i < documents_.size(); ++i) {
    const auto& doc = documents_[i];
    if (doc.id.empty()) throw InputError("document at position " + std::to_string(i + 1) + " has an empty id");
    if (!index_.emplace(doc.id, i).second) throw InputError("duplicate document id '" + doc.id + "'");
    for (const auto& token : doc.tokens) ++vocabulary_[token];
    token_count_ += doc.tokens.size();
  }
}

std::optional<std::size_t> Corpus::index_of(std::string_view id) const {
  if (auto it = index_.find(std::string(id)); it != index_.end()) return it->second;
  return std::nullopt;
}

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "jsonl") return CorpusFormat::jsonl;
  if (name == "text-directory" || name == "txt" || name == "dir") return CorpusFormat::text_directory;
  if (name == "csv") return CorpusFormat::csv;
  throw InputError("unknown corpus format '" + std::string(name) + "' (expected jsonl, text-directory or csv)");
}

std::string_view to_string(CorpusFormat format) {
  switch (format) {
    case CorpusFormat::jsonl: return "jsonl";
    case CorpusFormat::text_directory: return "text-directory";
    case CorpusFormat::csv: return "csv";
  }
  return "unknown";
}

namespace {

std::string metadata_value(const nlohmann::json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_null()) return {};
  return value.dump();
}

Corpus read_jsonl(std::istream& in, std::string_view origin) {
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError(std::string(origin) + ":" + std::to_string(line_no) + ": malformed JSON record (" +
                       e.what() + ")");
    }
    if (!record.is_object()) {
      throw InputError(std::string(origin) + ":" + std::to_string(line_no) + ": record is not a JSON object");
    }
    auto text = record.find("text");
    if (text == record.end() || !text->is_string()) {
      throw InputError(std::string(origin) + ":" + std::to_string(line_no) + ": missing string field 'text'");
    }
    Document doc;
    doc.text = text->get<std::string>();
    if (auto id = record.find("id"); id != record.end() && !id->is_null()) {
      doc.id = metadata_value(*id);
    } else {
      doc.id = std::to_string(line_no);
    }
    for (const auto& [key, value] : record.items()) {
      if (key == "text" || key == "id") continue;
      doc.metadata[key] = metadata_value(value);
    }
    docs.push_back(std::move(doc));
  }
  if (docs.empty()) throw InputError(std::string(origin) + ": empty corpus");
  return Corpus(std::move(docs));
}

Corpus read_csv(std::istream& in, std::string_view origin) {
  std::size_t line = 1;
  auto header = csv::read_record(in, line);
  if (!header) throw InputError(std::string(origin) + ": empty corpus");
  const auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    auto it = std::find(header->begin(), header->end(), name);
    if (it == header->end()) return std::nullopt;
    return static_cast<std::size_t>(it - header->begin());
  };
  const auto text_col = column("text");
  if (!text_col) throw InputError(std::string(origin) + ":1: header has no 'text' column");
  const auto id_col = column("id");

  std::vector<Document> docs;
  while (true) {
    const std::size_t record_line = line;
    auto record = csv::read_record(in, line);
    if (!record) break;
    if (record->size() == 1 && (*record)[0].empty()) continue;
    if (record->size() != header->size()) {
      throw InputError(std::string(origin) + ":" + std::to_string(record_line) + ": expected " +
                       std::to_string(header->size()) + " fields, found " + std::to_string(record->size()));
    }
    Document doc;
    doc.text = (*record)[*text_col];
    doc.id = id_col ? (*record)[*id_col] : std::to_string(docs.size() + 1);
    for (std::size_t c = 0; c < header->size(); ++c) {
      if (c == *text_col || (id_col && c == *id_col)) continue;
      doc.metadata[(*header)[c]] = (*record)[c];
    }
    docs.push_back(std::move(doc));
  }
  if (docs.empty()) throw InputError(std::string(origin) + ": empty corpus");
  return Corpus(std::move(docs));
}

Corpus read_text_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw InputError(dir.string() + ": not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Document> docs;
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw InputError(file.string() + ": cannot open");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    Document doc;
    doc.id = file.stem().string();
    doc.text = buffer.str();
    doc.metadata["filename"] = file.filename().string();
    docs.push_back(std::move(doc));
  }
  if (docs.empty()) throw InputError(dir.string() + ": empty corpus (no .txt files)");
  return Corpus(std::move(docs));
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& source, CorpusFormat format) {
  if (!std::filesystem::exists(source)) throw InputError(source.string() + ": no such file or directory");
  if (format == CorpusFormat::text_directory) return read_text_directory(source);
  std::ifstream in(source, std::ios::binary);
  if (!in) throw InputError(source.string() + ": cannot open");
  return load_corpus(in, format, source.string());
}

Corpus load_corpus(std::istream& in, CorpusFormat format, std::string_view origin) {
  switch (format) {
    case CorpusFormat::jsonl: return read_jsonl(in, origin);
    case CorpusFormat::csv: return read_csv(in, origin);
    case CorpusFormat::text_directory: break;
  }
  throw InputError("text-directory corpora must be loaded from a path");
}

std::unordered_set<std::string> read_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string() + ": cannot open stopword file");
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) words.insert(line);
  }
  return words;
}

LemmaTable read_lemma_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string() + ": cannot open lemma table");
  LemmaTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected 'surface<TAB>lemma'");
    }
    table[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return table;
}

std::uint64_t BigramCounts::max_count() const {
  std::uint64_t best = 0;
  for (const auto& [pair, count] : pairs) best = std::max(best, count);
  return best;
}

WordPair make_pair_key(std::string_view a, std::string_view b) {
  if (b < a) std::swap(a, b);
  return {std::string(a), std::string(b)};
}

BigramCounts count_bigrams(const Corpus& corpus) {
  BigramCounts counts;
  for (const auto& doc : corpus) {
    const auto& tokens = doc.tokens;
    auto boundary = doc.sentence_starts.begin();
    for (std::size_t k = 0; k + 1 < tokens.size(); ++k) {
      while (boundary != doc.sentence_starts.end() && *boundary <= k) ++boundary;
      if (boundary != doc.sentence_starts.end() && *boundary == k + 1) continue;
      if (tokens[k] == tokens[k + 1]) continue;
      ++counts.pairs[make_pair_key(tokens[k], tokens[k + 1])];
    }
  }
  return counts;
}

BigramCounts filter_bigrams(const BigramCounts& counts, std::uint64_t min_count, bool strict_greater) {
  if (min_count == 0) throw InputError("bigram threshold must be a positive integer");
  BigramCounts out;
  out.threshold = strict_greater ? min_count + 1 : min_count;
  for (const auto& [pair, count] : counts.pairs) {
    if (count >= out.threshold) out.pairs.emplace(pair, count);
  }
  return out;
}

}  // namespace cfish
