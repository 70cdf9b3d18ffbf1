#include "communityfish/feature_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <tuple>
#include <unordered_map>

#include "communityfish/csv.hpp"
#include "communityfish/error.hpp"

namespace cfish {

CountMatrix::CountMatrix(std::vector<std::string> doc_ids, std::vector<std::string> feature_labels,
                         std::vector<MatrixEntry> entries)
    : doc_ids_(std::move(doc_ids)), feature_labels_(std::move(feature_labels)) {
  for (const auto& e : entries) {
    if (e.row >= doc_ids_.size() || e.col >= feature_labels_.size()) {
      throw InputError("matrix entry (" + std::to_string(e.row) + ", " + std::to_string(e.col) + ") out of range");
    }
  }
  std::sort(entries.begin(), entries.end(),
            [](const MatrixEntry& a, const MatrixEntry& b) { return std::tie(a.row, a.col) < std::tie(b.row, b.col); });
  row_offsets_.assign(doc_ids_.size() + 1, 0);
  for (std::size_t k = 0; k < entries.size();) {
    const auto& e = entries[k];
    std::uint64_t total = 0;
    std::size_t next = k;
    while (next < entries.size() && entries[next].row == e.row && entries[next].col == e.col) {
      total += entries[next].count;
      ++next;
    }
    if (total > 0) {
      col_index_.push_back(e.col);
      values_.push_back(total);
      ++row_offsets_[e.row + 1];
    }
    k = next;
  }
  for (std::size_t r = 0; r < doc_ids_.size(); ++r) row_offsets_[r + 1] += row_offsets_[r];
}

CountMatrix CountMatrix::from_dense(std::vector<std::string> doc_ids, std::vector<std::string> feature_labels,
                                    const std::vector<std::vector<std::uint64_t>>& rows) {
  if (rows.size() != doc_ids.size()) throw InputError("row count does not match document ids");
  std::vector<MatrixEntry> entries;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != feature_labels.size()) throw InputError("row width does not match feature labels");
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      if (rows[i][j] > 0) entries.push_back({i, j, rows[i][j]});
    }
  }
  return CountMatrix(std::move(doc_ids), std::move(feature_labels), std::move(entries));
}

CountMatrix CountMatrix::from_dense(std::vector<std::string> doc_ids, std::vector<std::string> feature_labels,
                                    const Eigen::MatrixXd& counts) {
  if (static_cast<std::size_t>(counts.rows()) != doc_ids.size() ||
      static_cast<std::size_t>(counts.cols()) != feature_labels.size()) {
    throw InputError("count matrix dimensions do not match labels");
  }
  std::vector<MatrixEntry> entries;
  for (Eigen::Index i = 0; i < counts.rows(); ++i) {
    for (Eigen::Index j = 0; j < counts.cols(); ++j) {
      const double v = counts(i, j);
      if (v < 0.0 || v != std::floor(v)) throw InputError("counts must be non-negative integers");
      if (v > 0.0) {
        entries.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), static_cast<std::uint64_t>(v)});
      }
    }
  }
  return CountMatrix(std::move(doc_ids), std::move(feature_labels), std::move(entries));
}

std::uint64_t CountMatrix::at(std::size_t row, std::size_t col) const {
  const auto first = col_index_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[row]);
  const auto last = col_index_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[row + 1]);
  auto it = std::lower_bound(first, last, col);
  if (it == last || *it != col) return 0;
  return values_[static_cast<std::size_t>(it - col_index_.begin())];
}

std::uint64_t CountMatrix::row_sum(std::size_t row) const {
  std::uint64_t total = 0;
  for (std::size_t k = row_offsets_[row]; k < row_offsets_[row + 1]; ++k) total += values_[k];
  return total;
}

std::vector<std::uint64_t> CountMatrix::row_sums() const {
  std::vector<std::uint64_t> sums(rows());
  for (std::size_t i = 0; i < rows(); ++i) sums[i] = row_sum(i);
  return sums;
}

std::vector<std::uint64_t> CountMatrix::col_sums() const {
  std::vector<std::uint64_t> sums(cols(), 0);
  for (std::size_t k = 0; k < values_.size(); ++k) sums[col_index_[k]] += values_[k];
  return sums;
}

std::vector<MatrixEntry> CountMatrix::entries() const {
  std::vector<MatrixEntry> out;
  out.reserve(values_.size());
  for (std::size_t i = 0; i < rows(); ++i) {
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) out.push_back({i, col_index_[k], values_[k]});
  }
  return out;
}

Eigen::MatrixXd CountMatrix::dense() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols()));
  for (std::size_t i = 0; i < rows(); ++i) {
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col_index_[k])) = static_cast<double>(values_[k]);
    }
  }
  return out;
}

TrimmedMatrix trim(const CountMatrix& matrix) {
  std::vector<char> keep_row(matrix.rows(), 1);
  std::vector<char> keep_col(matrix.cols(), 1);
  const auto entries = matrix.entries();
  // Iterate until no all-zero row or column remains.
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<std::uint64_t> row_total(matrix.rows(), 0);
    std::vector<std::uint64_t> col_total(matrix.cols(), 0);
    for (const auto& e : entries) {
      if (keep_row[e.row] && keep_col[e.col]) {
        row_total[e.row] += e.count;
        col_total[e.col] += e.count;
      }
    }
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
      if (keep_row[i] && row_total[i] == 0) keep_row[i] = 0, changed = true;
    }
    for (std::size_t j = 0; j < matrix.cols(); ++j) {
      if (keep_col[j] && col_total[j] == 0) keep_col[j] = 0, changed = true;
    }
  }

  TrimmedMatrix out;
  std::vector<std::size_t> row_map(matrix.rows()), col_map(matrix.cols());
  std::vector<std::string> ids, labels;
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    if (keep_row[i]) {
      row_map[i] = ids.size();
      ids.push_back(matrix.doc_ids()[i]);
    } else {
      out.report.dropped_documents.push_back(matrix.doc_ids()[i]);
    }
  }
  for (std::size_t j = 0; j < matrix.cols(); ++j) {
    if (keep_col[j]) {
      col_map[j] = labels.size();
      labels.push_back(matrix.feature_labels()[j]);
    } else {
      out.report.dropped_features.push_back(matrix.feature_labels()[j]);
    }
  }
  if (ids.empty() || labels.empty()) throw EmptyStageError("matrix is empty after removing all-zero rows and columns");
  std::vector<MatrixEntry> kept;
  for (const auto& e : entries) {
    if (keep_row[e.row] && keep_col[e.col]) kept.push_back({row_map[e.row], col_map[e.col], e.count});
  }
  out.matrix = CountMatrix(std::move(ids), std::move(labels), std::move(kept));
  return out;
}

DtmConvention parse_dtm_convention(std::string_view name) {
  if (name == "member-count" || name == "member_count") return DtmConvention::member_count;
  if (name == "bigram-match" || name == "bigram_match") return DtmConvention::bigram_match;
  throw InputError("unknown dtm convention '" + std::string(name) + "' (expected member-count or bigram-match)");
}

std::string_view to_string(DtmConvention convention) {
  return convention == DtmConvention::member_count ? "member-count" : "bigram-match";
}

std::string community_label(std::size_t rank, const std::vector<std::string>& members, const Corpus& corpus) {
  std::vector<std::pair<std::uint64_t, const std::string*>> ranked;
  ranked.reserve(members.size());
  const auto& vocab = corpus.vocabulary();
  for (const auto& word : members) {
    auto it = vocab.find(word);
    ranked.emplace_back(it == vocab.end() ? 0 : it->second, &word);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return *a.second < *b.second;
  });
  std::string label = "com_" + std::to_string(rank);
  for (std::size_t k = 0; k < std::min<std::size_t>(3, ranked.size()); ++k) label += " " + *ranked[k].second;
  return label;
}

TrimmedMatrix community_dtm(const Corpus& corpus, const Partition& partition, DtmConvention convention) {
  const auto features = partition.feature_communities();
  if (features.empty()) throw EmptyStageError("no communities: partition has no feature community");
  if (corpus.empty()) throw EmptyStageError("empty corpus");

  std::unordered_map<std::string, std::size_t> feature_of;
  std::vector<std::string> labels;
  for (std::size_t f = 0; f < features.size(); ++f) {
    const auto& members = partition.members()[features[f]];
    for (const auto& word : members) feature_of.emplace(word, f);
    labels.push_back(community_label(f + 1, members, corpus));
  }

  std::vector<MatrixEntry> entries;
  std::vector<std::string> ids;
  ids.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& doc = corpus[i];
    ids.push_back(doc.id);
    std::vector<std::uint64_t> row(features.size(), 0);
    if (convention == DtmConvention::member_count) {
      for (const auto& token : doc.tokens) {
        if (auto it = feature_of.find(token); it != feature_of.end()) ++row[it->second];
      }
    } else {
      auto boundary = doc.sentence_starts.begin();
      for (std::size_t k = 0; k + 1 < doc.tokens.size(); ++k) {
        while (boundary != doc.sentence_starts.end() && *boundary <= k) ++boundary;
        if (boundary != doc.sentence_starts.end() && *boundary == k + 1) continue;
        if (doc.tokens[k] == doc.tokens[k + 1]) continue;
        auto a = feature_of.find(doc.tokens[k]);
        auto b = feature_of.find(doc.tokens[k + 1]);
        if (a != feature_of.end() && b != feature_of.end() && a->second == b->second) ++row[a->second];
      }
    }
    for (std::size_t f = 0; f < row.size(); ++f) {
      if (row[f] > 0) entries.push_back({i, f, row[f]});
    }
  }
  if (entries.empty()) throw EmptyStageError("all documents are empty after mapping tokens to communities");
  return trim(CountMatrix(std::move(ids), std::move(labels), std::move(entries)));
}

TrimmedMatrix unigram_dtm(const Corpus& corpus, std::uint64_t min_count) {
  std::unordered_map<std::string, std::size_t> column;
  std::vector<std::string> labels;
  for (const auto& [word, count] : corpus.vocabulary()) {
    if (count >= min_count) {
      column.emplace(word, labels.size());
      labels.push_back(word);
    }
  }
  if (labels.empty()) {
    throw EmptyStageError("empty vocabulary: no word occurs at least " + std::to_string(min_count) + " times");
  }
  std::vector<MatrixEntry> entries;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    ids.push_back(corpus[i].id);
    for (const auto& token : corpus[i].tokens) {
      if (auto it = column.find(token); it != column.end()) entries.push_back({i, it->second, 1});
    }
  }
  return trim(CountMatrix(std::move(ids), std::move(labels), std::move(entries)));
}

void write_triplets_csv(std::ostream& out, const CountMatrix& matrix) {
  out << "doc_id,feature,count\n";
  for (const auto& e : matrix.entries()) {
    csv::write_row(out, {matrix.doc_ids()[e.row], matrix.feature_labels()[e.col], std::to_string(e.count)});
  }
}

void write_dense_csv(std::ostream& out, const CountMatrix& matrix) {
  std::vector<std::string> header{"doc_id"};
  header.insert(header.end(), matrix.feature_labels().begin(), matrix.feature_labels().end());
  csv::write_row(out, header);
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    std::vector<std::string> row{matrix.doc_ids()[i]};
    for (std::size_t j = 0; j < matrix.cols(); ++j) row.push_back(std::to_string(matrix.at(i, j)));
    csv::write_row(out, row);
  }
}

}  // namespace cfish
