#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "communityfish/community_graph.hpp"
#include "communityfish/corpus.hpp"

namespace cfish {

struct MatrixEntry {
  std::size_t row = 0;
  std::size_t col = 0;
  std::uint64_t count = 0;
};

// Sparse documents x features matrix of non-negative counts (CSR layout).
class CountMatrix {
 public:
  CountMatrix() = default;
  // Entries with equal (row, col) are summed; zero counts are dropped.
  CountMatrix(std::vector<std::string> doc_ids, std::vector<std::string> feature_labels,
              std::vector<MatrixEntry> entries);
  static CountMatrix from_dense(std::vector<std::string> doc_ids, std::vector<std::string> feature_labels,
                                const std::vector<std::vector<std::uint64_t>>& rows);
  static CountMatrix from_dense(std::vector<std::string> doc_ids, std::vector<std::string> feature_labels,
                                const Eigen::MatrixXd& counts);

  std::size_t rows() const { return doc_ids_.size(); }
  std::size_t cols() const { return feature_labels_.size(); }
  std::size_t nonzeros() const { return values_.size(); }
  const std::vector<std::string>& doc_ids() const { return doc_ids_; }
  const std::vector<std::string>& feature_labels() const { return feature_labels_; }

  std::uint64_t at(std::size_t row, std::size_t col) const;
  std::uint64_t row_sum(std::size_t row) const;
  std::vector<std::uint64_t> row_sums() const;
  std::vector<std::uint64_t> col_sums() const;
  std::vector<MatrixEntry> entries() const;
  Eigen::MatrixXd dense() const;

  template <class Fn>
  void for_each_in_row(std::size_t row, Fn&& fn) const {
    for (std::size_t k = row_offsets_[row]; k < row_offsets_[row + 1]; ++k) fn(col_index_[k], values_[k]);
  }

 private:
  std::vector<std::string> doc_ids_;
  std::vector<std::string> feature_labels_;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<std::size_t> col_index_;
  std::vector<std::uint64_t> values_;
};

struct TrimReport {
  std::vector<std::string> dropped_documents;
  std::vector<std::string> dropped_features;
  bool empty() const { return dropped_documents.empty() && dropped_features.empty(); }
};

struct TrimmedMatrix {
  CountMatrix matrix;
  TrimReport report;
};

// Removes all-zero rows and columns until none remain. Throws
// EmptyStageError when nothing is left.
TrimmedMatrix trim(const CountMatrix& matrix);

enum class DtmConvention {
  member_count,  // every token of a member word counts once
  bigram_match,  // adjacent token pairs with both words in the community
};

DtmConvention parse_dtm_convention(std::string_view name);
std::string_view to_string(DtmConvention convention);

// Feature label `com_<k> w1 w2 w3`: the 1-based rank of the community among
// feature communities and its three most frequent member words.
std::string community_label(std::size_t rank, const std::vector<std::string>& members, const Corpus& corpus);

// Documents x feature communities of `partition`, trimmed. Throws
// EmptyStageError when the partition has no feature community or every
// document ends up empty.
TrimmedMatrix community_dtm(const Corpus& corpus, const Partition& partition,
                            DtmConvention convention = DtmConvention::member_count);

// Documents x words with corpus frequency >= min_count, trimmed. Throws
// EmptyStageError when no word reaches min_count.
TrimmedMatrix unigram_dtm(const Corpus& corpus, std::uint64_t min_count = 1);

// `doc_id,feature,count` for every non-zero entry in row-major order.
void write_triplets_csv(std::ostream& out, const CountMatrix& matrix);
// Header `doc_id,<feature labels...>` followed by one row per document.
void write_dense_csv(std::ostream& out, const CountMatrix& matrix);

}  // namespace cfish
