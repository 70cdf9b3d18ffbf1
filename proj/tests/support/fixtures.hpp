#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "communityfish/corpus.hpp"

namespace fixtures {

// Tokenized corpus with ids d0, d1, ...
inline cfish::Corpus corpus_of(const std::vector<std::vector<std::string>>& docs) {
  std::vector<cfish::Document> out;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    cfish::Document doc;
    doc.id = "d" + std::to_string(i);
    doc.tokens = docs[i];
    out.push_back(std::move(doc));
  }
  return cfish::Corpus(std::move(out));
}

// Random token documents over a small alphabet.
inline std::vector<std::vector<std::string>> random_docs(std::size_t count, std::size_t max_len,
                                                          std::size_t alphabet, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<std::size_t> letter(0, alphabet - 1);
  std::vector<std::vector<std::string>> docs(count);
  for (auto& doc : docs) {
    const std::size_t n = len(rng);
    for (std::size_t t = 0; t < n; ++t) doc.push_back(std::string(1, static_cast<char>('a' + letter(rng))));
  }
  return docs;
}

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(std::filesystem::temp_directory_path() / ("cfish_test_" + name + "_" + std::to_string(std::random_device{}()))) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixtures
