// UTF-8 word tokenization. Covers Latin, Greek and Cyrillic case folding;
// other scripts are treated as caseless letters.

#include <regex>

#include "communityfish/corpus.hpp"

namespace cfish {
namespace {

constexpr char32_t kReplacement = 0xFFFD;

// Decodes one code point starting at text[pos]; advances pos. Invalid
// sequences yield U+FFFD and consume one byte.
char32_t decode(std::string_view text, std::size_t& pos) {
  const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(text[i]); };
  const unsigned char lead = byte(pos);
  if (lead < 0x80) {
    ++pos;
    return lead;
  }
  int extra = 0;
  char32_t cp = 0;
  if ((lead & 0xE0) == 0xC0) {
    extra = 1;
    cp = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    extra = 2;
    cp = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    extra = 3;
    cp = lead & 0x07;
  } else {
    ++pos;
    return kReplacement;
  }
  if (pos + extra >= text.size()) {
    ++pos;
    return kReplacement;
  }
  for (int k = 1; k <= extra; ++k) {
    const unsigned char b = byte(pos + k);
    if ((b & 0xC0) != 0x80) {
      ++pos;
      return kReplacement;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  pos += static_cast<std::size_t>(extra) + 1;
  return cp;
}

void encode(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_digit(char32_t cp) { return cp >= U'0' && cp <= U'9'; }

bool is_word_char(char32_t cp) {
  if (cp < 0x80) {
    return is_digit(cp) || (cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z');
  }
  if (cp == kReplacement) return false;
  if (cp < 0xC0) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;
  if (cp == 0xD7 || cp == 0xF7) return false;
  // General punctuation, symbols, arrows, math operators, box drawing.
  if (cp >= 0x2000 && cp <= 0x2BFF) return false;
  if (cp >= 0x3000 && cp <= 0x303F) return false;
  if (cp >= 0xFE30 && cp <= 0xFE4F) return false;
  if (cp >= 0xFF00 && cp <= 0xFF0F) return false;
  if (cp >= 0xFF1A && cp <= 0xFF20) return false;
  if (cp >= 0xFFF0 && cp <= 0xFFFF) return false;
  if (cp >= 0x1F000 && cp <= 0x1FAFF) return false;  // emoji and pictographs
  return true;
}

bool is_apostrophe(char32_t cp) { return cp == U'\'' || cp == 0x2019; }

char32_t to_lower(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return cp + 0x20;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
  if (cp >= 0x100 && cp <= 0x17F) {
    if (cp == 0x130) return U'i';
    if (cp == 0x178) return 0xFF;
    const bool odd_upper = (cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E);
    if (odd_upper) return (cp % 2 == 1) ? cp + 1 : cp;
    if (cp == 0x138 || cp == 0x149 || cp == 0x17F) return cp;
    return (cp % 2 == 0) ? cp + 1 : cp;
  }
  if (cp >= 0x391 && cp <= 0x3AB && cp != 0x3A2) return cp + 0x20;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
  return cp;
}

void tokenize_segment(std::string_view text, const TokenizerConfig& rules,
                      std::vector<std::string>& out) {
  std::string current;
  bool all_digits = true;
  auto flush = [&] {
    if (current.empty()) return;
    const bool drop = (rules.drop_numbers && all_digits) || rules.stopwords.contains(current);
    if (!drop) out.push_back(std::move(current));
    current.clear();
    all_digits = true;
  };

  std::size_t pos = 0;
  while (pos < text.size()) {
    const char32_t cp = decode(text, pos);
    if (is_word_char(cp)) {
      if (!is_digit(cp)) all_digits = false;
      encode(rules.lowercase ? to_lower(cp) : cp, current);
      continue;
    }
    if (is_apostrophe(cp) && !current.empty() && pos < text.size()) {
      std::size_t peek = pos;
      const char32_t next = decode(text, peek);
      if (is_word_char(next)) {
        current.push_back('\'');
        continue;
      }
    }
    flush();
  }
  flush();
}

}  // namespace

std::vector<std::string> tokenize_text(std::string_view text, const TokenizerConfig& rules) {
  std::vector<std::string> tokens;
  tokenize_segment(text, rules, tokens);
  return tokens;
}

Document tokenize(Document doc, const TokenizerConfig& rules) {
  doc.tokens.clear();
  doc.sentence_starts.clear();
  if (!rules.sentence_pattern) {
    tokenize_segment(doc.text, rules, doc.tokens);
    return doc;
  }
  const std::regex splitter(*rules.sentence_pattern, std::regex::ECMAScript);
  std::cregex_token_iterator it(doc.text.data(), doc.text.data() + doc.text.size(), splitter, -1);
  for (; it != std::cregex_token_iterator(); ++it) {
    const std::size_t before = doc.tokens.size();
    tokenize_segment(std::string_view(it->first, static_cast<std::size_t>(it->length())), rules,
                     doc.tokens);
    if (before > 0 && doc.tokens.size() > before) doc.sentence_starts.push_back(before);
  }
  return doc;
}

Document apply_lemmas(Document doc, const LemmaTable& lemma_table) {
  if (lemma_table.empty()) return doc;
  for (auto& token : doc.tokens) {
    if (auto it = lemma_table.find(token); it != lemma_table.end()) token = it->second;
  }
  return doc;
}

Corpus tokenize(const Corpus& corpus, const TokenizerConfig& rules) {
  std::vector<Document> docs;
  docs.reserve(corpus.size());
  for (const auto& doc : corpus) docs.push_back(tokenize(doc, rules));
  return Corpus(std::move(docs));
}

Corpus apply_lemmas(const Corpus& corpus, const LemmaTable& lemma_table) {
  std::vector<Document> docs;
  docs.reserve(corpus.size());
  for (const auto& doc : corpus) docs.push_back(apply_lemmas(doc, lemma_table));
  return Corpus(std::move(docs));
}

}  // namespace cfish
