#pragma once

// Text ingestion: tokenization, corpus readers and stopword handling.

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "petdet/error.hpp"

namespace petdet {

// Joins the words of a merged phrase token ("mentally_disabled").
inline constexpr char kPhraseJoiner = '_';

using Token = std::string;

struct Sentence {
  std::vector<Token> tokens;
  std::string raw;

  bool operator==(const Sentence&) const = default;
};

struct AnnotatedSentence {
  Sentence sentence;
  std::string target_pet;  // space separated, normalized like tokens
};

// Returns true if `text` is well-formed UTF-8 (no overlongs, no surrogates).
inline bool is_valid_utf8(std::string_view text) {
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t extra = 0;
    char32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= n) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      const auto cc = static_cast<unsigned char>(text[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    static constexpr char32_t kMin[] = {0, 0x80, 0x800, 0x10000};
    if (cp < kMin[extra] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += extra + 1;
  }
  return true;
}

namespace detail {

inline bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

inline bool is_inner_mark(unsigned char c) { return c == '-' || c == '\''; }

// Strips hyphens/apostrophes that are not between word characters at the ends.
inline void flush_word(std::string& word, std::vector<Token>& out) {
  std::size_t b = 0;
  std::size_t e = word.size();
  while (b < e && is_inner_mark(static_cast<unsigned char>(word[b]))) ++b;
  while (e > b && is_inner_mark(static_cast<unsigned char>(word[e - 1]))) --e;
  if (e > b) out.emplace_back(word.substr(b, e - b));
  word.clear();
}

}  // namespace detail

// Lowercases, splits on whitespace and punctuation, and keeps intra-word
// hyphens and apostrophes ("pro-life", "don't"). Underscores act as spaces.
// Non-ASCII bytes are treated as word characters and passed through.
inline Sentence tokenize(std::string_view raw) {
  Sentence s;
  s.raw = std::string(raw);
  std::string word;
  for (char ch : raw) {
    const auto c = static_cast<unsigned char>(ch);
    if (detail::is_word_byte(c)) {
      word.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch);
    } else if (detail::is_inner_mark(c)) {
      word.push_back(ch);
    } else {
      detail::flush_word(word, s.tokens);
    }
  }
  detail::flush_word(word, s.tokens);
  return s;
}

// "mentally_disabled" -> "mentally disabled".
inline std::string display_form(std::string_view token) {
  std::string out(token);
  std::replace(out.begin(), out.end(), kPhraseJoiner, ' ');
  return out;
}

// Component words of a (possibly merged) token.
inline std::vector<std::string_view> phrase_words(std::string_view token) {
  std::vector<std::string_view> words;
  std::size_t start = 0;
  while (start <= token.size()) {
    const std::size_t pos = token.find(kPhraseJoiner, start);
    const std::size_t end = pos == std::string_view::npos ? token.size() : pos;
    if (end > start) words.push_back(token.substr(start, end - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return words;
}

inline std::size_t phrase_length(std::string_view token) { return phrase_words(token).size(); }

// Tokens joined by spaces with every phrase rendered in display form.
inline std::string sentence_text(const std::vector<Token>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += display_form(tokens[i]);
  }
  return out;
}

// Streams sentences of a one-sentence-per-line UTF-8 file. Blank lines are skipped.
inline void for_each_sentence(const std::string& path, const std::function<void(Sentence&&)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file: " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!is_valid_utf8(line)) throw ParseError(path, lineno, "invalid UTF-8");
    if (line.find_first_not_of(" \t\v\f") == std::string::npos) continue;
    fn(tokenize(line));
  }
  if (in.bad()) throw IoError("read failure on corpus file: " + path);
}

inline std::vector<Sentence> load_corpus(const std::string& path) {
  std::vector<Sentence> out;
  for_each_sentence(path, [&](Sentence&& s) { out.push_back(std::move(s)); });
  return out;
}

// Two-column TSV: sentence, target PET. A literal "sentence\ttarget" first
// line is treated as a header. The target is normalized with the tokenizer
// so it compares directly against phrase display forms.
inline std::vector<AnnotatedSentence> load_annotated(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open annotated corpus: " + path);
  std::vector<AnnotatedSentence> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && line == "sentence\ttarget") continue;
    if (line.find_first_not_of(" \t\v\f") == std::string::npos) continue;
    if (!is_valid_utf8(line)) throw ParseError(path, lineno, "invalid UTF-8");
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(path, lineno, "expected 2 tab-separated columns, found 1");
    if (line.find('\t', tab + 1) != std::string::npos)
      throw ParseError(path, lineno, "expected 2 tab-separated columns, found more");
    AnnotatedSentence row;
    row.sentence = tokenize(std::string_view(line).substr(0, tab));
    row.target_pet = sentence_text(tokenize(std::string_view(line).substr(tab + 1)).tokens);
    if (row.target_pet.empty()) throw ParseError(path, lineno, "empty target PET");
    out.push_back(std::move(row));
  }
  return out;
}

class StopwordList {
 public:
  StopwordList() = default;
  StopwordList(std::initializer_list<std::string_view> words) {
    for (auto w : words) insert(w);
  }

  // One word per line; '#' starts a comment line.
  static StopwordList load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open stopword file: " + path);
    StopwordList list;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line[0] == '#') continue;
      for (auto& t : tokenize(line).tokens) list.words_.insert(std::move(t));
    }
    return list;
  }

  void insert(std::string_view word) {
    for (auto& t : tokenize(word).tokens) words_.insert(std::move(t));
  }

  bool contains(std::string_view word) const { return words_.count(std::string(word)) > 0; }

  // A merged phrase is a stopword only if every component is one.
  bool covers(std::string_view token) const {
    const auto words = phrase_words(token);
    if (words.empty()) return false;
    return std::all_of(words.begin(), words.end(), [&](std::string_view w) { return contains(w); });
  }

  std::size_t size() const noexcept { return words_.size(); }
  bool empty() const noexcept { return words_.empty(); }

 private:
  std::unordered_set<std::string> words_;
};

inline std::vector<Token> remove_stopwords(const std::vector<Token>& tokens, const StopwordList& stop) {
  std::vector<Token> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens)
    if (!stop.covers(t)) out.push_back(t);
  return out;
}

}  // namespace petdet
