#pragma once

// Statistical phrase detection. Adjacent word pairs whose association score
// clears a threshold are merged into a single underscore-joined token; two
// passes produce phrases of up to three words.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "petdet/corpus.hpp"
#include "petdet/error.hpp"

namespace petdet {

// Phrases never grow past this many words.
inline constexpr std::size_t kMaxPhraseWords = 3;

// Score of pairs that can never be merged.
inline constexpr double kRejectScore = -std::numeric_limits<double>::infinity();

using Bigram = std::pair<Token, Token>;

struct BigramHash {
  std::size_t operator()(const Bigram& b) const noexcept {
    const std::size_t h1 = std::hash<std::string>{}(b.first);
    const std::size_t h2 = std::hash<std::string>{}(b.second);
    return h1 ^ (h2 + 0x9e3779b97f4a7c15ULL + (h1 << 6) + (h1 >> 2));
  }
};

struct NgramCounts {
  std::unordered_map<Token, std::uint64_t> unigram;
  std::unordered_map<Bigram, std::uint64_t, BigramHash> bigram;
  std::uint64_t total_words = 0;
  std::uint64_t vocab_size = 0;  // distinct unigrams with count >= min_count

  std::uint64_t count(const Token& t) const {
    auto it = unigram.find(t);
    return it == unigram.end() ? 0 : it->second;
  }
  std::uint64_t count(const Token& a, const Token& b) const {
    auto it = bigram.find(Bigram{a, b});
    return it == bigram.end() ? 0 : it->second;
  }

  void add_sentence(const std::vector<Token>& tokens) {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      ++unigram[tokens[i]];
      if (i + 1 < tokens.size()) ++bigram[Bigram{tokens[i], tokens[i + 1]}];
    }
    total_words += tokens.size();
  }

  void finalize(std::uint64_t min_count) {
    vocab_size = static_cast<std::uint64_t>(std::count_if(
        unigram.begin(), unigram.end(), [&](const auto& kv) { return kv.second >= min_count; }));
  }
};

// Counts unigrams and within-sentence adjacent pairs.
template <typename Range>
NgramCounts count_ngrams(const Range& corpus, std::uint64_t min_count) {
  NgramCounts counts;
  for (const Sentence& s : corpus) counts.add_sentence(s.tokens);
  counts.finalize(min_count);
  return counts;
}

// (count(ab) - min_count) * |V| / (count(a) * count(b)), or kRejectScore when
// the pair or either word lacks min_count support.
inline double score_bigram(const NgramCounts& counts, const Token& a, const Token& b,
                           std::uint64_t min_count) {
  const std::uint64_t ca = counts.count(a);
  const std::uint64_t cb = counts.count(b);
  const std::uint64_t cab = counts.count(a, b);
  if (ca < min_count || cb < min_count || cab < min_count || ca == 0 || cb == 0) return kRejectScore;
  return (static_cast<double>(cab) - static_cast<double>(min_count)) *
         static_cast<double>(counts.vocab_size) / (static_cast<double>(ca) * static_cast<double>(cb));
}

class PhraserModel {
 public:
  PhraserModel() = default;
  PhraserModel(NgramCounts counts, std::uint64_t min_count, double threshold)
      : counts_(std::move(counts)), min_count_(min_count), threshold_(threshold) {
    if (min_count_ < 1) throw Error("phraser min_count must be >= 1");
    if (!(threshold_ > 0)) throw Error("phraser threshold must be > 0");
  }

  template <typename Range>
  static PhraserModel train(const Range& corpus, std::uint64_t min_count, double threshold) {
    if (min_count < 1) throw Error("phraser min_count must be >= 1");
    return PhraserModel(count_ngrams(corpus, min_count), min_count, threshold);
  }

  const NgramCounts& counts() const noexcept { return counts_; }
  std::uint64_t min_count() const noexcept { return min_count_; }
  double threshold() const noexcept { return threshold_; }

  double score(const Token& a, const Token& b) const { return score_bigram(counts_, a, b, min_count_); }

  bool accepts(const Token& a, const Token& b) const {
    if (phrase_length(a) + phrase_length(b) > kMaxPhraseWords) return false;
    return score(a, b) > threshold_;
  }

  // Every counted pair this model would merge, sorted.
  std::vector<Bigram> accepted_bigrams() const {
    std::vector<Bigram> out;
    for (const auto& [bg, c] : counts_.bigram)
      if (accepts(bg.first, bg.second)) out.push_back(bg);
    std::sort(out.begin(), out.end());
    return out;
  }

  // Greedy left-to-right merge; a merged token is not reconsidered in the same pass.
  std::vector<Token> apply(const std::vector<Token>& tokens) const {
    std::vector<Token> out;
    out.reserve(tokens.size());
    std::size_t i = 0;
    while (i < tokens.size()) {
      if (i + 1 < tokens.size() && accepts(tokens[i], tokens[i + 1])) {
        out.push_back(tokens[i] + kPhraseJoiner + tokens[i + 1]);
        i += 2;
      } else {
        out.push_back(tokens[i]);
        ++i;
      }
    }
    return out;
  }

  Sentence apply(const Sentence& s) const { return Sentence{apply(s.tokens), s.raw}; }

  void save(std::ostream& out) const;
  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write phraser model: " + path);
    save(out);
    if (!out) throw IoError("write failure on phraser model: " + path);
  }
  static PhraserModel load(std::istream& in, const std::string& source);
  static PhraserModel load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open phraser model: " + path);
    return load(in, path);
  }

 private:
  NgramCounts counts_;
  std::uint64_t min_count_ = 5;
  double threshold_ = 10.0;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find('\t', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline bool parse_keyed(std::string_view field, std::string_view key, std::string_view& value) {
  if (field.size() <= key.size() || field.substr(0, key.size()) != key || field[key.size()] != '=') return false;
  value = field.substr(key.size() + 1);
  return true;
}

}  // namespace detail

// Layout:
//   #phraser<TAB>min_count=N<TAB>threshold=X<TAB>vocab_size=N<TAB>total_words=N
//   u<TAB>token<TAB>count            (sorted by token)
//   b<TAB>left<TAB>right<TAB>count   (sorted by pair)
inline void PhraserModel::save(std::ostream& out) const {
  out << "#phraser\tmin_count=" << min_count_ << "\tthreshold=" << detail::format_double(threshold_)
      << "\tvocab_size=" << counts_.vocab_size << "\ttotal_words=" << counts_.total_words << '\n';
  std::vector<std::pair<Token, std::uint64_t>> uni(counts_.unigram.begin(), counts_.unigram.end());
  std::sort(uni.begin(), uni.end());
  for (const auto& [t, c] : uni) out << "u\t" << t << '\t' << c << '\n';
  std::vector<std::pair<Bigram, std::uint64_t>> bi(counts_.bigram.begin(), counts_.bigram.end());
  std::sort(bi.begin(), bi.end());
  for (const auto& [bg, c] : bi) out << "b\t" << bg.first << '\t' << bg.second << '\t' << c << '\n';
}

inline PhraserModel PhraserModel::load(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source, 1, "missing phraser header");
  const auto head = detail::split_tabs(line);
  std::uint64_t min_count = 0, vocab_size = 0, total_words = 0;
  double threshold = 0;
  std::string_view v;
  if (head.size() != 5 || head[0] != "#phraser" || !detail::parse_keyed(head[1], "min_count", v) ||
      !detail::parse_number(v, min_count) || !detail::parse_keyed(head[2], "threshold", v) ||
      !detail::parse_number(v, threshold) || !detail::parse_keyed(head[3], "vocab_size", v) ||
      !detail::parse_number(v, vocab_size) || !detail::parse_keyed(head[4], "total_words", v) ||
      !detail::parse_number(v, total_words))
    throw ParseError(source, 1, "malformed phraser header");

  NgramCounts counts;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = detail::split_tabs(line);
    std::uint64_t c = 0;
    if (f[0] == "u" && f.size() == 3 && !f[1].empty() && detail::parse_number(f[2], c) && c > 0) {
      counts.unigram.emplace(std::string(f[1]), c);
    } else if (f[0] == "b" && f.size() == 4 && !f[1].empty() && !f[2].empty() &&
               detail::parse_number(f[3], c) && c > 0) {
      counts.bigram.emplace(Bigram{std::string(f[1]), std::string(f[2])}, c);
    } else {
      throw ParseError(source, lineno, "malformed phraser entry");
    }
  }
  counts.total_words = total_words;
  counts.finalize(min_count);
  if (counts.vocab_size != vocab_size) throw ParseError(source, 1, "vocab_size does not match unigram table");
  std::uint64_t sum = 0;
  for (const auto& [t, c] : counts.unigram) sum += c;
  if (sum != total_words) throw ParseError(source, 1, "total_words does not match unigram table");
  return PhraserModel(std::move(counts), min_count, threshold);
}

// The two chained phraser passes. The second pass is trained on text already
// rewritten by the first, so it can extend a bigram into a trigram.
struct Phraser {
  PhraserModel first;
  PhraserModel second;

  std::vector<Token> apply(const std::vector<Token>& tokens) const { return second.apply(first.apply(tokens)); }
  Sentence apply(const Sentence& s) const { return Sentence{apply(s.tokens), s.raw}; }
};

inline Phraser train_two_pass(const std::vector<Sentence>& corpus, std::uint64_t min_count, double threshold) {
  Phraser p;
  p.first = PhraserModel::train(corpus, min_count, threshold);
  std::vector<Sentence> rewritten;
  rewritten.reserve(corpus.size());
  for (const auto& s : corpus) rewritten.push_back(p.first.apply(s));
  p.second = PhraserModel::train(rewritten, min_count, threshold);
  return p;
}

}  // namespace petdet
