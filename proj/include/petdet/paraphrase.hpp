#pragma once

// Distributional stand-ins for literal paraphrases: nearest embedding
// neighbours of a quality phrase, minus near-copies of the phrase itself.

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "petdet/corpus.hpp"
#include "petdet/embedding.hpp"
#include "petdet/topic_filter.hpp"

namespace petdet {

inline constexpr std::size_t kDefaultNeighbors = 25;

struct Replacement {
  std::string display;
  double similarity = 0;

  bool operator==(const Replacement&) const = default;
};

struct ReplacementSet {
  QualityPhrase candidate;
  std::vector<Replacement> replacements;
};

struct ParaphraseOptions {
  std::size_t k = kDefaultNeighbors;
  // Also drop neighbours that are a substring of the candidate.
  bool exclude_reverse_substring = true;
};

namespace detail {

inline std::string ascii_lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace detail

// True when the neighbour is a near-copy of the candidate and must be skipped.
inline bool is_substring_variant(const std::string& candidate_display, const std::string& neighbor_display,
                                 bool reverse) {
  const auto c = detail::ascii_lower(candidate_display);
  const auto n = detail::ascii_lower(neighbor_display);
  if (n.find(c) != std::string::npos) return true;
  return reverse && c.find(n) != std::string::npos;
}

inline ReplacementSet build_replacements(const EmbeddingModel& model, const QualityPhrase& qp,
                                         const ParaphraseOptions& opts = {}) {
  if (opts.k < 1) throw Error("neighbour count k must be >= 1");
  ReplacementSet set{qp, {}};
  const std::size_t available = model.size() > 0 ? model.size() - 1 : 0;
  std::size_t fetch = opts.k;
  for (;;) {
    const auto neighbors = model.most_similar(qp.token, fetch);
    set.replacements.clear();
    std::size_t rejected = 0;
    for (const auto& [tok, sim] : neighbors) {
      auto disp = display_form(tok);
      if (is_substring_variant(qp.display, disp, opts.exclude_reverse_substring)) {
        ++rejected;
        continue;
      }
      if (set.replacements.size() < opts.k) set.replacements.push_back(Replacement{std::move(disp), sim});
    }
    if (set.replacements.size() >= opts.k || fetch >= available) break;
    fetch = std::min(available, opts.k + rejected);
    if (fetch <= neighbors.size()) fetch = std::min(available, neighbors.size() + 1);
  }
  return set;
}

// Sentence text with the token at the candidate's position replaced.
inline std::string substitute(const std::vector<Token>& tokens, const QualityPhrase& qp,
                              const std::string& replacement) {
  if (qp.sentence_position >= tokens.size())
    throw std::logic_error("substitution position " + std::to_string(qp.sentence_position) +
                           " out of range for sentence of " + std::to_string(tokens.size()) + " tokens");
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += i == qp.sentence_position ? display_form(replacement) : display_form(tokens[i]);
  }
  return out;
}

inline std::string substitute(const Sentence& s, const QualityPhrase& qp, const std::string& replacement) {
  return substitute(s.tokens, qp, replacement);
}

}  // namespace petdet
