#pragma once

// Candidate ranking by sentiment shift. Each replacement of a quality phrase
// shifts the sentence's five scores; weighted increases are aggregated into
// one score per candidate and the best-scoring candidates become PETs.

#include <algorithm>
#include <array>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "petdet/corpus.hpp"
#include "petdet/paraphrase.hpp"
#include "petdet/sentiment.hpp"
#include "petdet/topic_filter.hpp"

namespace petdet {

inline constexpr std::size_t kDefaultTopN = 2;

// Componentwise difference of two SentimentVectors, in the order
// [negative, neutral, positive, non-offensive, offensive].
struct ShiftVector {
  std::array<double, 5> d{};

  double operator[](std::size_t i) const { return d[i]; }
  bool operator==(const ShiftVector&) const = default;
};

inline ShiftVector operator-(const SentimentVector& after, const SentimentVector& before) {
  const auto a = after.as_array();
  const auto b = before.as_array();
  ShiftVector s;
  for (std::size_t i = 0; i < 5; ++i) s.d[i] = a[i] - b[i];
  return s;
}

struct Weights {
  std::array<double, 5> w{1, 1, 1, 2, 2};

  Weights scaled(double c) const {
    Weights out = *this;
    for (auto& x : out.w) x *= c;
    return out;
  }
  bool operator==(const Weights&) const = default;
};

enum class Aggregator { sum, mean, max };

inline const char* to_string(Aggregator a) {
  switch (a) {
    case Aggregator::sum: return "sum";
    case Aggregator::mean: return "mean";
    case Aggregator::max: return "max";
  }
  return "sum";
}

inline Aggregator parse_aggregator(const std::string& s) {
  if (s == "sum") return Aggregator::sum;
  if (s == "mean") return Aggregator::mean;
  if (s == "max") return Aggregator::max;
  throw Error("unknown aggregator '" + s + "' (expected sum, mean or max)");
}

// Weighted sum of the positive components of one shift.
inline double weighted_increase(const ShiftVector& s, const Weights& w) {
  double total = 0;
  for (std::size_t i = 0; i < 5; ++i) total += w.w[i] * std::max(0.0, s.d[i]);
  return total;
}

inline double aggregate(const std::vector<ShiftVector>& shifts, const Weights& w,
                        Aggregator how = Aggregator::sum) {
  if (shifts.empty()) return 0.0;
  double acc = 0;
  for (const auto& s : shifts) {
    const double v = weighted_increase(s, w);
    acc = how == Aggregator::max ? std::max(acc, v) : acc + v;
  }
  return how == Aggregator::mean ? acc / static_cast<double>(shifts.size()) : acc;
}

inline ShiftVector shift(const Scorer& scorer, const std::string& original_text, const std::string& substituted_text) {
  const auto scores = scorer.score_batch({original_text, substituted_text});
  return scores[1] - scores[0];
}

struct ScoredReplacement {
  std::string replacement;
  ShiftVector shift;
};

struct RankedCandidate {
  QualityPhrase phrase;
  double aggregate = 0;
  std::vector<ScoredReplacement> per_replacement;

  std::vector<ShiftVector> shifts() const {
    std::vector<ShiftVector> out;
    out.reserve(per_replacement.size());
    for (const auto& r : per_replacement) out.push_back(r.shift);
    return out;
  }
};

struct DetectionResult {
  std::string sentence;
  std::vector<RankedCandidate> ranked;  // best first
  std::vector<RankedCandidate> pets;    // prefix of `ranked`
};

struct RankOptions {
  Weights weights;
  Aggregator aggregator = Aggregator::sum;
  std::size_t top_n = kDefaultTopN;
};

// Sorts by aggregate, best first; equal aggregates keep sentence order.
inline void sort_candidates(std::vector<RankedCandidate>& c) {
  std::stable_sort(c.begin(), c.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
    if (a.aggregate != b.aggregate) return a.aggregate > b.aggregate;
    return a.phrase.sentence_position < b.phrase.sentence_position;
  });
}

inline DetectionResult rank_sentence(const Scorer& scorer, const std::vector<Token>& tokens,
                                     const std::vector<ReplacementSet>& replacement_sets, const RankOptions& opts) {
  DetectionResult result;
  result.sentence = sentence_text(tokens);
  if (replacement_sets.empty()) return result;

  // Every text this sentence needs, scored in one batch: original first.
  std::vector<std::string> texts{result.sentence};
  for (const auto& set : replacement_sets)
    for (const auto& r : set.replacements) texts.push_back(substitute(tokens, set.candidate, r.display));
  const auto scores = scorer.score_batch(texts);

  std::size_t next = 1;
  for (const auto& set : replacement_sets) {
    RankedCandidate rc;
    rc.phrase = set.candidate;
    for (const auto& r : set.replacements) rc.per_replacement.push_back({r.display, scores[next++] - scores[0]});
    rc.aggregate = aggregate(rc.shifts(), opts.weights, opts.aggregator);
    result.ranked.push_back(std::move(rc));
  }
  sort_candidates(result.ranked);
  const std::size_t n = std::min(opts.top_n, result.ranked.size());
  result.pets.assign(result.ranked.begin(), result.ranked.begin() + static_cast<std::ptrdiff_t>(n));
  return result;
}

// As above, checking that each replacement set belongs to the matching quality phrase.
inline DetectionResult rank_sentence(const Scorer& scorer, const std::vector<Token>& tokens,
                                     const std::vector<QualityPhrase>& quality_phrases,
                                     const std::vector<ReplacementSet>& replacement_sets, const RankOptions& opts) {
  if (quality_phrases.size() != replacement_sets.size())
    throw std::invalid_argument("replacement sets not aligned with quality phrases");
  for (std::size_t i = 0; i < quality_phrases.size(); ++i)
    if (!(quality_phrases[i] == replacement_sets[i].candidate))
      throw std::invalid_argument("replacement set " + std::to_string(i) + " belongs to a different phrase");
  return rank_sentence(scorer, tokens, replacement_sets, opts);
}

}  // namespace petdet
