#pragma once

// Sensitive-topic filter: keeps the phrases of a sentence whose summed cosine
// similarity to the topic seed words clears a threshold ("quality phrases").

#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "petdet/corpus.hpp"
#include "petdet/embedding.hpp"
#include "petdet/error.hpp"

namespace petdet {

inline constexpr double kDefaultQualityThreshold = 1.5;

class TopicLexicon {
 public:
  TopicLexicon() = default;

  // One representative seed per sensitive topic.
  static TopicLexicon defaults() {
    TopicLexicon lex;
    lex.add("death", {"death"});
    lex.add("sexual_activity", {"sex"});
    lex.add("employment", {"job"});
    lex.add("bodily_functions", {"toilet"});
    lex.add("politics", {"politics"});
    lex.add("physical_mental_attributes", {"disability"});
    lex.add("substances", {"drugs"});
    return lex;
  }

  // "topic<TAB>seed1 seed2 ..." per line; blank lines and '#' comments skipped.
  static TopicLexicon load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open topic lexicon: " + path);
    TopicLexicon lex;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos || tab == 0) throw ParseError(path, lineno, "expected 'topic<TAB>seeds'");
      std::vector<Token> seeds;
      // Seeds may be multi-word phrase tokens, so only split on spaces.
      std::string rest = line.substr(tab + 1);
      std::size_t start = 0;
      while (start < rest.size()) {
        auto sp = rest.find_first_of(" \t", start);
        if (sp == std::string::npos) sp = rest.size();
        if (sp > start) {
          auto tok = rest.substr(start, sp - start);
          for (auto& c : tok)
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
          seeds.push_back(std::move(tok));
        }
        start = sp + 1;
      }
      try {
        lex.add(line.substr(0, tab), std::move(seeds));
      } catch (const Error& e) {
        throw ParseError(path, lineno, e.what());
      }
    }
    return lex;
  }

  void add(std::string topic, std::vector<Token> seeds) {
    if (seeds.empty()) throw Error("topic '" + topic + "' has no seed words");
    if (!topics_.emplace(std::move(topic), std::move(seeds)).second) throw Error("duplicate topic name");
  }

  const std::map<std::string, std::vector<Token>>& topics() const noexcept { return topics_; }

  // Every seed across every topic, in topic order.
  std::vector<Token> seeds() const {
    std::vector<Token> out;
    for (const auto& [name, s] : topics_) out.insert(out.end(), s.begin(), s.end());
    return out;
  }

 private:
  std::map<std::string, std::vector<Token>> topics_;
};

struct QualityPhrase {
  Token token;
  std::string display;
  double quality_score = 0;
  std::size_t sentence_position = 0;

  bool operator==(const QualityPhrase&) const = default;
};

// Sum of cosines between `phrase` and every in-vocabulary seed. Seeds missing
// from the model contribute nothing; an out-of-vocabulary phrase scores -inf.
inline double quality_score(const EmbeddingModel& model, const Token& phrase, const TopicLexicon& lex) {
  if (!model.contains(phrase)) return -std::numeric_limits<double>::infinity();
  const std::size_t p = model.index(phrase);
  double sum = 0;
  for (const auto& [name, seeds] : lex.topics())
    for (const auto& s : seeds)
      if (model.contains(s)) sum += model.cosine(p, model.index(s));
  return sum;
}

// Quality phrases of an already phrase-merged token sequence, in sentence order.
inline std::vector<QualityPhrase> filter_sentence(const EmbeddingModel& model, const std::vector<Token>& tokens,
                                                  const TopicLexicon& lex, const StopwordList& stop,
                                                  double threshold) {
  std::vector<QualityPhrase> out;
  std::unordered_set<Token> seen;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const Token& t = tokens[i];
    if (stop.covers(t) || !seen.insert(t).second) continue;
    const double q = quality_score(model, t, lex);
    if (q == -std::numeric_limits<double>::infinity() || !(q > threshold)) continue;
    out.push_back(QualityPhrase{t, display_form(t), q, i});
  }
  return out;
}

inline std::vector<QualityPhrase> filter_sentence(const EmbeddingModel& model, const Sentence& sentence,
                                                  const TopicLexicon& lex, const StopwordList& stop,
                                                  double threshold) {
  return filter_sentence(model, sentence.tokens, lex, stop, threshold);
}

}  // namespace petdet
