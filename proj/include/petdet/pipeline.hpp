#pragma once

// End-to-end orchestration: model training/persistence, per-sentence
// detection (extract -> filter -> paraphrase -> rank) and corpus evaluation.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "petdet/collocation.hpp"
#include "petdet/config.hpp"
#include "petdet/corpus.hpp"
#include "petdet/embedding.hpp"
#include "petdet/error.hpp"
#include "petdet/paraphrase.hpp"
#include "petdet/ranking.hpp"
#include "petdet/sentiment.hpp"
#include "petdet/topic_filter.hpp"

namespace petdet {

struct Models {
  Phraser phraser;
  EmbeddingModel embedding;

  static constexpr const char* kFirstPassFile = "phraser.pass1.tsv";
  static constexpr const char* kSecondPassFile = "phraser.pass2.tsv";
  static constexpr const char* kVectorsFile = "vectors.txt";

  void save(const std::filesystem::path& dir) const {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create models directory " + dir.string() + ": " + ec.message());
    phraser.first.save((dir / kFirstPassFile).string());
    phraser.second.save((dir / kSecondPassFile).string());
    embedding.save((dir / kVectorsFile).string());
  }

  static Models load(const std::filesystem::path& dir) {
    Models m;
    m.phraser.first = PhraserModel::load((dir / kFirstPassFile).string());
    m.phraser.second = PhraserModel::load((dir / kSecondPassFile).string());
    m.embedding = EmbeddingModel::load((dir / kVectorsFile).string());
    return m;
  }
};

// Two-pass phraser on raw text, then embeddings on the phrase-merged text.
// Errors name the stage that failed.
inline Models train_models(const std::vector<Sentence>& corpus, const PipelineConfig& cfg) {
  cfg.validate();
  if (corpus.empty()) throw EmptyVocabulary("phrase extraction: training corpus contains no sentences");
  Models m;
  m.phraser = train_two_pass(corpus, cfg.phraser_min_count, cfg.phraser_threshold);
  std::vector<Sentence> merged;
  merged.reserve(corpus.size());
  for (const auto& s : corpus) merged.push_back(m.phraser.apply(s));
  try {
    m.embedding = EmbeddingModel::train(merged, cfg.train_config());
  } catch (const EmptyVocabulary& e) {
    throw EmptyVocabulary(std::string("embedding training: ") + e.what());
  }
  return m;
}

// Everything one sentence produced, stage by stage.
struct Detection {
  std::string sentence;
  std::vector<Token> extracted;
  std::vector<QualityPhrase> quality;
  DetectionResult result;
};

class Pipeline {
 public:
  Pipeline(Models models, StopwordList stop, TopicLexicon topics, Scorer scorer, PipelineConfig cfg)
      : models_(std::move(models)),
        stop_(std::move(stop)),
        topics_(std::move(topics)),
        scorer_(std::move(scorer)),
        cfg_(std::move(cfg)) {
    cfg_.validate();
  }

  const Models& models() const noexcept { return models_; }
  const Scorer& scorer() const noexcept { return scorer_; }
  const PipelineConfig& config() const noexcept { return cfg_; }
  const StopwordList& stopwords() const noexcept { return stop_; }
  const TopicLexicon& topics() const noexcept { return topics_; }

  Detection detect(const Sentence& s) const {
    Detection d;
    d.extracted = models_.phraser.apply(s.tokens);
    d.sentence = sentence_text(d.extracted);
    d.quality = filter_sentence(models_.embedding, d.extracted, topics_, stop_, cfg_.quality_threshold);
    std::vector<ReplacementSet> sets;
    sets.reserve(d.quality.size());
    for (const auto& qp : d.quality)
      sets.push_back(build_replacements(models_.embedding, qp, cfg_.paraphrase_options()));
    d.result = rank_sentence(scorer_, d.extracted, sets, cfg_.rank_options());
    return d;
  }

  // Results come back in input order regardless of cfg.workers.
  std::vector<Detection> detect_all(const std::vector<Sentence>& sentences) const {
    std::vector<Detection> out(sentences.size());
    const unsigned workers = std::max(1u, std::min<unsigned>(cfg_.workers, static_cast<unsigned>(sentences.size())));
    if (workers <= 1) {
      for (std::size_t i = 0; i < sentences.size(); ++i) out[i] = detect(sentences[i]);
      return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < sentences.size();) {
          try {
            out[i] = detect(sentences[i]);
          } catch (...) {
            std::lock_guard lock(failure_mu);
            if (!failure) failure = std::current_exception();
            next = sentences.size();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return out;
  }

 private:
  Models models_;
  StopwordList stop_;
  TopicLexicon topics_;
  Scorer scorer_;
  PipelineConfig cfg_;
};

// Bundled data files; config paths override them.
struct Resources {
  StopwordList stopwords;
  TopicLexicon topics;
  Scorer scorer;
};

inline Resources load_resources(const PipelineConfig& cfg, const std::filesystem::path& data_dir) {
  auto pick = [&](const std::string& configured, const char* bundled) {
    return configured.empty() ? (data_dir / bundled).string() : configured;
  };
  StopwordList stop = StopwordList::load(pick(cfg.stopwords_path, "stopwords.txt"));
  TopicLexicon topics = cfg.topics_path.empty() ? TopicLexicon::defaults() : TopicLexicon::load(cfg.topics_path);
  if (cfg.scorer == "remote") return Resources{std::move(stop), std::move(topics), Scorer::remote(cfg.remote_options())};
  auto lex = SentimentLexicon::load(pick(cfg.sentiment_lexicon_path, "sentiment_lexicon.tsv"));
  return Resources{std::move(stop), std::move(topics), Scorer::lexicon(std::move(lex))};
}

// ---------------------------------------------------------------------------
// Evaluation

// Exact: equal display forms. Fuzzy: either contains the other.
inline bool target_matches(const std::string& target, const std::string& candidate_display, bool fuzzy) {
  if (target == candidate_display) return true;
  return fuzzy && (candidate_display.find(target) != std::string::npos ||
                   target.find(candidate_display) != std::string::npos);
}

struct StageRow {
  std::string stage;
  std::size_t candidates = 0;
  std::size_t targets_retained = 0;
};

struct StageReport {
  std::vector<StageRow> rows;  // extraction, filtering, paraphrasing, ranking
};

struct EvalReport {
  std::size_t n_sentences = 0;
  std::size_t top_n = kDefaultTopN;
  std::vector<std::size_t> hits_by_rank;  // hits_by_rank[r] = target found at rank r+1
  double success_rate = 0;
  double avg_candidates = 0;
  double random_baseline = 0;

  std::size_t hits_rank1() const { return hits_by_rank.size() > 0 ? hits_by_rank[0] : 0; }
  std::size_t hits_rank2() const { return hits_by_rank.size() > 1 ? hits_by_rank[1] : 0; }
  std::size_t hits() const {
    std::size_t h = 0;
    for (auto x : hits_by_rank) h += x;
    return h;
  }
};

// Chance of a uniformly random pick of top_n candidates containing the target.
inline double random_baseline(std::size_t top_n, double avg_candidates) {
  return avg_candidates > 0 ? static_cast<double>(top_n) * (1.0 / avg_candidates) : 0.0;
}

struct Evaluation {
  StageReport stages;
  EvalReport eval;
  std::vector<Detection> detections;
};

// Rebuilds both reports from per-sentence detections.
inline Evaluation summarize(const std::vector<AnnotatedSentence>& corpus, std::vector<Detection> detections,
                            std::size_t top_n, bool fuzzy) {
  if (corpus.size() != detections.size()) throw std::invalid_argument("detections not aligned with corpus");
  Evaluation ev;
  StageRow extraction{"Phrase Extraction"}, filtering{"Phrase Filtering"}, ranking{"Phrase Ranking"};
  ev.eval.n_sentences = corpus.size();
  ev.eval.top_n = top_n;
  ev.eval.hits_by_rank.assign(top_n, 0);

  auto any_match = [&](const std::string& target, auto&& displays) {
    return std::any_of(displays.begin(), displays.end(),
                       [&](const std::string& d) { return target_matches(target, d, fuzzy); });
  };

  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& target = corpus[i].target_pet;
    const auto& d = detections[i];

    std::vector<std::string> extracted;
    for (const auto& t : d.extracted) {
      auto disp = display_form(t);
      if (std::find(extracted.begin(), extracted.end(), disp) == extracted.end()) extracted.push_back(std::move(disp));
    }
    std::vector<std::string> quality;
    for (const auto& q : d.quality) quality.push_back(q.display);
    std::vector<std::string> pets;
    for (const auto& p : d.result.pets) pets.push_back(p.phrase.display);

    extraction.candidates += extracted.size();
    filtering.candidates += quality.size();
    ranking.candidates += pets.size();
    if (any_match(target, extracted)) ++extraction.targets_retained;
    if (any_match(target, quality)) ++filtering.targets_retained;
    for (std::size_t r = 0; r < pets.size() && r < top_n; ++r) {
      if (target_matches(target, pets[r], fuzzy)) {
        ++ev.eval.hits_by_rank[r];
        ++ranking.targets_retained;
        break;
      }
    }
  }

  StageRow paraphrasing = filtering;
  paraphrasing.stage = "Phrase Paraphrasing";
  ev.stages.rows = {extraction, filtering, paraphrasing, ranking};

  const double n = static_cast<double>(ev.eval.n_sentences);
  ev.eval.success_rate = n > 0 ? static_cast<double>(ev.eval.hits()) / n : 0.0;
  ev.eval.avg_candidates = n > 0 ? static_cast<double>(filtering.candidates) / n : 0.0;
  ev.eval.random_baseline = random_baseline(top_n, ev.eval.avg_candidates);
  ev.detections = std::move(detections);
  return ev;
}

inline Evaluation evaluate(const Pipeline& pipeline, const std::vector<AnnotatedSentence>& corpus, bool fuzzy = false) {
  std::vector<Sentence> sentences;
  sentences.reserve(corpus.size());
  for (const auto& a : corpus) sentences.push_back(a.sentence);
  return summarize(corpus, pipeline.detect_all(sentences), pipeline.config().top_n, fuzzy);
}

// ---------------------------------------------------------------------------
// Output

inline nlohmann::json to_json(const Detection& d) {
  using nlohmann::json;
  json ranked = json::array();
  for (const auto& c : d.result.ranked) ranked.push_back(json::array({c.phrase.display, c.aggregate}));
  json quality = json::array();
  for (const auto& q : d.quality) quality.push_back(q.token);
  json pets = json::array();
  for (const auto& p : d.result.pets) pets.push_back(p.phrase.display);
  return json{{"sentence", d.sentence},
              {"extracted_phrases", d.extracted},
              {"quality_phrases", quality},
              {"ranked_phrases", ranked},
              {"pets", pets}};
}

// One record per candidate: every replacement with its five shifts.
inline std::vector<nlohmann::json> shift_report(const Detection& d) {
  using nlohmann::json;
  std::vector<json> out;
  for (const auto& c : d.result.ranked) {
    json reps = json::array();
    for (const auto& r : c.per_replacement) reps.push_back(json{{"replacement", r.replacement}, {"shift", r.shift.d}});
    out.push_back(json{{"sentence", d.sentence},
                       {"candidate", c.phrase.display},
                       {"aggregate", c.aggregate},
                       {"replacements", reps}});
  }
  return out;
}

inline nlohmann::json to_json(const Evaluation& ev) {
  using nlohmann::json;
  json stages = json::array();
  for (const auto& r : ev.stages.rows)
    stages.push_back(json{{"stage", r.stage}, {"candidates", r.candidates}, {"targets_retained", r.targets_retained}});
  return json{{"stages", stages},
              {"n_sentences", ev.eval.n_sentences},
              {"top_n", ev.eval.top_n},
              {"hits_rank1", ev.eval.hits_rank1()},
              {"hits_rank2", ev.eval.hits_rank2()},
              {"hits_by_rank", ev.eval.hits_by_rank},
              {"success_rate", ev.eval.success_rate},
              {"avg_candidates", ev.eval.avg_candidates},
              {"random_baseline", ev.eval.random_baseline}};
}

inline void print_detection_table(std::ostream& os, const Detection& d) {
  auto list = [&](const auto& items, auto&& fmt) {
    os << '[';
    bool first = true;
    for (const auto& x : items) {
      if (!first) os << ", ";
      first = false;
      fmt(x);
    }
    os << "]\n";
  };
  os << "Sentence:         " << d.sentence << '\n';
  os << "ExtractedPhrases: ";
  list(d.extracted, [&](const Token& t) { os << t; });
  os << "QualityPhrases:   ";
  list(d.quality, [&](const QualityPhrase& q) { os << q.token; });
  os << "RankedPhrases:    ";
  list(d.result.ranked, [&](const RankedCandidate& c) { os << '(' << c.phrase.display << ", " << c.aggregate << ')'; });
  os << "PETs:             ";
  list(d.result.pets, [&](const RankedCandidate& c) { os << c.phrase.display; });
}

inline void print_evaluation_table(std::ostream& os, const Evaluation& ev) {
  os << std::left << std::setw(22) << "Stage" << std::right << std::setw(14) << "# Candidates" << std::setw(20)
     << "# Targets Retained" << '\n';
  for (const auto& r : ev.stages.rows)
    os << std::left << std::setw(22) << r.stage << std::right << std::setw(14) << r.candidates << std::setw(20)
       << r.targets_retained << '\n';
  const auto& e = ev.eval;
  os << '\n' << "sentences:        " << e.n_sentences << '\n';
  for (std::size_t r = 0; r < e.hits_by_rank.size(); ++r)
    os << "hits at rank " << (r + 1) << ":    " << e.hits_by_rank[r] << '\n';
  os << std::fixed << std::setprecision(4);
  os << "success rate:     " << e.success_rate << '\n';
  os << "avg candidates:   " << e.avg_candidates << '\n';
  os << "random baseline:  " << e.random_baseline << '\n';
  os << std::defaultfloat;
}

}  // namespace petdet
