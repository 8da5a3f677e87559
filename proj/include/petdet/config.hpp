#pragma once

// Pipeline configuration and its JSON form. Every key is optional on input;
// unknown keys are rejected so that typos do not silently fall back to defaults.

#include <cstdint>
#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "petdet/collocation.hpp"
#include "petdet/embedding.hpp"
#include "petdet/error.hpp"
#include "petdet/paraphrase.hpp"
#include "petdet/ranking.hpp"
#include "petdet/topic_filter.hpp"

namespace petdet {

struct PipelineConfig {
  std::uint64_t phraser_min_count = 5;
  double phraser_threshold = 10.0;
  TrainConfig embedding;

  // Empty paths select the bundled data files (topics: built-in defaults).
  std::string topics_path;
  std::string stopwords_path;
  std::string sentiment_lexicon_path;

  double quality_threshold = kDefaultQualityThreshold;
  std::size_t k_neighbors = kDefaultNeighbors;
  bool exclude_reverse_substring = true;
  Weights weights;
  Aggregator aggregator = Aggregator::sum;
  std::size_t top_n = kDefaultTopN;

  std::string scorer = "lexicon";  // "lexicon" | "remote"
  std::string endpoint = "http://127.0.0.1:8571";
  std::int64_t timeout_ms = 10000;
  int retries = 2;
  std::ptrdiff_t max_in_flight = 8;

  std::uint64_t rng_seed = 1;
  unsigned workers = 1;

  bool operator==(const PipelineConfig&) const = default;

  TrainConfig train_config() const {
    TrainConfig t = embedding;
    t.rng_seed = rng_seed;
    return t;
  }

  RankOptions rank_options() const { return RankOptions{weights, aggregator, top_n}; }

  ParaphraseOptions paraphrase_options() const { return ParaphraseOptions{k_neighbors, exclude_reverse_substring}; }

  RemoteOptions remote_options() const {
    RemoteOptions r;
    r.endpoint = endpoint;
    r.timeout = std::chrono::milliseconds(timeout_ms);
    r.retries = retries;
    r.max_in_flight = max_in_flight;
    return r;
  }

  void validate() const {
    if (phraser_min_count < 1) throw Error("config: phraser.min_count must be >= 1");
    if (!(phraser_threshold > 0)) throw Error("config: phraser.threshold must be > 0");
    train_config().validate();
    if (k_neighbors < 1) throw Error("config: k_neighbors must be >= 1");
    if (top_n < 1) throw Error("config: top_n must be >= 1");
    for (double w : weights.w)
      if (!(w >= 0)) throw Error("config: weights must be >= 0");
    if (scorer != "lexicon" && scorer != "remote") throw Error("config: scorer must be 'lexicon' or 'remote'");
    if (timeout_ms < 1) throw Error("config: timeout_ms must be >= 1");
    if (retries < 0) throw Error("config: retries must be >= 0");
    if (max_in_flight < 1) throw Error("config: max_in_flight must be >= 1");
    if (workers < 1) throw Error("config: workers must be >= 1");
  }
};

inline nlohmann::json to_json(const PipelineConfig& c) {
  using nlohmann::json;
  return json{
      {"phraser", {{"min_count", c.phraser_min_count}, {"threshold", c.phraser_threshold}}},
      {"embedding",
       {{"dim", c.embedding.dim},
        {"window", c.embedding.window},
        {"epochs", c.embedding.epochs},
        {"negative_samples", c.embedding.negative_samples},
        {"min_count", c.embedding.min_count},
        {"subsample_threshold", c.embedding.subsample_threshold},
        {"initial_lr", c.embedding.initial_lr},
        {"final_lr", c.embedding.final_lr}}},
      {"topics_path", c.topics_path},
      {"stopwords_path", c.stopwords_path},
      {"sentiment_lexicon_path", c.sentiment_lexicon_path},
      {"quality_threshold", c.quality_threshold},
      {"k_neighbors", c.k_neighbors},
      {"exclude_reverse_substring", c.exclude_reverse_substring},
      {"weights", c.weights.w},
      {"aggregator", to_string(c.aggregator)},
      {"top_n", c.top_n},
      {"scorer", c.scorer},
      {"endpoint", c.endpoint},
      {"timeout_ms", c.timeout_ms},
      {"retries", c.retries},
      {"max_in_flight", c.max_in_flight},
      {"rng_seed", c.rng_seed},
      {"workers", c.workers},
  };
}

namespace detail {

inline void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& known, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!known.count(it.key())) throw Error("config: unknown key '" + where + it.key() + "'");
}

template <typename T>
void read_key(const nlohmann::json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error("config: bad value for '" + where + key + "'");
  }
}

}  // namespace detail

inline PipelineConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("config: top level must be an object");
  detail::reject_unknown(j,
                         {"phraser", "embedding", "topics_path", "stopwords_path", "sentiment_lexicon_path",
                          "quality_threshold", "k_neighbors", "exclude_reverse_substring", "weights", "aggregator",
                          "top_n", "scorer", "endpoint", "timeout_ms", "retries", "max_in_flight", "rng_seed",
                          "workers"},
                         "");
  PipelineConfig c;
  if (j.contains("phraser")) {
    const auto& p = j["phraser"];
    if (!p.is_object()) throw Error("config: 'phraser' must be an object");
    detail::reject_unknown(p, {"min_count", "threshold"}, "phraser.");
    detail::read_key(p, "min_count", c.phraser_min_count, "phraser.");
    detail::read_key(p, "threshold", c.phraser_threshold, "phraser.");
  }
  if (j.contains("embedding")) {
    const auto& e = j["embedding"];
    if (!e.is_object()) throw Error("config: 'embedding' must be an object");
    detail::reject_unknown(e,
                           {"dim", "window", "epochs", "negative_samples", "min_count", "subsample_threshold",
                            "initial_lr", "final_lr"},
                           "embedding.");
    detail::read_key(e, "dim", c.embedding.dim, "embedding.");
    detail::read_key(e, "window", c.embedding.window, "embedding.");
    detail::read_key(e, "epochs", c.embedding.epochs, "embedding.");
    detail::read_key(e, "negative_samples", c.embedding.negative_samples, "embedding.");
    detail::read_key(e, "min_count", c.embedding.min_count, "embedding.");
    detail::read_key(e, "subsample_threshold", c.embedding.subsample_threshold, "embedding.");
    detail::read_key(e, "initial_lr", c.embedding.initial_lr, "embedding.");
    detail::read_key(e, "final_lr", c.embedding.final_lr, "embedding.");
  }
  detail::read_key(j, "topics_path", c.topics_path, "");
  detail::read_key(j, "stopwords_path", c.stopwords_path, "");
  detail::read_key(j, "sentiment_lexicon_path", c.sentiment_lexicon_path, "");
  detail::read_key(j, "quality_threshold", c.quality_threshold, "");
  detail::read_key(j, "k_neighbors", c.k_neighbors, "");
  detail::read_key(j, "exclude_reverse_substring", c.exclude_reverse_substring, "");
  detail::read_key(j, "weights", c.weights.w, "");
  if (j.contains("aggregator")) {
    std::string a;
    detail::read_key(j, "aggregator", a, "");
    c.aggregator = parse_aggregator(a);
  }
  detail::read_key(j, "top_n", c.top_n, "");
  detail::read_key(j, "scorer", c.scorer, "");
  detail::read_key(j, "endpoint", c.endpoint, "");
  detail::read_key(j, "timeout_ms", c.timeout_ms, "");
  detail::read_key(j, "retries", c.retries, "");
  detail::read_key(j, "max_in_flight", c.max_in_flight, "");
  detail::read_key(j, "rng_seed", c.rng_seed, "");
  detail::read_key(j, "workers", c.workers, "");
  c.validate();
  return c;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("config file " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

}  // namespace petdet
