#pragma once

// Five-score sentiment/offensiveness scoring of short texts. Two backends:
// a deterministic lexicon scorer and an HTTP client for a model server.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "petdet/corpus.hpp"
#include "petdet/error.hpp"

namespace petdet {

// Two probability simplexes: {neg, neu, pos} and {non_off, off}.
struct SentimentVector {
  double neg = 0, neu = 1, pos = 0;
  double non_off = 1, off = 0;

  std::array<double, 5> as_array() const { return {neg, neu, pos, non_off, off}; }

  bool operator==(const SentimentVector&) const = default;
};

inline bool satisfies_simplex(const SentimentVector& v, double tol = 1e-6) {
  for (double x : v.as_array())
    if (!(x >= -tol && x <= 1 + tol)) return false;
  return std::abs(v.neg + v.neu + v.pos - 1) <= tol && std::abs(v.non_off + v.off - 1) <= tol;
}

class SentimentLexicon {
 public:
  struct Entry {
    double valence = 0;        // [-1, 1]
    double offensiveness = 0;  // [0, 1]
  };

  void set(const Token& word, double valence, double offensiveness) {
    if (!(valence >= -1 && valence <= 1)) throw Error("valence out of [-1,1] for '" + word + "'");
    if (!(offensiveness >= 0 && offensiveness <= 1)) throw Error("offensiveness out of [0,1] for '" + word + "'");
    entries_[word] = Entry{valence, offensiveness};
  }

  const Entry* find(const Token& word) const {
    auto it = entries_.find(word);
    return it == entries_.end() ? nullptr : &it->second;
  }

  std::size_t size() const noexcept { return entries_.size(); }

  // "word<TAB>valence<TAB>offensiveness" per line; '#' comments allowed.
  static SentimentLexicon load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open sentiment lexicon: " + path);
    SentimentLexicon lex;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      const auto f1 = line.find('\t');
      const auto f2 = f1 == std::string::npos ? f1 : line.find('\t', f1 + 1);
      if (f2 == std::string::npos) throw ParseError(path, lineno, "expected 'word<TAB>valence<TAB>offensiveness'");
      const auto word = tokenize(line.substr(0, f1)).tokens;
      if (word.size() != 1) throw ParseError(path, lineno, "lexicon entry must be a single word");
      try {
        std::size_t p1 = 0, p2 = 0;
        const std::string vs = line.substr(f1 + 1, f2 - f1 - 1);
        const std::string os = line.substr(f2 + 1);
        const double v = std::stod(vs, &p1);
        const double o = std::stod(os, &p2);
        if (p1 != vs.size() || p2 != os.size()) throw std::invalid_argument("trailing characters");
        lex.set(word[0], v, o);
      } catch (const Error& e) {
        throw ParseError(path, lineno, e.what());
      } catch (const std::exception&) {
        throw ParseError(path, lineno, "malformed number");
      }
    }
    return lex;
  }

 private:
  std::unordered_map<Token, Entry> entries_;
};

// Mean valence v and mean offensiveness o over matched words:
// pos = max(0, v), neg = max(0, -v), neu = 1 - |v|, off = o, non_off = 1 - o.
inline SentimentVector score_lexicon(const SentimentLexicon& lex, std::string_view text) {
  const auto tokens = tokenize(text).tokens;
  double vsum = 0, osum = 0;
  std::size_t matched = 0;
  for (const auto& t : tokens) {
    if (const auto* e = lex.find(t)) {
      vsum += e->valence;
      osum += e->offensiveness;
      ++matched;
    }
  }
  if (matched == 0) return SentimentVector{};
  const double v = vsum / static_cast<double>(matched);
  const double o = osum / static_cast<double>(matched);
  SentimentVector s;
  s.pos = std::max(0.0, v);
  s.neg = std::max(0.0, -v);
  s.neu = 1.0 - std::abs(v);
  s.off = o;
  s.non_off = 1.0 - o;
  return s;
}

struct RemoteOptions {
  std::string endpoint = "http://127.0.0.1:8571";
  std::chrono::milliseconds timeout{10000};
  int retries = 2;
  std::size_t batch_size = 64;
  std::ptrdiff_t max_in_flight = 8;
};

namespace detail {

// Renormalizes a simplex that is off by at most `tol`; rejects anything else.
template <std::size_t N>
std::array<double, N> checked_simplex(const nlohmann::json& j, const char* field, std::size_t row, double tol = 1e-3) {
  if (!j.is_array() || j.size() != N)
    throw ProtocolError("result " + std::to_string(row) + ": '" + field + "' must be an array of " + std::to_string(N));
  std::array<double, N> v{};
  double sum = 0;
  for (std::size_t i = 0; i < N; ++i) {
    if (!j[i].is_number()) throw ProtocolError("result " + std::to_string(row) + ": non-numeric '" + field + "'");
    v[i] = j[i].get<double>();
    if (!std::isfinite(v[i]) || v[i] < -tol || v[i] > 1 + tol)
      throw ProtocolError("result " + std::to_string(row) + ": '" + field + "' component outside [0,1]");
    v[i] = std::clamp(v[i], 0.0, 1.0);
    sum += v[i];
  }
  if (std::abs(sum - 1.0) > tol)
    throw ProtocolError("result " + std::to_string(row) + ": '" + field + "' sums to " + std::to_string(sum));
  for (auto& x : v) x /= sum;
  return v;
}

}  // namespace detail

// Parses a /score response body for `expected` texts.
inline std::vector<SentimentVector> parse_score_response(const std::string& body, std::size_t expected) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed JSON response: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("results") || !doc["results"].is_array())
    throw ProtocolError("response lacks a 'results' array");
  const auto& results = doc["results"];
  if (results.size() != expected)
    throw ProtocolError("expected " + std::to_string(expected) + " results, got " + std::to_string(results.size()));
  std::vector<SentimentVector> out;
  out.reserve(expected);
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    if (!r.is_object() || !r.contains("sentiment") || !r.contains("offense"))
      throw ProtocolError("result " + std::to_string(i) + " lacks 'sentiment' or 'offense'");
    const auto s = detail::checked_simplex<3>(r["sentiment"], "sentiment", i);
    const auto o = detail::checked_simplex<2>(r["offense"], "offense", i);
    out.push_back(SentimentVector{s[0], s[1], s[2], o[0], o[1]});
  }
  return out;
}

class RemoteScorer {
 public:
  explicit RemoteScorer(RemoteOptions opts)
      : opts_(std::move(opts)), in_flight_(std::make_shared<std::counting_semaphore<>>(opts_.max_in_flight)) {
    if (opts_.batch_size == 0) throw Error("remote batch size must be >= 1");
    if (opts_.max_in_flight < 1) throw Error("remote in-flight cap must be >= 1");
  }

  const RemoteOptions& options() const noexcept { return opts_; }

  std::vector<SentimentVector> score(const std::vector<std::string>& texts) const {
    std::vector<SentimentVector> out;
    out.reserve(texts.size());
    for (std::size_t b = 0; b < texts.size(); b += opts_.batch_size) {
      const std::size_t e = std::min(texts.size(), b + opts_.batch_size);
      std::vector<std::string> chunk(texts.begin() + static_cast<std::ptrdiff_t>(b),
                                     texts.begin() + static_cast<std::ptrdiff_t>(e));
      auto part = post_score(chunk);
      out.insert(out.end(), part.begin(), part.end());
    }
    return out;
  }

  SentimentVector score(const std::string& text) const { return score(std::vector<std::string>{text}).front(); }

  // GET /health; returns the parsed body.
  nlohmann::json health() const {
    auto res = with_retries([&](httplib::Client& cli) { return cli.Get("/health"); });
    if (res->status != 200)
      throw ProtocolError("health check returned HTTP " + std::to_string(res->status) + ": " + res->body);
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw ProtocolError(std::string("malformed health response: ") + e.what());
    }
  }

 private:
  template <typename Call>
  httplib::Result with_retries(Call&& call) const {
    struct Slot {
      std::counting_semaphore<>& s;
      explicit Slot(std::counting_semaphore<>& sem) : s(sem) { s.acquire(); }
      ~Slot() { s.release(); }
    } slot(*in_flight_);
    std::string last_error;
    for (int attempt = 0; attempt <= opts_.retries; ++attempt) {
      httplib::Client cli(opts_.endpoint);
      const auto secs = std::chrono::duration_cast<std::chrono::seconds>(opts_.timeout);
      const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(opts_.timeout - secs);
      cli.set_connection_timeout(secs.count(), usecs.count());
      cli.set_read_timeout(secs.count(), usecs.count());
      cli.set_write_timeout(secs.count(), usecs.count());
      auto res = call(cli);
      if (res) return res;
      last_error = httplib::to_string(res.error());
    }
    throw ProtocolError("scorer at " + opts_.endpoint + " unreachable after " + std::to_string(opts_.retries + 1) +
                        " attempts: " + last_error);
  }

  std::vector<SentimentVector> post_score(const std::vector<std::string>& texts) const {
    const std::string body = nlohmann::json{{"texts", texts}}.dump();
    auto res = with_retries([&](httplib::Client& cli) { return cli.Post("/score", body, "application/json"); });
    if (res->status != 200)
      throw ProtocolError("scorer returned HTTP " + std::to_string(res->status) + ": " + res->body);
    return parse_score_response(res->body, texts.size());
  }

  RemoteOptions opts_;
  std::shared_ptr<std::counting_semaphore<>> in_flight_;
};

// Backend dispatch plus a per-run memo keyed by exact text. Safe to share
// across threads.
class Scorer {
 public:
  enum class Kind { lexicon, remote };

  static Scorer lexicon(SentimentLexicon lex) { return Scorer(std::move(lex)); }
  static Scorer remote(RemoteOptions opts) { return Scorer(RemoteScorer(std::move(opts))); }

  Kind kind() const noexcept {
    return std::holds_alternative<SentimentLexicon>(backend_) ? Kind::lexicon : Kind::remote;
  }

  SentimentVector score(const std::string& text) const { return score_batch({text}).front(); }

  std::vector<SentimentVector> score_batch(const std::vector<std::string>& texts) const {
    std::vector<SentimentVector> out(texts.size());
    std::vector<std::size_t> missing;
    std::vector<std::string> pending;
    {
      std::lock_guard lock(memo_->mu);
      std::unordered_map<std::string, std::size_t> queued;
      for (std::size_t i = 0; i < texts.size(); ++i) {
        if (auto it = memo_->cache.find(texts[i]); it != memo_->cache.end()) {
          out[i] = it->second;
        } else {
          missing.push_back(i);
          if (queued.emplace(texts[i], pending.size()).second) pending.push_back(texts[i]);
        }
      }
    }
    if (pending.empty()) return out;

    std::vector<SentimentVector> fresh;
    if (const auto* lex = std::get_if<SentimentLexicon>(&backend_)) {
      fresh.reserve(pending.size());
      for (const auto& t : pending) fresh.push_back(score_lexicon(*lex, t));
    } else {
      fresh = std::get<RemoteScorer>(backend_).score(pending);
    }

    std::lock_guard lock(memo_->mu);
    memo_->backend_calls += pending.size();
    for (std::size_t i = 0; i < pending.size(); ++i) memo_->cache.emplace(pending[i], fresh[i]);
    for (auto i : missing) out[i] = memo_->cache.at(texts[i]);
    return out;
  }

  // Number of texts actually sent to the backend (cache misses).
  std::size_t backend_calls() const {
    std::lock_guard lock(memo_->mu);
    return memo_->backend_calls;
  }

  const RemoteScorer* remote_backend() const { return std::get_if<RemoteScorer>(&backend_); }

 private:
  struct Memo {
    mutable std::mutex mu;
    std::unordered_map<std::string, SentimentVector> cache;
    std::size_t backend_calls = 0;
  };

  explicit Scorer(std::variant<SentimentLexicon, RemoteScorer> backend)
      : backend_(std::move(backend)), memo_(std::make_unique<Memo>()) {}

  std::variant<SentimentLexicon, RemoteScorer> backend_;
  std::unique_ptr<Memo> memo_;
};

}  // namespace petdet
