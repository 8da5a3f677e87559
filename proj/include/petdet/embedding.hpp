#pragma once

// Skip-gram word embeddings trained with negative sampling, plus cosine
// similarity and nearest-neighbour queries over the trained vectors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "petdet/corpus.hpp"
#include "petdet/error.hpp"

namespace petdet {

struct TrainConfig {
  int dim = 100;
  int window = 5;
  int epochs = 5;
  int negative_samples = 5;
  std::uint64_t min_count = 5;
  double subsample_threshold = 1e-3;  // <= 0 disables subsampling
  double initial_lr = 0.025;
  double final_lr = 1e-4;
  std::uint64_t rng_seed = 1;

  void validate() const {
    if (dim < 1) throw Error("embedding dim must be >= 1");
    if (window < 1) throw Error("embedding window must be >= 1");
    if (epochs < 1) throw Error("embedding epochs must be >= 1");
    if (negative_samples < 0) throw Error("negative_samples must be >= 0");
    if (min_count < 1) throw Error("embedding min_count must be >= 1");
    if (!(final_lr > 0) || !(final_lr <= initial_lr)) throw Error("learning rates must satisfy 0 < final_lr <= initial_lr");
  }

  bool operator==(const TrainConfig&) const = default;
};

// Negative-sampling objective for one (center, context, negatives) triple:
//   L = -log s(u_o . v) - sum_k log s(-u_k . v)
// where v is the center's input vector, u_o the context's output vector and
// u_k the output vectors of the negative samples.
namespace sgns {

template <typename Real>
Real dot(std::span<const Real> a, std::span<const Real> b) {
  Real s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

template <typename Real>
Real sigmoid(Real x) {
  return x >= 0 ? Real(1) / (Real(1) + std::exp(-x)) : std::exp(x) / (Real(1) + std::exp(x));
}

// log(sigmoid(x)) without overflow.
template <typename Real>
Real log_sigmoid(Real x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

template <typename Real>
Real loss(std::span<const Real> center, std::span<const Real> positive,
          std::span<const std::span<const Real>> negatives) {
  Real l = -log_sigmoid(dot(positive, center));
  for (auto neg : negatives) l -= log_sigmoid(-dot(neg, center));
  return l;
}

// Writes dL/dv, dL/du_o and dL/du_k into the output spans (overwritten, not
// accumulated) and returns the loss.
template <typename Real>
Real gradient(std::span<const Real> center, std::span<const Real> positive,
              std::span<const std::span<const Real>> negatives, std::span<Real> d_center,
              std::span<Real> d_positive, std::span<const std::span<Real>> d_negatives) {
  const std::size_t dim = center.size();
  std::fill(d_center.begin(), d_center.end(), Real(0));

  const Real zp = dot(positive, center);
  const Real gp = sigmoid(zp) - Real(1);
  Real l = -log_sigmoid(zp);
  for (std::size_t i = 0; i < dim; ++i) {
    d_center[i] += gp * positive[i];
    d_positive[i] = gp * center[i];
  }
  for (std::size_t k = 0; k < negatives.size(); ++k) {
    const Real zn = dot(negatives[k], center);
    const Real gn = sigmoid(zn);
    l -= log_sigmoid(-zn);
    for (std::size_t i = 0; i < dim; ++i) {
      d_center[i] += gn * negatives[k][i];
      d_negatives[k][i] = gn * center[i];
    }
  }
  return l;
}

}  // namespace sgns

class EmbeddingModel {
 public:
  EmbeddingModel() = default;

  // Builds a model from explicit vectors (one per word, all of equal length).
  static EmbeddingModel from_vectors(std::vector<Token> words, const std::vector<std::vector<float>>& vectors) {
    if (words.size() != vectors.size()) throw Error("word/vector count mismatch");
    EmbeddingModel m;
    m.dim_ = vectors.empty() ? 0 : static_cast<int>(vectors.front().size());
    m.words_ = std::move(words);
    m.data_.reserve(m.words_.size() * static_cast<std::size_t>(m.dim_));
    for (const auto& v : vectors) {
      if (static_cast<int>(v.size()) != m.dim_) throw Error("inconsistent vector dimension");
      m.data_.insert(m.data_.end(), v.begin(), v.end());
    }
    m.reindex();
    m.trained_ = true;
    return m;
  }

  template <typename Range>
  static EmbeddingModel train(const Range& corpus, const TrainConfig& cfg);

  std::size_t size() const noexcept { return words_.size(); }
  int dim() const noexcept { return dim_; }
  bool trained() const noexcept { return trained_; }
  const std::vector<Token>& words() const noexcept { return words_; }

  bool contains(const Token& t) const { return index_.count(t) > 0; }

  std::size_t index(const Token& t) const {
    auto it = index_.find(t);
    if (it == index_.end()) throw NotInVocabulary(t);
    return it->second;
  }

  std::span<const float> vector(std::size_t i) const {
    return {data_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  std::span<const float> vector(const Token& t) const { return vector(index(t)); }

  double cosine(std::size_t a, std::size_t b) const {
    const double denom = norms_[a] * norms_[b];
    if (denom == 0) return 0.0;
    const auto va = vector(a);
    const auto vb = vector(b);
    double d = 0;
    for (int i = 0; i < dim_; ++i) d += static_cast<double>(va[i]) * static_cast<double>(vb[i]);
    return std::clamp(d / denom, -1.0, 1.0);
  }

  double cosine(const Token& a, const Token& b) const { return cosine(index(a), index(b)); }

  // The k nearest other words by cosine, best first; equal scores are ordered by token.
  std::vector<std::pair<Token, double>> most_similar(const Token& t, std::size_t k) const {
    const std::size_t q = index(t);
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(size());
    for (std::size_t i = 0; i < size(); ++i)
      if (i != q) scored.emplace_back(cosine(q, i), i);
    k = std::min(k, scored.size());
    auto better = [&](const auto& x, const auto& y) {
      if (x.first != y.first) return x.first > y.first;
      return words_[x.second] < words_[y.second];
    };
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(), better);
    std::vector<std::pair<Token, double>> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.emplace_back(words_[scored[i].second], scored[i].first);
    return out;
  }

  // word2vec text format: "count dim" header, then "word v1 ... vdim" per line.
  void save(std::ostream& out) const {
    out << size() << ' ' << dim_ << '\n';
    char buf[32];
    for (std::size_t i = 0; i < size(); ++i) {
      out << words_[i];
      for (float x : vector(i)) {
        std::snprintf(buf, sizeof buf, " %.9g", static_cast<double>(x));
        out << buf;
      }
      out << '\n';
    }
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write embedding file: " + path);
    save(out);
    if (!out) throw IoError("write failure on embedding file: " + path);
  }

  static EmbeddingModel load(std::istream& in, const std::string& source) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError(source, 1, "missing header");
    std::istringstream hs(line);
    std::size_t count = 0;
    int dim = 0;
    std::string extra;
    if (!(hs >> count >> dim) || dim < 1 || (hs >> extra)) throw ParseError(source, 1, "malformed header, expected 'count dim'");

    std::vector<Token> words;
    std::vector<std::vector<float>> vecs;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (words.size() == count) throw ParseError(source, lineno, "more vectors than the header declares");
      std::istringstream ls(line);
      std::string word;
      ls >> word;
      std::vector<float> v;
      v.reserve(static_cast<std::size_t>(dim));
      std::string field;
      while (ls >> field) {
        float x = 0;
        const char* b = field.data();
        char* end = nullptr;
        x = std::strtof(b, &end);
        if (end != b + field.size() || !std::isfinite(x)) throw ParseError(source, lineno, "bad number '" + field + "'");
        v.push_back(x);
      }
      if (static_cast<int>(v.size()) != dim)
        throw ParseError(source, lineno, "expected " + std::to_string(dim) + " values, found " + std::to_string(v.size()));
      words.push_back(std::move(word));
      vecs.push_back(std::move(v));
    }
    if (words.size() != count)
      throw ParseError(source, lineno, "header declares " + std::to_string(count) + " vectors, found " +
                                           std::to_string(words.size()));
    EmbeddingModel m = from_vectors(std::move(words), vecs);
    m.dim_ = dim;
    if (m.index_.size() != m.words_.size()) throw ParseError(source, 1, "duplicate word in embedding file");
    return m;
  }

  static EmbeddingModel load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open embedding file: " + path);
    return load(in, path);
  }

 private:
  void reindex() {
    index_.clear();
    for (std::size_t i = 0; i < words_.size(); ++i) index_.emplace(words_[i], i);
    norms_.assign(words_.size(), 0.0);
    for (std::size_t i = 0; i < words_.size(); ++i) {
      double s = 0;
      for (float x : vector(i)) s += static_cast<double>(x) * static_cast<double>(x);
      norms_[i] = std::sqrt(s);
    }
  }

  std::vector<Token> words_;
  std::unordered_map<Token, std::size_t> index_;
  std::vector<float> data_;  // row-major, size() x dim_
  std::vector<double> norms_;
  int dim_ = 0;
  bool trained_ = false;
};

namespace detail {

// Uniform double in [0, 1) from the top 53 bits.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace detail

template <typename Range>
EmbeddingModel EmbeddingModel::train(const Range& corpus, const TrainConfig& cfg) {
  cfg.validate();

  std::unordered_map<Token, std::uint64_t> freq;
  for (const Sentence& s : corpus)
    for (const auto& t : s.tokens) ++freq[t];

  std::vector<std::pair<Token, std::uint64_t>> vocab;
  for (auto& [t, c] : freq)
    if (c >= cfg.min_count) vocab.emplace_back(t, c);
  if (vocab.empty())
    throw EmptyVocabulary("embedding training: no token occurs at least " + std::to_string(cfg.min_count) + " times");
  std::sort(vocab.begin(), vocab.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });

  EmbeddingModel m;
  m.dim_ = cfg.dim;
  const std::size_t n = vocab.size();
  const auto dim = static_cast<std::size_t>(cfg.dim);
  m.words_.reserve(n);
  for (const auto& [t, c] : vocab) m.words_.push_back(t);
  for (std::size_t i = 0; i < n; ++i) m.index_.emplace(m.words_[i], i);

  std::vector<std::vector<std::uint32_t>> encoded;
  std::uint64_t train_words = 0;
  for (const Sentence& s : corpus) {
    std::vector<std::uint32_t> ids;
    ids.reserve(s.tokens.size());
    for (const auto& t : s.tokens) {
      auto it = m.index_.find(t);
      if (it != m.index_.end()) ids.push_back(static_cast<std::uint32_t>(it->second));
    }
    train_words += ids.size();
    if (ids.size() > 1) encoded.push_back(std::move(ids));
  }

  std::mt19937_64 rng(cfg.rng_seed);
  m.data_.resize(n * dim);
  for (auto& x : m.data_) x = static_cast<float>((detail::unit_uniform(rng) - 0.5) / cfg.dim);
  std::vector<float> out(n * dim, 0.0f);

  // Negative-sampling distribution: unigram counts raised to 0.75.
  std::vector<double> cumulative(n);
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += std::pow(static_cast<double>(vocab[i].second), 0.75);
    cumulative[i] = acc;
  }
  auto draw_negative = [&]() -> std::uint32_t {
    const double r = detail::unit_uniform(rng) * acc;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
    if (it == cumulative.end()) --it;
    return static_cast<std::uint32_t>(it - cumulative.begin());
  };

  std::vector<double> keep_prob(n, 1.0);
  if (cfg.subsample_threshold > 0) {
    const double t = cfg.subsample_threshold * static_cast<double>(train_words);
    for (std::size_t i = 0; i < n; ++i) {
      const double c = static_cast<double>(vocab[i].second);
      keep_prob[i] = std::min(1.0, (std::sqrt(c / t) + 1.0) * t / c);
    }
  }

  const double total = static_cast<double>(train_words) * cfg.epochs;
  std::uint64_t processed = 0;

  std::vector<float> d_center(dim), d_positive(dim);
  std::vector<std::vector<float>> d_neg_store(static_cast<std::size_t>(cfg.negative_samples), std::vector<float>(dim));
  std::vector<std::span<const float>> neg_views;
  std::vector<std::span<float>> d_neg_views;
  std::vector<std::uint32_t> negs;
  std::vector<std::uint32_t> kept;

  auto row = [&](std::vector<float>& mat, std::uint32_t i) { return std::span<float>(mat.data() + i * dim, dim); };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& sent : encoded) {
      kept.clear();
      for (auto id : sent)
        if (keep_prob[id] >= 1.0 || detail::unit_uniform(rng) < keep_prob[id]) kept.push_back(id);
      processed += sent.size();
      const double progress = std::min(1.0, static_cast<double>(processed) / total);
      const auto lr = static_cast<float>(cfg.initial_lr - (cfg.initial_lr - cfg.final_lr) * progress);

      for (std::size_t i = 0; i < kept.size(); ++i) {
        const auto reduced = static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(cfg.window));
        const std::size_t w = static_cast<std::size_t>(cfg.window) - reduced;
        const std::size_t lo = i >= w ? i - w : 0;
        const std::size_t hi = std::min(kept.size() - 1, i + w);
        for (std::size_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          const std::uint32_t center = kept[i];
          const std::uint32_t context = kept[j];

          negs.clear();
          for (int k = 0; k < cfg.negative_samples; ++k) {
            const auto neg = draw_negative();
            if (neg != context) negs.push_back(neg);
          }
          neg_views.clear();
          d_neg_views.clear();
          for (std::size_t k = 0; k < negs.size(); ++k) {
            neg_views.emplace_back(row(out, negs[k]));
            d_neg_views.emplace_back(d_neg_store[k]);
          }
          auto v = row(m.data_, center);
          auto u = row(out, context);
          sgns::gradient<float>(v, u, neg_views, d_center, d_positive, d_neg_views);
          for (std::size_t d = 0; d < dim; ++d) u[d] -= lr * d_positive[d];
          for (std::size_t k = 0; k < negs.size(); ++k) {
            auto un = row(out, negs[k]);
            for (std::size_t d = 0; d < dim; ++d) un[d] -= lr * d_neg_store[k][d];
          }
          for (std::size_t d = 0; d < dim; ++d) v[d] -= lr * d_center[d];
        }
      }
    }
  }

  for (float x : m.data_)
    if (!std::isfinite(x)) throw Error("embedding training diverged (non-finite vector entry)");
  m.reindex();
  m.trained_ = true;
  return m;
}

}  // namespace petdet
