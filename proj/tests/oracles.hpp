#pragma once

// Independent reference computations. Nothing here calls into the library
// code paths it is used to check.

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace petdet::oracle {

using Words = std::vector<std::string>;

struct BruteCounts {
  std::map<std::string, long> uni;
  std::map<std::pair<std::string, std::string>, long> bi;
};

inline BruteCounts count(const std::vector<Words>& corpus) {
  BruteCounts c;
  for (const auto& s : corpus) {
    for (const auto& w : s) c.uni[w] += 1;
    for (std::size_t i = 1; i < s.size(); ++i) c.bi[{s[i - 1], s[i]}] += 1;
  }
  return c;
}

// All adjacent pairs passing (n_ab - m) * V / (n_a * n_b) > threshold, with
// V = number of words occurring at least m times.
inline std::set<std::pair<std::string, std::string>> accepted_pairs(const std::vector<Words>& corpus, long m,
                                                                    double threshold) {
  const auto c = count(corpus);
  long vocab = 0;
  for (const auto& [w, n] : c.uni)
    if (n >= m) ++vocab;
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& s : corpus) {
    for (std::size_t i = 1; i < s.size(); ++i) {
      const long na = c.uni.at(s[i - 1]);
      const long nb = c.uni.at(s[i]);
      const long nab = c.bi.at({s[i - 1], s[i]});
      if (na < m || nb < m || nab < m) continue;
      const double score = double(nab - m) * double(vocab) / (double(na) * double(nb));
      if (score > threshold) out.insert({s[i - 1], s[i]});
    }
  }
  return out;
}

// Central finite-difference gradient of f at x.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = f(x);
    x[i] = orig - h;
    const double fm = f(x);
    x[i] = orig;
    g[i] = (fp - fm) / (2 * h);
  }
  return g;
}

// Plain-double cosine.
inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return d / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace petdet::oracle
