// Brute-force reference implementations used only by the tests. They are
// written from the formulas, share no code with the library, and favour
// obviousness over speed.
#ifndef LOGLG_TESTS_ORACLES_HPP_
#define LOGLG_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

using Doc = std::vector<std::string>;

inline double tf(const std::vector<Doc>& docs, const std::vector<int>& labels, const std::string& w, int t) {
  double n = 0;
  for (std::size_t i = 0; i < docs.size(); ++i)
    if (labels[i] == t)
      for (const auto& tok : docs[i]) n += tok == w;
  return n;
}

inline double df(const std::vector<Doc>& docs, const std::string& w) {
  double n = 0;
  for (const auto& d : docs) n += std::find(d.begin(), d.end(), w) != d.end();
  return n;
}

inline double score(const std::vector<Doc>& docs, const std::vector<int>& labels, const std::string& w, int t, int M) {
  const double N = static_cast<double>(docs.size());
  const double idf = std::log((N + 1.0) / (df(docs, w) + 1.0)) + 1.0;
  double p = 1.0;
  for (int i = 0; i < M; ++i) p *= idf;
  return tf(docs, labels, w, t) * p;
}

/// Top-Z words of class t: score desc, TF desc, word asc; zero-TF words are
/// never selected.
inline std::vector<std::string> top(const std::vector<Doc>& docs, const std::vector<int>& labels, int t, std::size_t Z,
                                    int M, const std::set<std::string>& excluded) {
  std::set<std::string> vocab;
  for (const auto& d : docs) vocab.insert(d.begin(), d.end());
  std::vector<std::string> cand;
  for (const auto& w : vocab)
    if (!excluded.count(w) && tf(docs, labels, w, t) > 0) cand.push_back(w);
  std::sort(cand.begin(), cand.end(), [&](const std::string& a, const std::string& b) {
    const double sa = score(docs, labels, a, t, M), sb = score(docs, labels, b, t, M);
    if (sa != sb) return sa > sb;
    const double ta = tf(docs, labels, a, t), tb = tf(docs, labels, b, t);
    if (ta != tb) return ta > tb;
    return a < b;
  });
  if (cand.size() > Z) cand.resize(Z);
  return cand;
}

/// Unordered co-occurrence counts: every pair of positions i < j with
/// j - i <= window whose tokens are distinct keywords.
inline std::map<std::pair<std::string, std::string>, long> cooccurrence(const std::vector<Doc>& docs,
                                                                        const std::set<std::string>& keywords,
                                                                        std::size_t window) {
  std::map<std::pair<std::string, std::string>, long> F;
  for (const auto& d : docs)
    for (std::size_t i = 0; i < d.size(); ++i)
      for (std::size_t j = 0; j < d.size(); ++j) {
        if (!(i < j) || j - i > window) continue;
        if (!keywords.count(d[i]) || !keywords.count(d[j]) || d[i] == d[j]) continue;
        const auto key = d[i] < d[j] ? std::make_pair(d[i], d[j]) : std::make_pair(d[j], d[i]);
        ++F[key];
      }
  return F;
}

/// Two-pass mean and unbiased variance.
inline std::pair<double, double> mean_var(const std::vector<double>& xs) {
  double sum = 0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  double ss = 0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, ss / static_cast<double>(xs.size() - 1)};
}

/// -1 abstain, else argmax of summed keyword TF with ties to 0.
inline int vote(const Doc& d, const std::set<std::string>& normal, const std::set<std::string>& anomaly) {
  int c0 = 0, c1 = 0;
  for (const auto& tok : d) {
    c0 += normal.count(tok) ? 1 : 0;
    c1 += anomaly.count(tok) ? 1 : 0;
  }
  if (c0 == 0 && c1 == 0) return -1;
  return c1 > c0 ? 1 : 0;
}

}  // namespace oracle

#endif  // LOGLG_TESTS_ORACLES_HPP_
