// Small corpus builders shared by the test files.
#ifndef LOGLG_TESTS_FIXTURES_HPP_
#define LOGLG_TESTS_FIXTURES_HPP_

#include <random>
#include <string>
#include <vector>

#include "loglg/ingest.hpp"
#include "loglg/keywords.hpp"

namespace fixture {

inline std::vector<loglg::LogSequence> to_sequences(const std::vector<std::vector<std::string>>& docs) {
  std::vector<loglg::LogSequence> out;
  for (std::size_t i = 0; i < docs.size(); ++i) out.emplace_back("s" + std::to_string(i), docs[i]);
  return out;
}

/// Documents over w0..w{vocab-1} with a skewed word distribution, plus the
/// occasional sentinel and stopword so exclusion rules get exercised.
inline std::vector<std::vector<std::string>> random_docs(std::size_t n, std::size_t vocab, std::size_t max_len,
                                                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::geometric_distribution<std::size_t> word(0.15);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<std::vector<std::string>> docs(n);
  for (auto& d : docs) {
    const std::size_t L = len(rng);
    for (std::size_t i = 0; i < L; ++i) {
      const double r = u(rng);
      if (r < 0.05)
        d.push_back("[Num]");
      else if (r < 0.1)
        d.push_back("the");
      else
        d.push_back("w" + std::to_string(word(rng) % vocab));
    }
  }
  return docs;
}

inline std::vector<int> random_labels(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<int> labels(n);
  for (auto& l : labels) l = static_cast<int>(rng() % 2);
  labels[0] = 0;
  labels[1] = 1;
  return labels;
}

inline std::vector<loglg::Label> to_labels(const std::vector<int>& ls) {
  std::vector<loglg::Label> out;
  for (int l : ls) out.push_back(loglg::label_from_index(l));
  return out;
}

inline loglg::KeywordSet keyword_set(const std::vector<std::string>& normal, const std::vector<std::string>& anomaly) {
  loglg::KeywordSet ks;
  double s = 1.0 + static_cast<double>(normal.size());
  for (const auto& w : normal) ks.lists[0].push_back({w, s -= 1.0});
  s = 1.0 + static_cast<double>(anomaly.size());
  for (const auto& w : anomaly) ks.lists[1].push_back({w, s -= 1.0});
  return ks;
}

}  // namespace fixture

#endif  // LOGLG_TESTS_FIXTURES_HPP_
