#include "loglg/keywords.hpp"

#include <algorithm>
#include <cmath>
#include <istream>

namespace loglg {

std::vector<std::string> KeywordSet::words(int t) const {
  std::vector<std::string> out;
  out.reserve(lists.at(t).size());
  for (const auto& k : lists[t]) out.push_back(k.word);
  return out;
}

std::set<std::string> KeywordSet::all_words() const {
  std::set<std::string> out;
  for (const auto& list : lists)
    for (const auto& k : list) out.insert(k.word);
  return out;
}

ClassifiedCorpus::ClassifiedCorpus(std::span<const LogSequence> seqs, std::vector<Label> labs)
    : sequences(seqs), labels(std::move(labs)) {
  if (sequences.size() != labels.size())
    throw Error(Errc::invalid_argument, "classified corpus: label count does not match sequence count");
}

std::size_t ClassifiedCorpus::class_count(int t) const {
  return static_cast<std::size_t>(
      std::count_if(labels.begin(), labels.end(), [t](Label l) { return to_index(l) == t; }));
}

TermStats::TermStats(const ClassifiedCorpus& corpus) : n_(corpus.sequences.size()) {
  std::unordered_set<std::string_view> seen;
  for (std::size_t i = 0; i < corpus.sequences.size(); ++i) {
    const int t = to_index(corpus.labels[i]);
    ++class_sizes_[t];
    seen.clear();
    for (const auto& tok : corpus.sequences[i].tokens()) {
      auto& e = entries_[tok];
      ++e.tf[t];
      if (seen.insert(tok).second) ++e.df;
    }
  }
}

std::size_t TermStats::tf(const std::string& word, int t) const {
  auto it = entries_.find(word);
  return it == entries_.end() ? 0 : it->second.tf[t];
}

std::size_t TermStats::df(const std::string& word) const {
  auto it = entries_.find(word);
  return it == entries_.end() ? 0 : it->second.df;
}

Scalar TermStats::idf(const std::string& word) const {
  return std::log((static_cast<Scalar>(n_) + 1.0) / (static_cast<Scalar>(df(word)) + 1.0)) + 1.0;
}

Scalar TermStats::score(const std::string& word, int t, int M) const {
  if (M <= 0) throw Error(Errc::invalid_argument, "IDF exponent M must be a positive integer");
  const std::size_t count = tf(word, t);
  if (count == 0) return 0.0;
  return static_cast<Scalar>(count) * std::pow(idf(word), M);
}

std::vector<std::string> TermStats::vocabulary() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [w, e] : entries_) out.push_back(w);
  std::sort(out.begin(), out.end());
  return out;
}

Scalar score(const std::string& word, int t, const ClassifiedCorpus& corpus, int M) {
  if (M <= 0) throw Error(Errc::invalid_argument, "IDF exponent M must be a positive integer");
  if (corpus.class_count(t) == 0) throw Error(Errc::invalid_argument, "score: class has no sequences");
  return TermStats(corpus).score(word, t, M);
}

const std::unordered_set<std::string>& default_stopwords() {
  static const std::unordered_set<std::string> words = {
      "the", "a",    "an",  "and",   "or",   "of",    "to",    "in",  "on",  "at",
      "for", "from", "by",  "with",  "is",   "are",   "was",   "were", "be", "been",
      "being", "it", "its", "this", "that", "these", "those", "as",  "has", "have"};
  return words;
}

std::unordered_set<std::string> read_stopwords(std::istream& in) {
  std::unordered_set<std::string> out;
  std::string w;
  while (in >> w) {
    if (w.front() == '#') {
      std::getline(in, w);
      continue;
    }
    std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return std::tolower(c); });
    out.insert(w);
  }
  return out;
}

ExtractResult extract_top(const ClassifiedCorpus& corpus, std::size_t Z, int M,
                          const std::unordered_set<std::string>& stopwords) {
  if (Z == 0) throw Error(Errc::invalid_argument, "Z must be positive");
  if (M <= 0) throw Error(Errc::invalid_argument, "IDF exponent M must be a positive integer");
  if (corpus.class_count(0) == 0 || corpus.class_count(1) == 0)
    throw Error(Errc::degenerate, "extract_top: both classes need at least one sequence");

  const TermStats stats(corpus);
  const auto vocab = stats.vocabulary();
  ExtractResult result;
  for (int t = 0; t < 2; ++t) {
    struct Candidate {
      const std::string* word;
      Scalar score;
      std::size_t tf;
    };
    std::vector<Candidate> cands;
    for (const auto& w : vocab) {
      if (w == kNumSentinel || w == kEmptyWindowToken || stopwords.count(w)) continue;
      const std::size_t tf = stats.tf(w, t);
      if (tf == 0) continue;
      cands.push_back({&w, stats.score(w, t, M), tf});
    }
    const std::size_t keep = std::min(Z, cands.size());
    result.short_list[t] = cands.size() < Z;
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                      [](const Candidate& a, const Candidate& b) {
                        if (a.score != b.score) return a.score > b.score;
                        if (a.tf != b.tf) return a.tf > b.tf;
                        return *a.word < *b.word;
                      });
    auto& list = result.keywords.lists[t];
    list.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) list.push_back({*cands[i].word, cands[i].score});
  }
  return result;
}

Scalar drift(const KeywordSet& current, const KeywordSet& previous) {
  const auto cur = current.all_words();
  if (cur.empty()) throw Error(Errc::invalid_argument, "drift: current keyword set is empty");
  const auto prev = previous.all_words();
  std::size_t fresh = 0;
  for (const auto& w : cur)
    if (!prev.count(w)) ++fresh;
  return static_cast<Scalar>(fresh) / static_cast<Scalar>(cur.size());
}

nlohmann::ordered_json to_json(const KeywordSet& ks) {
  auto list = [](const std::vector<ScoredKeyword>& l) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& k : l) arr.push_back({k.word, k.score});
    return arr;
  };
  nlohmann::ordered_json j;
  j["iteration"] = ks.iteration;
  j["normal"] = list(ks.lists[0]);
  j["anomaly"] = list(ks.lists[1]);
  return j;
}

KeywordSet keyword_set_from_json(const nlohmann::json& j) {
  KeywordSet ks;
  ks.iteration = j.at("iteration").get<std::size_t>();
  const char* keys[2] = {"normal", "anomaly"};
  for (int t = 0; t < 2; ++t)
    for (const auto& pair : j.at(keys[t])) ks.lists[t].push_back({pair.at(0).get<std::string>(), pair.at(1).get<Scalar>()});
  return ks;
}

}  // namespace loglg
