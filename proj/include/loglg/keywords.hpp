#ifndef LOGLG_KEYWORDS_HPP_
#define LOGLG_KEYWORDS_HPP_

#include <array>
#include <cstddef>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "loglg/common.hpp"
#include "loglg/ingest.hpp"

namespace loglg {

struct ScoredKeyword {
  std::string word;
  Scalar score = 0;

  bool operator==(const ScoredKeyword&) const = default;
};

/// Class-indexed keyword lists: lists[0] is Normal, lists[1] is Anomaly.
/// Each list is sorted by non-increasing score with unique words.
struct KeywordSet {
  std::array<std::vector<ScoredKeyword>, 2> lists;
  std::size_t iteration = 0;

  const std::vector<ScoredKeyword>& of(int t) const { return lists.at(t); }
  std::vector<std::string> words(int t) const;
  /// Union of both classes' words.
  std::set<std::string> all_words() const;
  bool empty() const { return lists[0].empty() && lists[1].empty(); }

  bool operator==(const KeywordSet&) const = default;
};

/// A corpus paired with one predicted label per sequence.
struct ClassifiedCorpus {
  std::span<const LogSequence> sequences;
  std::vector<Label> labels;

  ClassifiedCorpus(std::span<const LogSequence> seqs, std::vector<Label> labs);
  std::size_t class_count(int t) const;
};

/// Term statistics of a classified corpus: per-class raw term counts and
/// document frequencies over all sequences.
class TermStats {
 public:
  explicit TermStats(const ClassifiedCorpus& corpus);

  std::size_t tf(const std::string& word, int t) const;
  std::size_t df(const std::string& word) const;
  std::size_t num_sequences() const { return n_; }
  std::size_t class_size(int t) const { return class_sizes_[t]; }

  /// ln((N + 1) / (df + 1)) + 1
  Scalar idf(const std::string& word) const;
  /// TF(w, C_t) * IDF(w)^M
  Scalar score(const std::string& word, int t, int M) const;

  /// Every distinct token with its counts, in lexicographic order.
  std::vector<std::string> vocabulary() const;

 private:
  struct Entry {
    std::array<std::size_t, 2> tf{0, 0};
    std::size_t df = 0;
  };
  std::unordered_map<std::string, Entry> entries_;
  std::size_t n_ = 0;
  std::array<std::size_t, 2> class_sizes_{0, 0};
};

/// Score of one word for class t. Throws for M <= 0 or an empty class.
Scalar score(const std::string& word, int t, const ClassifiedCorpus& corpus, int M);

/// The 30-word default exclusion list.
const std::unordered_set<std::string>& default_stopwords();
std::unordered_set<std::string> read_stopwords(std::istream& in);

struct ExtractResult {
  KeywordSet keywords;
  /// Set when a class had fewer than Z candidate words.
  std::array<bool, 2> short_list{false, false};
};

/// Top-Z words per class by score; ties go to higher TF, then lexicographic order.
/// `[Num]` and stopwords are never selected.
ExtractResult extract_top(const ClassifiedCorpus& corpus, std::size_t Z, int M,
                          const std::unordered_set<std::string>& stopwords = default_stopwords());

/// Fraction of the current keyword union absent from the previous union.
Scalar drift(const KeywordSet& current, const KeywordSet& previous);

nlohmann::ordered_json to_json(const KeywordSet& ks);
KeywordSet keyword_set_from_json(const nlohmann::json& j);

}  // namespace loglg

#endif  // LOGLG_KEYWORDS_HPP_
