#ifndef LOGLG_EVAL_HPP_
#define LOGLG_EVAL_HPP_

#include <cstdint>
#include <istream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "loglg/classifier.hpp"
#include "loglg/common.hpp"
#include "loglg/ingest.hpp"

namespace loglg {

/// Confusion counts with Anomaly as the positive class.
struct Metrics {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0, recall = 0, f1 = 0;
  /// "precision_undefined", "recall_undefined", "f1_undefined" when the
  /// matching denominator is zero (the value is then reported as 0).
  std::vector<std::string> flags;

  bool operator==(const Metrics&) const = default;
};

Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);

/// Every prediction id must have a gold label and vice versa.
Metrics score(std::span<const Prediction> predictions, const std::unordered_map<std::string, Label>& gold);
/// Gold labels taken from the corpus; every sequence must carry one.
Metrics score(std::span<const Prediction> predictions, std::span<const LogSequence> gold_corpus);

std::unordered_map<std::string, Label> gold_map(std::span<const LogSequence> corpus);

nlohmann::ordered_json to_json(const Metrics& m);

/// Template-based corpus: every sequence is a run of lines and every line is
/// a fixed word template, the way parsed-free logs repeat message formats.
struct SyntheticSpec {
  std::size_t n_sequences = 2000;
  double anomaly_rate = 0.1;
  /// Left empty, each vocabulary is generated with the matching size.
  std::vector<std::string> normal_vocab, anomaly_vocab, shared_vocab;
  std::size_t normal_vocab_size = 1000, anomaly_vocab_size = 400, shared_vocab_size = 20;
  std::size_t normal_templates = 200, anomaly_templates = 100;
  std::size_t template_min_words = 4, template_max_words = 8;
  /// Probability a template position holds a shared word.
  double shared_fraction = 0.3;
  /// Lines per sequence, uniform in [min_lines, max_lines].
  std::size_t min_lines = 5, max_lines = 15;
  /// Probability a line of an anomaly sequence uses an anomaly template; at
  /// least one line always does.
  double anomaly_line_fraction = 0.3;
  /// Probability an emitted non-shared token is replaced by a word of the
  /// other class's vocabulary.
  double noise_rate = 0.1;
  /// Zipf exponent for template choice and template word choice (0 = uniform).
  double zipf = 1.0;
  std::uint64_t seed = 1;
};

struct SyntheticCorpus {
  std::vector<LogSequence> sequences;  // gold labels attached
  std::vector<std::string> normal_vocab, anomaly_vocab, shared_vocab;
  std::vector<std::vector<std::string>> normal_templates, anomaly_templates;
  /// The two most frequent words of the anomaly templates.
  std::vector<std::string> seed_keywords;
};

/// Exactly round(n * anomaly_rate) anomaly sequences at seeded positions.
SyntheticCorpus generate_synthetic(const SyntheticSpec& spec);

enum class DatasetKind { hdfs, bgl, thunderbird, hadoop, openstack };
DatasetKind dataset_kind_from_string(const std::string& s);
std::string to_string(DatasetKind k);

/// Parse a LogHub-format sample. BGL and Thunderbird carry a per-line alert
/// tag ("-" is normal); the other kinds come without labels. Throws
/// Errc::bad_format naming the first line that does not match.
std::vector<RawLogRecord> load_loghub_sample(std::istream& in, DatasetKind kind);

/// HDFS anomaly_label.csv ("BlockId,Label" header, Normal/Anomaly values).
std::unordered_map<std::string, Label> read_block_labels(std::istream& in);
/// "line_no,0|1" per line (0-based line numbers); used for Hadoop/OpenStack.
void apply_line_labels(std::vector<RawLogRecord>& records, std::istream& in);
/// Attach block labels to grouped sequences; unknown blocks stay unlabeled.
void apply_block_labels(std::vector<LogSequence>& sequences, const std::unordered_map<std::string, Label>& labels);

/// HDFS groups by block id; every other kind uses fixed windows.
std::vector<LogSequence> make_sequences(std::span<const RawLogRecord> records, DatasetKind kind,
                                        std::size_t window_size = 20);

/// First floor(fraction * n) items for training, the rest for testing.
std::pair<std::vector<LogSequence>, std::vector<LogSequence>> chronological_split(
    std::span<const LogSequence> corpus, double train_fraction = 0.8);

}  // namespace loglg

#endif  // LOGLG_EVAL_HPP_
