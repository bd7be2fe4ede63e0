#ifndef LOGLG_PIPELINE_HPP_
#define LOGLG_PIPELINE_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "loglg/annotator.hpp"
#include "loglg/classifier.hpp"
#include "loglg/event_graph.hpp"
#include "loglg/ingest.hpp"
#include "loglg/keywords.hpp"

namespace loglg {

enum class AnnotatorMode { full, no_selfsup, counting };
enum class InitMode { seeded, random };

std::string to_string(AnnotatorMode m);
std::string to_string(InitMode m);
AnnotatorMode annotator_mode_from_string(const std::string& s);
InitMode init_mode_from_string(const std::string& s);

struct PipelineConfig {
  // keywords
  std::size_t Z = 100;
  int M = 4;
  // graph
  std::size_t cooccur_window = 10;
  bool directed = false;
  // annotator
  std::size_t layers = 3;
  std::size_t hidden = 64;
  std::size_t annotator_epochs = 30;
  std::size_t finetune_epochs = 3;
  std::size_t annotator_batch = 20;
  double annotator_lr = 1e-4;
  int walk_max_length = 64;
  // classifier
  std::size_t classifier_epochs = 5;
  std::size_t classifier_batch = 5;
  double classifier_lr = 1e-3;
  std::size_t embedding_dim = 32;
  std::size_t classifier_hidden = 32;
  // loop
  double eps_stop = 0.1;
  std::size_t max_iterations = 10;
  std::uint64_t seed = 0;
  AnnotatorMode annotator_mode = AnnotatorMode::full;
  InitMode init_mode = InitMode::seeded;
  std::vector<std::string> seed_keywords{"failed"};
  unsigned threads = 1;

  bool operator==(const PipelineConfig&) const = default;
};

/// Throws Errc::invalid_argument naming the first bad field.
void validate(const PipelineConfig& cfg);

nlohmann::ordered_json to_json(const PipelineConfig& cfg);
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);

/// Sectioned key/value text ([keywords], [graph], [annotator], [classifier],
/// [loop]). Keys absent from the file keep their defaults.
PipelineConfig read_config_ini(std::istream& in);
void write_config_ini(std::ostream& out, const PipelineConfig& cfg);

struct PipelineState {
  KeywordSet keywords;
  std::vector<Label> labels;
  std::size_t iteration = 0;
};

/// Initial keyword set and label split. Seeded mode: sequences containing a
/// seed keyword are Anomaly, the Anomaly list is the seeds that occur, and
/// the Normal list is extracted from the split. Random mode: a seeded,
/// balanced random split followed by extract_top.
PipelineState bootstrap(std::span<const LogSequence> corpus, const PipelineConfig& cfg);

struct StageTimings {
  double graph_ms = 0, pretrain_ms = 0, finetune_ms = 0, annotate_ms = 0, classifier_ms = 0, extract_ms = 0;
};

struct IterationRecord {
  std::size_t iteration = 0;
  KeywordSet keywords;       // used to build this iteration's graph
  KeywordSet next_keywords;  // re-extracted from the classifier's output
  double gamma = 0;
  std::size_t graph_vertices = 0;
  std::size_t graph_edges = 0;
  std::array<std::size_t, 2> pseudo_counts{0, 0};
  std::size_t pseudo_fallbacks = 0;
  std::array<std::size_t, 2> predicted_counts{0, 0};
  std::vector<Scalar> pretrain_loss;
  std::vector<Scalar> finetune_loss;
  std::vector<Scalar> classifier_loss;
  StageTimings timings;
  std::vector<std::string> flags;
};

/// Records without timings are what determinism is judged on.
nlohmann::ordered_json to_json(const IterationRecord& r, bool with_timings = true);

/// Everything one iteration produced; the models are kept so the caller can
/// checkpoint them.
struct IterationOutput {
  PipelineState next;
  IterationRecord record;
  EventGraph graph;
  std::optional<AnnotatorModel> annotator;
  std::vector<PseudoLabel> pseudo_labels;
  std::unique_ptr<SequenceClassifier> classifier;
  std::vector<Prediction> predictions;
};

IterationOutput run_iteration(const PipelineState& state, std::span<const LogSequence> corpus,
                              const PipelineConfig& cfg);

struct RunObserver {
  std::function<void(const IterationOutput&)> on_iteration;
  std::function<void(std::size_t iteration, const std::string& what)> on_failure;
};

struct RunResult {
  std::vector<IterationRecord> records;
  KeywordSet final_keywords;
  bool converged = false;
  EventGraph graph;
  std::optional<AnnotatorModel> annotator;
  std::unique_ptr<SequenceClassifier> classifier;
  std::vector<Prediction> predictions;
};

/// Iterate until keyword drift drops below eps_stop or max_iterations is
/// reached.
RunResult run(std::span<const LogSequence> corpus, const PipelineConfig& cfg, const RunObserver& observer = {});

/// Independent RNG stream for (seed, iteration, stage).
Rng stage_rng(std::uint64_t seed, std::size_t iteration, std::uint32_t stage);

}  // namespace loglg

#endif  // LOGLG_PIPELINE_HPP_
