#ifndef LOGLG_CLASSIFIER_HPP_
#define LOGLG_CLASSIFIER_HPP_

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "loglg/adam.hpp"
#include "loglg/annotator.hpp"
#include "loglg/common.hpp"
#include "loglg/ingest.hpp"
#include "loglg/walk_sampler.hpp"

namespace loglg {

struct Prediction {
  std::string sequence_id;
  Label label = Label::Normal;
  Scalar confidence = 0.5;

  bool operator==(const Prediction&) const = default;
};

struct ClassifierTrainOptions {
  std::size_t epochs = 5;
  std::size_t batch_size = 5;
  AdamConfig adam{1e-3, 0.9, 0.999, 1e-8, 5.0};
};

/// Anything that maps a token sequence to two logits and can be trained with
/// cross-entropy on pseudo labels. The pipeline only talks to this interface.
class SequenceClassifier {
 public:
  virtual ~SequenceClassifier() = default;

  virtual std::string kind() const = 0;
  /// Returns the per-step mean loss. `labels` must carry exactly the corpus ids.
  virtual std::vector<Scalar> train(std::span<const LogSequence> corpus, std::span<const PseudoLabel> labels,
                                    const ClassifierTrainOptions& opts, Rng& rng) = 0;
  virtual Logits logits(const LogSequence& seq) const = 0;
  virtual nlohmann::ordered_json save() const = 0;

  std::vector<Prediction> predict(std::span<const LogSequence> corpus, unsigned threads = 1) const;
};

/// Default classifier: mean of token embeddings (unknown tokens share row 0)
/// followed by Linear -> ReLU -> Linear to two logits. Token order is ignored.
class MeanEmbeddingClassifier final : public SequenceClassifier {
 public:
  static constexpr const char* kKind = "mean-embedding";

  MeanEmbeddingClassifier() = default;
  /// Vocabulary is frozen here: every distinct token of `corpus`.
  MeanEmbeddingClassifier(std::span<const LogSequence> corpus, std::size_t embedding_dim, std::size_t hidden, Rng& rng);
  MeanEmbeddingClassifier(std::vector<std::string> vocab, std::size_t embedding_dim, std::size_t hidden);

  std::string kind() const override { return kKind; }
  std::vector<Scalar> train(std::span<const LogSequence> corpus, std::span<const PseudoLabel> labels,
                            const ClassifierTrainOptions& opts, Rng& rng) override;
  Logits logits(const LogSequence& seq) const override;
  nlohmann::ordered_json save() const override;
  static MeanEmbeddingClassifier load(const nlohmann::json& j);

  /// Cross-entropy of one sequence; adds weight * gradient into `grad`
  /// (a flat vector laid out like parameters()).
  Scalar loss_with_gradient(const LogSequence& seq, int target, Scalar weight, Vector& grad) const;
  Scalar loss(const LogSequence& seq, int target) const;

  Vector& parameters() { return params_; }
  const Vector& parameters() const { return params_; }
  const std::vector<std::string>& vocabulary() const { return vocab_; }
  std::string vocab_hash() const;
  std::size_t embedding_dim() const { return dim_; }
  std::size_t hidden() const { return hidden_; }

  /// Row of a token; 0 is the unknown-token row.
  std::size_t row_of(const std::string& token) const;

  struct Tensor {
    std::string name;
    std::size_t offset;
    std::size_t size;
  };
  std::vector<Tensor> tensors() const;

 private:
  void layout();
  std::vector<std::size_t> rows_for(const LogSequence& seq) const;

  std::vector<std::string> vocab_;
  std::unordered_map<std::string, std::size_t> rows_;
  std::size_t dim_ = 32, hidden_ = 32;
  Vector params_;
  std::size_t emb_ = 0, w1_ = 0, b1_ = 0, w2_ = 0, b2_ = 0;
};

/// Dispatch on the checkpoint's "kind".
std::unique_ptr<SequenceClassifier> load_classifier(const nlohmann::json& j);

/// {"id", "label", "confidence"} per line.
void write_predictions_jsonl(std::ostream& out, std::span<const Prediction> preds);
std::vector<Prediction> read_predictions_jsonl(std::istream& in);

}  // namespace loglg

#endif  // LOGLG_CLASSIFIER_HPP_
