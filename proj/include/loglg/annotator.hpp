#ifndef LOGLG_ANNOTATOR_HPP_
#define LOGLG_ANNOTATOR_HPP_

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "loglg/adam.hpp"
#include "loglg/common.hpp"
#include "loglg/event_graph.hpp"
#include "loglg/ingest.hpp"
#include "loglg/keywords.hpp"
#include "loglg/walk_sampler.hpp"

namespace loglg {

enum class Activation { relu, tanh, identity };

struct AnnotatorShape {
  std::size_t input_width = 0;  // 2 + |V|
  std::size_t hidden = 64;
  std::size_t layers = 3;
  Activation activation = Activation::relu;

  bool operator==(const AnnotatorShape&) const = default;
};

/// GIN graph classifier. Layer k maps
///   R_v <- MLP_k( sum_{u in N(v)} R_u + (1 + eps_k) R_v )
/// with MLP_k = Linear -> activation -> Linear. The graph representation is
/// the concatenation of per-layer vertex sums for layers 0..K, and a linear
/// head maps it to two logits.
///
/// All parameters live in one flat vector; the accessors below are views
/// into it, so optimizers and finite-difference checks can treat the model
/// as a single point in parameter space.
class AnnotatorModel {
 public:
  AnnotatorModel() = default;
  explicit AnnotatorModel(AnnotatorShape shape, std::string vocab_hash = {});

  static std::size_t parameter_count(const AnnotatorShape& shape);

  /// Glorot-uniform weights, zero biases, eps_k = 0.
  void init(Rng& rng);

  /// Width-preserving identity model: W = I, zero biases, eps = 0, identity
  /// activation. Used to check the update rule in isolation.
  static AnnotatorModel identity(std::size_t width, std::size_t layers);

  const AnnotatorShape& shape() const { return shape_; }
  std::size_t readout_width() const { return shape_.input_width + shape_.layers * shape_.hidden; }
  std::size_t layer_input(std::size_t k) const { return k == 0 ? shape_.input_width : shape_.hidden; }

  Vector& parameters() { return params_; }
  const Vector& parameters() const { return params_; }

  const std::string& vocab_hash() const { return vocab_hash_; }

  // Views for layer k in [0, layers).
  Eigen::Map<Matrix> w1(std::size_t k) { return mat(off_[k].w1, shape_.hidden, layer_input(k)); }
  Eigen::Map<const Matrix> w1(std::size_t k) const { return cmat(off_[k].w1, shape_.hidden, layer_input(k)); }
  Eigen::Map<Vector> b1(std::size_t k) { return vec(off_[k].b1, shape_.hidden); }
  Eigen::Map<const Vector> b1(std::size_t k) const { return cvec(off_[k].b1, shape_.hidden); }
  Eigen::Map<Matrix> w2(std::size_t k) { return mat(off_[k].w2, shape_.hidden, shape_.hidden); }
  Eigen::Map<const Matrix> w2(std::size_t k) const { return cmat(off_[k].w2, shape_.hidden, shape_.hidden); }
  Eigen::Map<Vector> b2(std::size_t k) { return vec(off_[k].b2, shape_.hidden); }
  Eigen::Map<const Vector> b2(std::size_t k) const { return cvec(off_[k].b2, shape_.hidden); }
  Scalar& eps(std::size_t k) { return params_(static_cast<Eigen::Index>(off_[k].eps)); }
  Scalar eps(std::size_t k) const { return params_(static_cast<Eigen::Index>(off_[k].eps)); }
  Eigen::Map<Matrix> head_w() { return mat(head_w_, 2, readout_width()); }
  Eigen::Map<const Matrix> head_w() const { return cmat(head_w_, 2, readout_width()); }
  Eigen::Map<Vector> head_b() { return vec(head_b_, 2); }
  Eigen::Map<const Vector> head_b() const { return cvec(head_b_, 2); }

  /// Named parameter tensors as (name, offset, size), in layout order.
  struct Tensor {
    std::string name;
    std::size_t offset;
    std::size_t size;
  };
  std::vector<Tensor> tensors() const;

 private:
  struct LayerOffsets {
    std::size_t w1, b1, w2, b2, eps;
  };

  Eigen::Map<Matrix> mat(std::size_t off, std::size_t r, std::size_t c) {
    return {params_.data() + off, static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)};
  }
  Eigen::Map<const Matrix> cmat(std::size_t off, std::size_t r, std::size_t c) const {
    return {params_.data() + off, static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)};
  }
  Eigen::Map<Vector> vec(std::size_t off, std::size_t n) { return {params_.data() + off, static_cast<Eigen::Index>(n)}; }
  Eigen::Map<const Vector> cvec(std::size_t off, std::size_t n) const {
    return {params_.data() + off, static_cast<Eigen::Index>(n)};
  }

  AnnotatorShape shape_;
  std::string vocab_hash_;
  Vector params_;
  std::vector<LayerOffsets> off_;
  std::size_t head_w_ = 0, head_b_ = 0;
};

/// Per-layer vertex representations R^(0..K) for a subgraph.
std::vector<Matrix> node_representations(const AnnotatorModel& model, const Subgraph& sg);

/// Two logits. Throws Errc::empty_sequence for an empty subgraph.
Logits forward(const AnnotatorModel& model, const Subgraph& sg);

/// -log softmax(logits)[target]; adds weight * dLoss/dparams into `grad`,
/// a model of the same shape used as a gradient accumulator.
Scalar nll_with_gradient(const AnnotatorModel& model, const Subgraph& sg, int target, Scalar weight,
                         AnnotatorModel& grad);
Scalar nll(const AnnotatorModel& model, const Subgraph& sg, int target);

/// Argmax over classes of summed keyword term frequency. nullopt (abstain)
/// when the sequence holds no keyword; ties go to Normal.
std::optional<Label> vote_label(const LogSequence& seq, const KeywordSet& keywords);

/// Per-class summed keyword term frequencies.
std::array<std::size_t, 2> vote_counts(const LogSequence& seq, const KeywordSet& keywords);

struct TrainOptions {
  std::size_t batch_size = 20;
  AdamConfig adam{};
};

/// Self-supervised pre-training: each step draws `batch_size` walks and
/// takes one Adam step on the mean NLL of the walks' start classes.
/// Returns the per-step loss trace.
std::vector<Scalar> pretrain(AnnotatorModel& model, const WalkSampler& sampler, std::size_t steps,
                             const TrainOptions& opts, Rng& rng);

/// Fine-tune on voting labels of the corpus' sequence subgraphs, skipping
/// abstentions. Throws Errc::degenerate if every sequence abstains.
std::vector<Scalar> finetune(AnnotatorModel& model, std::span<const LogSequence> corpus, const EventGraph& g,
                             const KeywordSet& keywords, std::size_t epochs, const TrainOptions& opts, Rng& rng);

struct PseudoLabel {
  std::string sequence_id;
  Label label = Label::Normal;
  Scalar confidence = 0.5;
  /// Set when the sequence had no graph keyword and the label came from
  /// voting or the Normal default.
  bool fallback = false;

  bool operator==(const PseudoLabel&) const = default;
};

/// Label every sequence. Empty subgraphs fall back to vote_label, then to
/// Normal with confidence 0.5. Rejects a model trained on a different graph.
std::vector<PseudoLabel> annotate(const AnnotatorModel& model, std::span<const LogSequence> corpus,
                                  const EventGraph& g, const KeywordSet& keywords, unsigned threads = 1);

/// Pseudo labels from keyword voting alone (the counting ablation).
std::vector<PseudoLabel> vote_annotate(std::span<const LogSequence> corpus, const KeywordSet& keywords);

nlohmann::ordered_json to_json(const AnnotatorModel& model);
AnnotatorModel annotator_from_json(const nlohmann::json& j);

}  // namespace loglg

#endif  // LOGLG_ANNOTATOR_HPP_
