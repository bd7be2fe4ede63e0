#include "loglg/annotator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <Eigen/SparseCore>

#include "loglg/fpenv.hpp"
#include "loglg/parallel.hpp"

namespace loglg {

AnnotatorModel::AnnotatorModel(AnnotatorShape shape, std::string vocab_hash)
    : shape_(shape), vocab_hash_(std::move(vocab_hash)) {
  if (shape_.input_width < 3 || shape_.hidden == 0 || shape_.layers == 0)
    throw Error(Errc::invalid_argument, "annotator: invalid shape");
  std::size_t off = 0;
  for (std::size_t k = 0; k < shape_.layers; ++k) {
    LayerOffsets o{};
    o.w1 = off;
    off += shape_.hidden * layer_input(k);
    o.b1 = off;
    off += shape_.hidden;
    o.w2 = off;
    off += shape_.hidden * shape_.hidden;
    o.b2 = off;
    off += shape_.hidden;
    o.eps = off;
    off += 1;
    off_.push_back(o);
  }
  head_w_ = off;
  off += 2 * readout_width();
  head_b_ = off;
  off += 2;
  params_ = Vector::Zero(static_cast<Eigen::Index>(off));
}

std::size_t AnnotatorModel::parameter_count(const AnnotatorShape& s) {
  const std::size_t h = s.hidden;
  std::size_t n = 0;
  for (std::size_t k = 0; k < s.layers; ++k) n += h * (k == 0 ? s.input_width : h) + h + h * h + h + 1;
  return n + 2 * (s.input_width + s.layers * h) + 2;
}

void AnnotatorModel::init(Rng& rng) {
  auto glorot = [&rng](Eigen::Map<Matrix> w) {
    const Scalar limit = std::sqrt(6.0 / static_cast<Scalar>(w.rows() + w.cols()));
    std::uniform_real_distribution<Scalar> u(-limit, limit);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = u(rng);
  };
  params_.setZero();
  for (std::size_t k = 0; k < shape_.layers; ++k) {
    glorot(w1(k));
    glorot(w2(k));
  }
  glorot(head_w());
}

AnnotatorModel AnnotatorModel::identity(std::size_t width, std::size_t layers) {
  AnnotatorModel m(AnnotatorShape{width, width, layers, Activation::identity});
  for (std::size_t k = 0; k < layers; ++k) {
    m.w1(k).setIdentity();
    m.w2(k).setIdentity();
  }
  return m;
}

std::vector<AnnotatorModel::Tensor> AnnotatorModel::tensors() const {
  std::vector<Tensor> out;
  for (std::size_t k = 0; k < shape_.layers; ++k) {
    const auto i = std::to_string(k + 1);
    out.push_back({"layer" + i + ".w1", off_[k].w1, shape_.hidden * layer_input(k)});
    out.push_back({"layer" + i + ".b1", off_[k].b1, shape_.hidden});
    out.push_back({"layer" + i + ".w2", off_[k].w2, shape_.hidden * shape_.hidden});
    out.push_back({"layer" + i + ".b2", off_[k].b2, shape_.hidden});
    out.push_back({"layer" + i + ".eps", off_[k].eps, 1});
  }
  out.push_back({"head.w", head_w_, 2 * readout_width()});
  out.push_back({"head.b", head_b_, 2});
  return out;
}

namespace {

Matrix activate(const Matrix& z, Activation a) {
  switch (a) {
    case Activation::relu:
      return z.cwiseMax(0.0);
    case Activation::tanh:
      return z.array().tanh().matrix();
    case Activation::identity:
      break;
  }
  return z;
}

Matrix activation_grad(const Matrix& z, const Matrix& h, Activation a) {
  switch (a) {
    case Activation::relu:
      return (z.array() > 0.0).cast<Scalar>().matrix();
    case Activation::tanh:
      return (1.0 - h.array().square()).matrix();
    case Activation::identity:
      break;
  }
  return Matrix::Ones(z.rows(), z.cols());
}

struct ForwardCache {
  std::vector<Matrix> reps;  // R^(0..K)
  // Layer 0 works on the sparse input directly: pre = M (X W1^T) with
  // M = A + (1 + eps) I, which avoids n x |V| dense products.
  Eigen::SparseMatrix<Scalar> x0;
  Matrix xw0;
  std::vector<Matrix> agg;   // aggregated inputs per layer (k >= 1)
  std::vector<Matrix> pre;   // first linear output per layer
  std::vector<Matrix> hid;   // activated hidden per layer
  Vector readout;
  Logits logits;
};

void run_forward(const AnnotatorModel& m, const Subgraph& sg, ForwardCache& c) {
  if (sg.empty()) throw Error(Errc::empty_sequence, "annotator forward: empty subgraph");
  if (static_cast<std::size_t>(sg.features.cols()) != m.shape().input_width)
    throw Error(Errc::vocab_mismatch, "annotator forward: feature width does not match model input width");
  const std::size_t K = m.shape().layers;
  c.reps.resize(K + 1);
  c.agg.resize(K);
  c.pre.resize(K);
  c.hid.resize(K);
  c.reps[0] = sg.features;
  c.x0 = sg.features.sparseView();
  c.xw0.noalias() = c.x0 * m.w1(0).transpose();
  for (std::size_t k = 0; k < K; ++k) {
    const Matrix& r = c.reps[k];
    if (k == 0) {
      c.pre[0].noalias() = sg.adjacency * c.xw0;
      c.pre[0] += (1.0 + m.eps(0)) * c.xw0;
    } else {
      c.agg[k].noalias() = sg.adjacency * r;
      c.agg[k] += (1.0 + m.eps(k)) * r;
      c.pre[k].noalias() = c.agg[k] * m.w1(k).transpose();
    }
    c.pre[k].rowwise() += m.b1(k).transpose();
    c.hid[k] = activate(c.pre[k], m.shape().activation);
    c.reps[k + 1].noalias() = c.hid[k] * m.w2(k).transpose();
    c.reps[k + 1].rowwise() += m.b2(k).transpose();
  }
  c.readout.resize(static_cast<Eigen::Index>(m.readout_width()));
  Eigen::Index at = 0;
  for (std::size_t k = 0; k <= K; ++k) {
    const Eigen::Index w = c.reps[k].cols();
    c.readout.segment(at, w) = c.reps[k].colwise().sum().transpose();
    at += w;
  }
  c.logits = m.head_w() * c.readout + m.head_b();
}

Scalar log_softmax_at(const Logits& z, int target) {
  const Scalar mx = z.maxCoeff();
  const Scalar lse = mx + std::log((z.array() - mx).exp().sum());
  return z(target) - lse;
}

}  // namespace

std::vector<Matrix> node_representations(const AnnotatorModel& model, const Subgraph& sg) {
  ForwardCache c;
  run_forward(model, sg, c);
  return c.reps;
}

Logits forward(const AnnotatorModel& model, const Subgraph& sg) {
  ForwardCache c;
  run_forward(model, sg, c);
  return c.logits;
}

Scalar nll(const AnnotatorModel& model, const Subgraph& sg, int target) {
  return -log_softmax_at(forward(model, sg), target);
}

Scalar nll_with_gradient(const AnnotatorModel& model, const Subgraph& sg, int target, Scalar weight,
                         AnnotatorModel& g) {
  if (!(g.shape() == model.shape()))
    throw Error(Errc::invalid_argument, "gradient accumulator does not match model shape");
  ForwardCache c;
  run_forward(model, sg, c);
  const Scalar loss = -log_softmax_at(c.logits, target);

  Logits dlogits = (c.logits.array() - c.logits.maxCoeff()).exp().matrix();
  dlogits /= dlogits.sum();
  dlogits(target) -= 1.0;
  dlogits *= weight;

  g.head_w().noalias() += dlogits * c.readout.transpose();
  g.head_b() += dlogits;
  const Vector dread = model.head_w().transpose() * dlogits;

  const std::size_t K = model.shape().layers;
  const Eigen::Index n = static_cast<Eigen::Index>(sg.size());
  std::vector<Eigen::Index> seg_start(K + 1);
  Eigen::Index at = 0;
  for (std::size_t k = 0; k <= K; ++k) {
    seg_start[k] = at;
    at += c.reps[k].cols();
  }

  Matrix drep;  // gradient flowing into R^(k) from layer k+1
  for (std::size_t k = K; k >= 1; --k) {
    const std::size_t layer = k - 1;
    const Eigen::Index w = c.reps[k].cols();
    Matrix dr = dread.segment(seg_start[k], w).transpose().replicate(n, 1);
    if (k < K) dr += drep;

    g.b2(layer) += dr.colwise().sum().transpose();
    g.w2(layer).noalias() += dr.transpose() * c.hid[layer];
    Matrix dpre = (dr * model.w2(layer)).cwiseProduct(activation_grad(c.pre[layer], c.hid[layer], model.shape().activation));
    g.b1(layer) += dpre.colwise().sum().transpose();
    if (layer == 0) {
      Matrix mt_dpre = sg.adjacency.transpose() * dpre;
      mt_dpre += (1.0 + model.eps(0)) * dpre;
      g.w1(0).noalias() += mt_dpre.transpose() * c.x0;
      g.eps(0) += dpre.cwiseProduct(c.xw0).sum();
    } else {
      g.w1(layer).noalias() += dpre.transpose() * c.agg[layer];
      const Matrix dagg = dpre * model.w1(layer);
      g.eps(layer) += dagg.cwiseProduct(c.reps[layer]).sum();
      drep.noalias() = sg.adjacency.transpose() * dagg;
      drep += (1.0 + model.eps(layer)) * dagg;
    }
  }
  return loss;
}

std::array<std::size_t, 2> vote_counts(const LogSequence& seq, const KeywordSet& keywords) {
  std::array<std::unordered_set<std::string_view>, 2> sets;
  for (int t = 0; t < 2; ++t)
    for (const auto& k : keywords.lists[t]) sets[t].insert(k.word);
  std::array<std::size_t, 2> counts{0, 0};
  for (const auto& tok : seq.tokens())
    for (int t = 0; t < 2; ++t)
      if (sets[t].count(tok)) ++counts[t];
  return counts;
}

std::optional<Label> vote_label(const LogSequence& seq, const KeywordSet& keywords) {
  const auto c = vote_counts(seq, keywords);
  if (c[0] == 0 && c[1] == 0) return std::nullopt;
  return c[1] > c[0] ? Label::Anomaly : Label::Normal;
}

namespace {

void check_finite(Scalar loss, const char* phase, std::size_t step, const AdamConfig& adam) {
  if (std::isfinite(loss)) return;
  std::ostringstream msg;
  msg << phase << ": non-finite loss at step " << step << " (lr=" << adam.lr
      << "); the learning rate is too high or gradients exploded";
  throw Error(Errc::non_finite, msg.str());
}

}  // namespace

std::vector<Scalar> pretrain(AnnotatorModel& model, const WalkSampler& sampler, std::size_t steps,
                             const TrainOptions& opts, Rng& rng) {
  if (opts.batch_size == 0) throw Error(Errc::invalid_argument, "pretrain: batch size must be positive");
  const FlushDenormals ftz;
  std::vector<Scalar> trace;
  trace.reserve(steps);
  Adam adam(model.parameters().size(), opts.adam);
  AnnotatorModel grad(model.shape());
  const Scalar w = 1.0 / static_cast<Scalar>(opts.batch_size);
  for (std::size_t s = 0; s < steps; ++s) {
    grad.parameters().setZero();
    Scalar loss = 0;
    for (std::size_t b = 0; b < opts.batch_size; ++b) {
      const WalkSample walk = sampler.sample(rng);
      loss += w * nll_with_gradient(model, walk.subgraph, walk.start_class, w, grad);
    }
    check_finite(loss, "pretrain", s, opts.adam);
    adam.step(model.parameters(), grad.parameters());
    trace.push_back(loss);
  }
  return trace;
}

std::vector<Scalar> finetune(AnnotatorModel& model, std::span<const LogSequence> corpus, const EventGraph& g,
                             const KeywordSet& keywords, std::size_t epochs, const TrainOptions& opts, Rng& rng) {
  if (opts.batch_size == 0) throw Error(Errc::invalid_argument, "finetune: batch size must be positive");
  std::vector<Subgraph> graphs;
  std::vector<int> targets;
  for (const auto& seq : corpus) {
    const auto vote = vote_label(seq, keywords);
    if (!vote) continue;
    Subgraph sg = induce_sequence_subgraph(g, seq);
    if (sg.empty()) continue;
    graphs.push_back(std::move(sg));
    targets.push_back(to_index(*vote));
  }
  if (graphs.empty())
    throw Error(Errc::degenerate, "finetune: every sequence abstains; the keyword set does not cover the corpus");

  std::vector<Scalar> trace;
  if (epochs == 0) return trace;
  const FlushDenormals ftz;
  Adam adam(model.parameters().size(), opts.adam);
  AnnotatorModel grad(model.shape());
  std::vector<std::size_t> order(graphs.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t step = 0;
  for (std::size_t e = 0; e < epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t lo = 0; lo < order.size(); lo += opts.batch_size) {
      const std::size_t hi = std::min(order.size(), lo + opts.batch_size);
      const Scalar w = 1.0 / static_cast<Scalar>(hi - lo);
      grad.parameters().setZero();
      Scalar loss = 0;
      for (std::size_t i = lo; i < hi; ++i)
        loss += w * nll_with_gradient(model, graphs[order[i]], targets[order[i]], w, grad);
      check_finite(loss, "finetune", step++, opts.adam);
      adam.step(model.parameters(), grad.parameters());
      trace.push_back(loss);
    }
  }
  return trace;
}

std::vector<PseudoLabel> annotate(const AnnotatorModel& model, std::span<const LogSequence> corpus,
                                  const EventGraph& g, const KeywordSet& keywords, unsigned threads) {
  if (!model.vocab_hash().empty() && model.vocab_hash() != g.vocab_hash())
    throw Error(Errc::vocab_mismatch, "annotate: model was trained against a different event graph");
  if (model.shape().input_width != g.feature_width())
    throw Error(Errc::vocab_mismatch, "annotate: model input width does not match graph feature width");
  std::vector<PseudoLabel> out(corpus.size());
  parallel_for(corpus.size(), threads, [&](std::size_t i) {
    const auto& seq = corpus[i];
    PseudoLabel& p = out[i];
    p.sequence_id = seq.id();
    const Subgraph sg = induce_sequence_subgraph(g, seq);
    if (sg.empty()) {
      p.fallback = true;
      const auto counts = vote_counts(seq, keywords);
      if (counts[0] + counts[1] == 0) {
        p.label = Label::Normal;
        p.confidence = 0.5;
      } else {
        p.label = counts[1] > counts[0] ? Label::Anomaly : Label::Normal;
        p.confidence = static_cast<Scalar>(std::max(counts[0], counts[1])) / static_cast<Scalar>(counts[0] + counts[1]);
      }
      return;
    }
    const Logits z = forward(model, sg);
    const int t = z(1) > z(0) ? 1 : 0;
    p.label = label_from_index(t);
    p.confidence = std::exp(log_softmax_at(z, t));
  });
  return out;
}

std::vector<PseudoLabel> vote_annotate(std::span<const LogSequence> corpus, const KeywordSet& keywords) {
  std::vector<PseudoLabel> out;
  out.reserve(corpus.size());
  for (const auto& seq : corpus) {
    PseudoLabel p;
    p.sequence_id = seq.id();
    const auto counts = vote_counts(seq, keywords);
    if (counts[0] + counts[1] == 0) {
      p.fallback = true;
    } else {
      p.label = counts[1] > counts[0] ? Label::Anomaly : Label::Normal;
      p.confidence = static_cast<Scalar>(std::max(counts[0], counts[1])) / static_cast<Scalar>(counts[0] + counts[1]);
    }
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::relu:
      return "relu";
    case Activation::tanh:
      return "tanh";
    case Activation::identity:
      return "identity";
  }
  return "relu";
}

Activation activation_from_name(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "identity") return Activation::identity;
  throw Error(Errc::bad_format, "unknown activation '" + s + "'");
}

}  // namespace

nlohmann::ordered_json to_json(const AnnotatorModel& model) {
  nlohmann::ordered_json j;
  j["format"] = "loglg-annotator";
  j["version"] = 1;
  j["shape"] = {{"input_width", model.shape().input_width},
                {"hidden", model.shape().hidden},
                {"layers", model.shape().layers},
                {"activation", activation_name(model.shape().activation)}};
  j["vocab_hash"] = model.vocab_hash();
  const auto& p = model.parameters();
  j["parameters"] = std::vector<Scalar>(p.data(), p.data() + p.size());
  return j;
}

AnnotatorModel annotator_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "loglg-annotator" || j.value("version", 0) != 1)
    throw Error(Errc::bad_format, "not a version-1 annotator checkpoint");
  const auto& s = j.at("shape");
  AnnotatorShape shape{s.at("input_width").get<std::size_t>(), s.at("hidden").get<std::size_t>(),
                       s.at("layers").get<std::size_t>(), activation_from_name(s.at("activation").get<std::string>())};
  AnnotatorModel m(shape, j.at("vocab_hash").get<std::string>());
  const auto params = j.at("parameters").get<std::vector<Scalar>>();
  if (params.size() != static_cast<std::size_t>(m.parameters().size()))
    throw Error(Errc::bad_format, "annotator checkpoint: parameter count does not match shape");
  m.parameters() = Eigen::Map<const Vector>(params.data(), static_cast<Eigen::Index>(params.size()));
  return m;
}

}  // namespace loglg
