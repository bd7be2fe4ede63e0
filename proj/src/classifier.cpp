#include "loglg/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>

#include "loglg/fpenv.hpp"
#include "loglg/parallel.hpp"

namespace loglg {

namespace {

Scalar log_softmax_at(const Logits& z, int target) {
  const Scalar mx = z.maxCoeff();
  return z(target) - (mx + std::log((z.array() - mx).exp().sum()));
}

}  // namespace

std::vector<Prediction> SequenceClassifier::predict(std::span<const LogSequence> corpus, unsigned threads) const {
  std::vector<Prediction> out(corpus.size());
  parallel_for(corpus.size(), threads, [&](std::size_t i) {
    const Logits z = logits(corpus[i]);
    const int t = z(1) > z(0) ? 1 : 0;
    out[i] = {corpus[i].id(), label_from_index(t), std::exp(log_softmax_at(z, t))};
  });
  return out;
}

MeanEmbeddingClassifier::MeanEmbeddingClassifier(std::span<const LogSequence> corpus, std::size_t embedding_dim,
                                                 std::size_t hidden, Rng& rng)
    : dim_(embedding_dim), hidden_(hidden) {
  std::set<std::string> seen;
  for (const auto& seq : corpus) seen.insert(seq.tokens().begin(), seq.tokens().end());
  vocab_.assign(seen.begin(), seen.end());
  layout();
  std::uniform_real_distribution<Scalar> emb(-0.1, 0.1);
  auto E = Eigen::Map<Matrix>(params_.data() + emb_, static_cast<Eigen::Index>(dim_),
                              static_cast<Eigen::Index>(vocab_.size() + 1));
  for (Eigen::Index j = 0; j < E.cols(); ++j)
    for (Eigen::Index i = 0; i < E.rows(); ++i) E(i, j) = emb(rng);
  auto glorot = [&rng](Scalar* p, std::size_t rows, std::size_t cols) {
    const Scalar limit = std::sqrt(6.0 / static_cast<Scalar>(rows + cols));
    std::uniform_real_distribution<Scalar> u(-limit, limit);
    for (std::size_t i = 0; i < rows * cols; ++i) p[i] = u(rng);
  };
  glorot(params_.data() + w1_, hidden_, dim_);
  glorot(params_.data() + w2_, 2, hidden_);
}

MeanEmbeddingClassifier::MeanEmbeddingClassifier(std::vector<std::string> vocab, std::size_t embedding_dim,
                                                 std::size_t hidden)
    : vocab_(std::move(vocab)), dim_(embedding_dim), hidden_(hidden) {
  layout();
}

void MeanEmbeddingClassifier::layout() {
  if (dim_ == 0 || hidden_ == 0) throw Error(Errc::invalid_argument, "classifier: zero dimension");
  rows_.clear();
  for (std::size_t i = 0; i < vocab_.size(); ++i) rows_.emplace(vocab_[i], i + 1);
  std::size_t off = 0;
  emb_ = off;
  off += (vocab_.size() + 1) * dim_;
  w1_ = off;
  off += hidden_ * dim_;
  b1_ = off;
  off += hidden_;
  w2_ = off;
  off += 2 * hidden_;
  b2_ = off;
  off += 2;
  params_ = Vector::Zero(static_cast<Eigen::Index>(off));
}

std::size_t MeanEmbeddingClassifier::row_of(const std::string& token) const {
  auto it = rows_.find(token);
  return it == rows_.end() ? 0 : it->second;
}

std::vector<std::size_t> MeanEmbeddingClassifier::rows_for(const LogSequence& seq) const {
  std::vector<std::size_t> ids;
  ids.reserve(seq.tokens().size());
  for (const auto& tok : seq.tokens()) ids.push_back(row_of(tok));
  return ids;
}

std::string MeanEmbeddingClassifier::vocab_hash() const {
  Fnv1a h;
  for (const auto& w : vocab_) {
    h.update(w);
    h.update_separator();
  }
  return h.hex();
}

std::vector<MeanEmbeddingClassifier::Tensor> MeanEmbeddingClassifier::tensors() const {
  return {{"embedding", emb_, (vocab_.size() + 1) * dim_},
          {"mlp.w1", w1_, hidden_ * dim_},
          {"mlp.b1", b1_, hidden_},
          {"mlp.w2", w2_, 2 * hidden_},
          {"mlp.b2", b2_, 2}};
}

Logits MeanEmbeddingClassifier::logits(const LogSequence& seq) const {
  const auto D = static_cast<Eigen::Index>(dim_);
  const auto H = static_cast<Eigen::Index>(hidden_);
  Eigen::Map<const Matrix> E(params_.data() + emb_, D, static_cast<Eigen::Index>(vocab_.size() + 1));
  Eigen::Map<const Matrix> W1(params_.data() + w1_, H, D);
  Eigen::Map<const Vector> b1(params_.data() + b1_, H);
  Eigen::Map<const Matrix> W2(params_.data() + w2_, 2, H);
  Eigen::Map<const Vector> b2(params_.data() + b2_, 2);
  Vector mean = Vector::Zero(D);
  const auto ids = rows_for(seq);
  if (ids.empty()) throw Error(Errc::empty_sequence, "classifier: empty sequence");
  for (std::size_t r : ids) mean += E.col(static_cast<Eigen::Index>(r));
  mean /= static_cast<Scalar>(ids.size());
  const Vector h = (W1 * mean + b1).cwiseMax(0.0);
  return W2 * h + b2;
}

Scalar MeanEmbeddingClassifier::loss(const LogSequence& seq, int target) const {
  return -log_softmax_at(logits(seq), target);
}

Scalar MeanEmbeddingClassifier::loss_with_gradient(const LogSequence& seq, int target, Scalar weight,
                                                   Vector& grad) const {
  if (grad.size() != params_.size()) throw Error(Errc::invalid_argument, "gradient buffer size mismatch");
  const auto D = static_cast<Eigen::Index>(dim_);
  const auto H = static_cast<Eigen::Index>(hidden_);
  const auto R = static_cast<Eigen::Index>(vocab_.size() + 1);
  Eigen::Map<const Matrix> E(params_.data() + emb_, D, R);
  Eigen::Map<const Matrix> W1(params_.data() + w1_, H, D);
  Eigen::Map<const Vector> b1(params_.data() + b1_, H);
  Eigen::Map<const Matrix> W2(params_.data() + w2_, 2, H);
  Eigen::Map<const Vector> b2(params_.data() + b2_, 2);
  Eigen::Map<Matrix> gE(grad.data() + emb_, D, R);
  Eigen::Map<Matrix> gW1(grad.data() + w1_, H, D);
  Eigen::Map<Vector> gb1(grad.data() + b1_, H);
  Eigen::Map<Matrix> gW2(grad.data() + w2_, 2, H);
  Eigen::Map<Vector> gb2(grad.data() + b2_, 2);

  const auto ids = rows_for(seq);
  if (ids.empty()) throw Error(Errc::empty_sequence, "classifier: empty sequence");
  const Scalar inv_len = 1.0 / static_cast<Scalar>(ids.size());
  Vector mean = Vector::Zero(D);
  for (std::size_t r : ids) mean += E.col(static_cast<Eigen::Index>(r));
  mean *= inv_len;
  const Vector pre = W1 * mean + b1;
  const Vector h = pre.cwiseMax(0.0);
  const Logits z = W2 * h + b2;
  const Scalar l = -log_softmax_at(z, target);

  Logits dz = (z.array() - z.maxCoeff()).exp().matrix();
  dz /= dz.sum();
  dz(target) -= 1.0;
  dz *= weight;
  gW2.noalias() += dz * h.transpose();
  gb2 += dz;
  const Vector dpre = (W2.transpose() * dz).cwiseProduct((pre.array() > 0.0).cast<Scalar>().matrix());
  gW1.noalias() += dpre * mean.transpose();
  gb1 += dpre;
  const Vector dmean = W1.transpose() * dpre * inv_len;
  for (std::size_t r : ids) gE.col(static_cast<Eigen::Index>(r)) += dmean;
  return l;
}

std::vector<Scalar> MeanEmbeddingClassifier::train(std::span<const LogSequence> corpus,
                                                   std::span<const PseudoLabel> labels,
                                                   const ClassifierTrainOptions& opts, Rng& rng) {
  if (labels.size() != corpus.size())
    throw Error(Errc::invalid_argument, "classifier train: label count does not match corpus size");
  std::unordered_map<std::string, int> by_id;
  for (const auto& p : labels) by_id[p.sequence_id] = to_index(p.label);
  std::vector<std::size_t> usable;
  std::vector<int> targets(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto it = by_id.find(corpus[i].id());
    if (it == by_id.end())
      throw Error(Errc::invalid_argument, "classifier train: no pseudo label for sequence '" + corpus[i].id() + "'");
    targets[i] = it->second;
    const auto ids = rows_for(corpus[i]);
    // All-unknown sequences would only train the shared unknown row.
    if (std::any_of(ids.begin(), ids.end(), [](std::size_t r) { return r != 0; })) usable.push_back(i);
  }
  if (opts.batch_size == 0) throw Error(Errc::invalid_argument, "classifier train: batch size must be positive");

  std::vector<Scalar> trace;
  if (opts.epochs == 0 || usable.empty()) return trace;
  const FlushDenormals ftz;
  Adam adam(params_.size(), opts.adam);
  Vector grad(params_.size());
  for (std::size_t e = 0; e < opts.epochs; ++e) {
    std::shuffle(usable.begin(), usable.end(), rng);
    for (std::size_t lo = 0; lo < usable.size(); lo += opts.batch_size) {
      const std::size_t hi = std::min(usable.size(), lo + opts.batch_size);
      const Scalar w = 1.0 / static_cast<Scalar>(hi - lo);
      grad.setZero();
      Scalar l = 0;
      for (std::size_t i = lo; i < hi; ++i) l += w * loss_with_gradient(corpus[usable[i]], targets[usable[i]], w, grad);
      if (!std::isfinite(l))
        throw Error(Errc::non_finite, "classifier train: non-finite loss (lr=" + std::to_string(opts.adam.lr) + ")");
      adam.step(params_, grad);
      trace.push_back(l);
    }
  }
  return trace;
}

nlohmann::ordered_json MeanEmbeddingClassifier::save() const {
  nlohmann::ordered_json j;
  j["format"] = "loglg-classifier";
  j["version"] = 1;
  j["kind"] = kKind;
  j["dims"] = {{"embedding", dim_}, {"hidden", hidden_}};
  j["vocab_hash"] = vocab_hash();
  j["vocab"] = vocab_;
  j["parameters"] = std::vector<Scalar>(params_.data(), params_.data() + params_.size());
  return j;
}

MeanEmbeddingClassifier MeanEmbeddingClassifier::load(const nlohmann::json& j) {
  if (j.value("format", "") != "loglg-classifier" || j.value("version", 0) != 1 || j.value("kind", "") != kKind)
    throw Error(Errc::bad_format, "not a version-1 mean-embedding classifier checkpoint");
  MeanEmbeddingClassifier m(j.at("vocab").get<std::vector<std::string>>(), j.at("dims").at("embedding").get<std::size_t>(),
                            j.at("dims").at("hidden").get<std::size_t>());
  if (m.vocab_hash() != j.at("vocab_hash").get<std::string>())
    throw Error(Errc::vocab_mismatch, "classifier checkpoint: vocabulary hash mismatch");
  const auto p = j.at("parameters").get<std::vector<Scalar>>();
  if (p.size() != static_cast<std::size_t>(m.params_.size()))
    throw Error(Errc::bad_format, "classifier checkpoint: parameter count does not match dimensions");
  m.params_ = Eigen::Map<const Vector>(p.data(), static_cast<Eigen::Index>(p.size()));
  return m;
}

std::unique_ptr<SequenceClassifier> load_classifier(const nlohmann::json& j) {
  const auto kind = j.value("kind", "");
  if (kind == MeanEmbeddingClassifier::kKind)
    return std::make_unique<MeanEmbeddingClassifier>(MeanEmbeddingClassifier::load(j));
  throw Error(Errc::bad_format, "unknown classifier kind '" + kind + "'");
}

void write_predictions_jsonl(std::ostream& out, std::span<const Prediction> preds) {
  for (const auto& p : preds) {
    nlohmann::ordered_json j;
    j["id"] = p.sequence_id;
    j["label"] = to_index(p.label);
    j["confidence"] = p.confidence;
    out << j.dump() << '\n';
  }
}

std::vector<Prediction> read_predictions_jsonl(std::istream& in) {
  std::vector<Prediction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("id").get<std::string>(), label_from_index(j.at("label").get<int>()),
                     j.value("confidence", 0.5)});
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::bad_format, "predictions line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace loglg
