#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "fixtures.hpp"
#include "loglg/annotator.hpp"
#include "oracles.hpp"

using namespace loglg;

namespace {

void randomize(AnnotatorModel& m, Rng& rng, Scalar scale = 0.5) {
  std::uniform_real_distribution<Scalar> u(-scale, scale);
  for (Eigen::Index i = 0; i < m.parameters().size(); ++i) m.parameters()(i) = u(rng);
}

/// Random graph built from a random corpus so it carries real class flags.
struct RandomWorld {
  std::vector<LogSequence> seqs;
  KeywordSet ks;
  EventGraph g;

  explicit RandomWorld(std::uint64_t seed) {
    seqs = fixture::to_sequences(fixture::random_docs(40, 14, 25, seed));
    ks = fixture::keyword_set({"w0", "w2", "w4", "w6", "w8", "w10"}, {"w1", "w3", "w5", "w7", "w9", "w11"});
    g = build_event_graph(ks, seqs, 4);
  }

  Subgraph random_subgraph(Rng& rng) const {
    std::vector<std::size_t> v(g.size());
    std::iota(v.begin(), v.end(), 0);
    std::shuffle(v.begin(), v.end(), rng);
    v.resize(1 + rng() % g.size());
    return induce_subgraph(g, v);
  }
};

/// Two keyword cliques that never meet: normal words n0..n4, anomaly words a0..a4.
struct Separable {
  std::vector<LogSequence> seqs;
  KeywordSet ks;
  EventGraph g;

  Separable() {
    std::mt19937_64 rng(17);
    std::vector<std::vector<std::string>> docs;
    for (int i = 0; i < 80; ++i) {
      const char c = i % 4 == 0 ? 'a' : 'n';
      std::vector<std::string> d;
      const int len = 2 + static_cast<int>(rng() % 6);
      for (int k = 0; k < len; ++k) d.push_back(std::string(1, c) + std::to_string(rng() % 5));
      d.push_back("filler");
      docs.push_back(d);
    }
    seqs = fixture::to_sequences(docs);
    ks = fixture::keyword_set({"n0", "n1", "n2", "n3", "n4"}, {"a0", "a1", "a2", "a3", "a4"});
    g = build_event_graph(ks, seqs, 10);
  }
};

/// Scalar GIN on a path graph 0-1-2-3-4-5, written out by hand.
Scalar path_oracle_logit(const std::vector<Scalar>& x, const std::vector<std::array<Scalar, 5>>& layer,
                         const std::vector<std::array<Scalar, 2>>& head_w, const std::array<Scalar, 2>& head_b,
                         int cls) {
  const std::size_t n = x.size();
  std::vector<Scalar> r = x;
  std::vector<Scalar> readout{std::accumulate(r.begin(), r.end(), 0.0)};
  for (const auto& [w1, b1, w2, b2, eps] : layer) {
    std::vector<Scalar> next(n);
    for (std::size_t v = 0; v < n; ++v) {
      Scalar agg = (1 + eps) * r[v];
      if (v > 0) agg += r[v - 1];
      if (v + 1 < n) agg += r[v + 1];
      next[v] = w2 * std::tanh(w1 * agg + b1) + b2;
    }
    r = next;
    readout.push_back(std::accumulate(r.begin(), r.end(), 0.0));
  }
  Scalar z = head_b[cls];
  for (std::size_t k = 0; k < readout.size(); ++k) z += head_w[k][cls] * readout[k];
  return z;
}

}  // namespace

TEST_SUITE("annotator") {
  TEST_CASE("parameter layout covers the flat vector") {
    const AnnotatorShape s{12, 7, 3, Activation::relu};
    const AnnotatorModel m(s);
    CHECK(static_cast<std::size_t>(m.parameters().size()) == AnnotatorModel::parameter_count(s));
    std::size_t at = 0;
    for (const auto& t : m.tensors()) {
      CHECK(t.offset == at);
      at += t.size;
    }
    CHECK(at == AnnotatorModel::parameter_count(s));
  }

  TEST_CASE("logits are invariant to vertex order") {
    const RandomWorld w(5);
    AnnotatorModel m({w.g.feature_width(), 16, 3, Activation::relu});
    Rng rng(1);
    m.init(rng);
    randomize(m, rng, 0.3);
    for (int i = 0; i < 100; ++i) {
      const auto sg = w.random_subgraph(rng);
      std::vector<std::size_t> perm(sg.size());
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      const Logits a = forward(m, sg), b = forward(m, permute(sg, perm));
      CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-9);
    }
  }

  TEST_CASE("identity model reduces to repeated neighbor sums") {
    const RandomWorld w(6);
    const auto m = AnnotatorModel::identity(w.g.feature_width(), 3);
    Rng rng(2);
    for (int i = 0; i < 20; ++i) {
      const auto sg = w.random_subgraph(rng);
      const auto reps = node_representations(m, sg);
      REQUIRE(reps.size() == 4);
      const Matrix step = sg.adjacency + Matrix::Identity(sg.adjacency.rows(), sg.adjacency.cols());
      Matrix expect = sg.features;
      for (std::size_t k = 1; k < reps.size(); ++k) {
        expect = step * expect;
        CHECK((reps[k] - expect).cwiseAbs().maxCoeff() <= 1e-12);
      }
    }
  }

  TEST_CASE("scalar path graph matches the hand-written recurrence") {
    Rng rng(3);
    std::uniform_real_distribution<Scalar> u(-1, 1);
    const std::size_t K = 2;
    // Width 3 is the smallest input the model accepts; only column 0 is used.
    AnnotatorModel m({3, 1, K, Activation::tanh});
    std::vector<std::array<Scalar, 5>> layer(K);
    for (std::size_t k = 0; k < K; ++k) {
      for (auto& v : layer[k]) v = u(rng);
      m.w1(k)(0, 0) = layer[k][0];
      m.b1(k)(0) = layer[k][1];
      m.w2(k)(0, 0) = layer[k][2];
      m.b2(k)(0) = layer[k][3];
      m.eps(k) = layer[k][4];
    }
    std::vector<std::array<Scalar, 2>> head_w(K + 1);
    for (std::size_t k = 0; k <= K; ++k)
      for (int c = 0; c < 2; ++c) m.head_w()(c, static_cast<Eigen::Index>(k == 0 ? 0 : 2 + k)) = head_w[k][c] = u(rng);
    std::array<Scalar, 2> head_b{u(rng), u(rng)};
    m.head_b() << head_b[0], head_b[1];

    Subgraph sg;
    const std::size_t n = 6;
    std::vector<Scalar> x(n);
    sg.vertices.resize(n);
    sg.features = Matrix::Zero(n, 3);
    sg.adjacency = Matrix::Zero(n, n);
    for (std::size_t v = 0; v < n; ++v) {
      sg.vertices[v] = v;
      sg.features(static_cast<Eigen::Index>(v), 0) = x[v] = u(rng);
      if (v + 1 < n) {
        sg.adjacency(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(v + 1)) = 1;
        sg.adjacency(static_cast<Eigen::Index>(v + 1), static_cast<Eigen::Index>(v)) = 1;
        sg.edges.push_back({v, v + 1});
      }
    }
    const Logits z = forward(m, sg);
    for (int c = 0; c < 2; ++c) CHECK(z(c) == doctest::Approx(path_oracle_logit(x, layer, head_w, head_b, c)).epsilon(1e-12));
  }

  TEST_CASE("analytic gradient matches central differences for every tensor") {
    const Scalar h = 1e-6;
    int instances = 0;
    for (Activation act : {Activation::tanh, Activation::identity, Activation::relu}) {
      for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        const RandomWorld w(seed + 20);
        AnnotatorModel m({w.g.feature_width(), 5, 2, act});
        Rng rng(seed);
        randomize(m, rng, 0.3);
        const auto sg = w.random_subgraph(rng);
        // The losing class keeps the loss above ln 2, away from softmax saturation.
        const Logits z = forward(m, sg);
        const int target = z(1) > z(0) ? 0 : 1;
        AnnotatorModel grad(m.shape());
        grad.parameters().setZero();
        nll_with_gradient(m, sg, target, 1.0, grad);

        Vector fd(m.parameters().size());
        for (Eigen::Index i = 0; i < fd.size(); ++i) {
          AnnotatorModel p = m;
          p.parameters()(i) += h;
          const Scalar up = nll(p, sg, target);
          p.parameters()(i) -= 2 * h;
          fd(i) = (up - nll(p, sg, target)) / (2 * h);
        }
        for (const auto& t : m.tensors()) {
          const auto off = static_cast<Eigen::Index>(t.offset), len = static_cast<Eigen::Index>(t.size);
          const Vector a = grad.parameters().segment(off, len), b = fd.segment(off, len);
          const Scalar denom = std::max(a.norm() + b.norm(), 1e-8);
          INFO("tensor " << t.name << " seed " << seed);
          CHECK((a - b).norm() / denom < 1e-4);
        }
        ++instances;
      }
    }
    CHECK(instances >= 20);
  }

  TEST_CASE("gradient weight scales linearly and accumulates") {
    const RandomWorld w(31);
    AnnotatorModel m({w.g.feature_width(), 4, 2, Activation::tanh});
    Rng rng(4);
    randomize(m, rng);
    const auto sg = w.random_subgraph(rng);
    AnnotatorModel g1(m.shape()), g2(m.shape());
    g1.parameters().setZero();
    g2.parameters().setZero();
    nll_with_gradient(m, sg, 1, 1.0, g1);
    nll_with_gradient(m, sg, 1, 0.25, g2);
    nll_with_gradient(m, sg, 1, 0.25, g2);
    CHECK((g1.parameters() * 0.5 - g2.parameters()).cwiseAbs().maxCoeff() <= 1e-12);
  }

  TEST_CASE("pre-training separates walk start classes") {
    const Separable s;
    AnnotatorModel m({s.g.feature_width(), 16, 2, Activation::relu}, s.g.vocab_hash());
    Rng rng(8);
    m.init(rng);
    const WalkSampler ws(s.g, transition_probabilities(s.g), fit_length_model(s.seqs, s.ks));
    TrainOptions opts;
    opts.adam.lr = 1e-2;
    const auto trace = pretrain(m, ws, 150, opts, rng);
    REQUIRE(trace.size() == 150);
    CHECK(trace.back() < trace.front());
    int correct = 0;
    for (int i = 0; i < 500; ++i) {
      const auto walk = ws.sample(rng);
      const Logits z = forward(m, walk.subgraph);
      correct += (z(1) > z(0) ? 1 : 0) == walk.start_class;
    }
    CHECK(correct / 500.0 >= 0.99);
  }

  TEST_CASE("fine-tuning fits the voting labels") {
    const Separable s;
    AnnotatorModel m({s.g.feature_width(), 16, 2, Activation::relu}, s.g.vocab_hash());
    Rng rng(9);
    m.init(rng);
    TrainOptions opts;
    opts.adam.lr = 1e-2;
    finetune(m, s.seqs, s.g, s.ks, 20, opts, rng);
    const auto labels = annotate(m, s.seqs, s.g, s.ks);
    int agree = 0;
    for (std::size_t i = 0; i < s.seqs.size(); ++i) {
      CHECK_FALSE(labels[i].fallback);
      agree += labels[i].label == *vote_label(s.seqs[i], s.ks);
      CHECK((labels[i].confidence >= 0.5 && labels[i].confidence <= 1.0));
    }
    CHECK(agree / double(s.seqs.size()) >= 0.99);
  }

  TEST_CASE("zero steps leave the model untouched") {
    const Separable s;
    AnnotatorModel m({s.g.feature_width(), 8, 2, Activation::relu});
    Rng rng(10);
    m.init(rng);
    const Vector before = m.parameters();
    const WalkSampler ws(s.g, transition_probabilities(s.g), fit_length_model(s.seqs, s.ks));
    CHECK(pretrain(m, ws, 0, {}, rng).empty());
    CHECK(finetune(m, s.seqs, s.g, s.ks, 0, {}, rng).empty());
    CHECK(m.parameters() == before);
  }

  TEST_CASE("fine-tuning needs a sequence that does not abstain") {
    const Separable s;
    AnnotatorModel m({s.g.feature_width(), 8, 1, Activation::relu});
    const auto quiet = fixture::to_sequences({{"filler"}, {"nothing", "here"}});
    Rng rng(11);
    try {
      finetune(m, quiet, s.g, s.ks, 1, {}, rng);
      FAIL("expected degenerate");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::degenerate);
    }
  }

  TEST_CASE("checkpoints round-trip and are tied to their graph") {
    const Separable s;
    AnnotatorModel m({s.g.feature_width(), 8, 2, Activation::tanh}, s.g.vocab_hash());
    Rng rng(12);
    randomize(m, rng);
    const auto back = annotator_from_json(nlohmann::json::parse(to_json(m).dump()));
    CHECK(back.shape() == m.shape());
    CHECK(back.vocab_hash() == m.vocab_hash());
    CHECK(back.parameters() == m.parameters());
    CHECK(annotate(back, s.seqs, s.g, s.ks) == annotate(m, s.seqs, s.g, s.ks));

    const RandomWorld other(3);
    AnnotatorModel wrong({other.g.feature_width(), 8, 2, Activation::tanh}, other.g.vocab_hash());
    try {
      annotate(wrong, s.seqs, s.g, s.ks);
      FAIL("expected vocab_mismatch");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::vocab_mismatch);
    }
    auto j = to_json(m);
    j["parameters"].erase(0);
    CHECK_THROWS_AS(annotator_from_json(j), Error);
  }

  TEST_CASE("keyword voting") {
    const auto ks = fixture::keyword_set({"ok", "done"}, {"fail", "panic"});
    const auto seqs = fixture::to_sequences({{"ok", "ok", "done", "fail"},
                                             {"fail", "panic", "fail", "ok"},
                                             {"ok", "fail", "done", "panic"},
                                             {"other", "words"}});
    CHECK(vote_label(seqs[0], ks) == Label::Normal);
    CHECK(vote_label(seqs[1], ks) == Label::Anomaly);
    CHECK(vote_label(seqs[2], ks) == Label::Normal);
    CHECK_FALSE(vote_label(seqs[3], ks).has_value());
    CHECK(vote_counts(seqs[1], ks) == std::array<std::size_t, 2>{1, 3});

    const auto pl = vote_annotate(seqs, ks);
    CHECK(pl[0].confidence == doctest::Approx(0.75));
    CHECK(pl[3].fallback);
    CHECK(pl[3].label == Label::Normal);

    const auto docs = fixture::random_docs(100, 12, 8, 13);
    const std::set<std::string> n{"w0", "w3", "w5"}, a{"w1", "w2", "w9"};
    const auto ks2 = fixture::keyword_set({"w0", "w3", "w5"}, {"w1", "w2", "w9"});
    for (const auto& s : fixture::to_sequences(docs)) {
      const int want = oracle::vote(s.tokens(), n, a);
      const auto got = vote_label(s, ks2);
      CHECK(got.has_value() == (want >= 0));
      if (got) CHECK(to_index(*got) == want);
    }
  }

  TEST_CASE("annotation falls back for sequences outside the graph") {
    const Separable s;
    AnnotatorModel m({s.g.feature_width(), 4, 1, Activation::relu}, s.g.vocab_hash());
    Rng rng(14);
    m.init(rng);
    const auto extra = fixture::to_sequences({{"filler"}, {"n1", "a2"}});
    const auto pl = annotate(m, extra, s.g, s.ks);
    CHECK(pl[0].fallback);
    CHECK(pl[0].confidence == 0.5);
    CHECK_FALSE(pl[1].fallback);
    CHECK(annotate(m, s.seqs, s.g, s.ks, 1) == annotate(m, s.seqs, s.g, s.ks, 3));
  }
}
