#include <doctest.h>

#include <cmath>
#include <map>

#include "fixtures.hpp"
#include "loglg/walk_sampler.hpp"
#include "oracles.hpp"

using namespace loglg;

namespace {

/// Hub "c" with leaves l1..l4 joined 1..4 times, so p(c -> l_i) = i / 10.
struct Star {
  std::vector<LogSequence> seqs;
  KeywordSet ks = fixture::keyword_set({"c", "l1", "l2"}, {"l3", "l4"});
  EventGraph g;

  Star() {
    std::vector<std::vector<std::string>> docs;
    for (int i = 1; i <= 4; ++i)
      for (int k = 0; k < i; ++k) docs.push_back({"c", "l" + std::to_string(i)});
    seqs = fixture::to_sequences(docs);
    g = build_event_graph(ks, seqs, 1);
  }
};

}  // namespace

TEST_SUITE("walks") {
  TEST_CASE("length model moments") {
    const auto seqs = fixture::to_sequences({{"k", "x", "k"}, {"k", "k", "j", "k", "y"}});
    const auto m = fit_length_model(seqs, fixture::keyword_set({"k"}, {"j"}), 64);
    CHECK(m.mu == 3.0);
    CHECK(m.sigma2 == 2.0);

    const auto docs = fixture::random_docs(50, 10, 30, 4);
    const auto ks = fixture::keyword_set({"w0", "w3"}, {"w1", "w8"});
    std::vector<double> counts;
    for (const auto& d : docs) {
      double c = 0;
      for (const auto& t : d) c += t == "w0" || t == "w3" || t == "w1" || t == "w8";
      counts.push_back(c);
    }
    const auto [mu, var] = oracle::mean_var(counts);
    const auto fit = fit_length_model(fixture::to_sequences(docs), ks, 64);
    CHECK(fit.mu == doctest::Approx(mu).epsilon(1e-12));
    CHECK(fit.sigma2 == doctest::Approx(var).epsilon(1e-12));

    CHECK_THROWS_AS(fit_length_model(std::span(seqs).first(1), ks, 64), Error);
  }

  TEST_CASE("length draws are rounded and clamped") {
    Rng rng(1);
    WalkLengthModel m;
    m.mu = 2.6;
    CHECK(m.sample(rng) == 3);
    m.mu = -4;
    CHECK(m.sample(rng) == 1);
    m.mu = 500;
    CHECK(m.sample(rng) == 64);
    m.mu = 10;
    m.sigma2 = 400;
    for (int i = 0; i < 2000; ++i) {
      const int L = m.sample(rng);
      CHECK((L >= 1 && L <= 64));
    }
  }

  TEST_CASE("single steps follow the transition probabilities") {
    const Star s;
    const WalkSampler ws(s.g, transition_probabilities(s.g), WalkLengthModel{1, 0, 1, 64});
    const auto c = *s.g.index_of("c");
    std::map<std::string, int> hits;
    Rng rng(2024);
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const auto w = ws.walk_from(c, 1, 0, rng);
      REQUIRE(w.path.size() == 2);
      ++hits[s.g.word(w.path[1])];
    }
    for (int i = 1; i <= 4; ++i)
      CHECK(std::abs(hits["l" + std::to_string(i)] / double(n) - i / 10.0) <= 0.01);
  }

  TEST_CASE("start class and start vertex are uniform") {
    const Star s;
    const WalkSampler ws(s.g, transition_probabilities(s.g), WalkLengthModel{2, 1, 1, 64});
    Rng rng(7);
    const int n = 20000;
    int anomaly = 0;
    std::map<std::size_t, int> starts;
    for (int i = 0; i < n; ++i) {
      const auto w = ws.sample(rng);
      anomaly += w.start_class;
      ++starts[w.start_vertex];
      CHECK(s.g.class_flags(w.start_vertex)[w.start_class]);
      CHECK(w.path.front() == w.start_vertex);
    }
    const double sd = std::sqrt(n * 0.25);
    CHECK(std::abs(anomaly - n / 2.0) <= 3 * sd);
    // Normal class has 3 start vertices, Anomaly 2.
    for (const auto& [v, k] : starts) {
      const double p = s.g.class_flags(v)[0] ? 0.5 / 3 : 0.25;
      CHECK(std::abs(k - n * p) <= 3 * std::sqrt(n * p * (1 - p)));
    }
  }

  TEST_CASE("walks move along edges and stop at dead ends") {
    const auto docs = fixture::random_docs(40, 15, 20, 11);
    const auto seqs = fixture::to_sequences(docs);
    // w14 rarely occurs near others; "solo" only ever appears alone.
    auto all = docs;
    all.push_back({"solo"});
    const auto seqs2 = fixture::to_sequences(all);
    const auto ks = fixture::keyword_set({"w0", "w2", "w4", "solo"}, {"w1", "w3", "w14"});
    const auto g = build_event_graph(ks, seqs2, 3);
    const auto policy = transition_probabilities(g);
    const WalkSampler ws(g, policy, fit_length_model(seqs2, ks));
    Rng rng(3);
    for (int i = 0; i < 500; ++i) {
      const auto w = ws.sample(rng);
      CHECK(w.path.size() >= 1);
      CHECK(w.path.size() <= 65);
      for (std::size_t k = 1; k < w.path.size(); ++k) CHECK(g.frequency(w.path[k - 1], w.path[k]) > 0);
      CHECK(w.subgraph.size() <= w.path.size());
    }
    const auto solo = *g.index_of("solo");
    CHECK(policy.dead_end[solo]);
    const auto w = ws.walk_from(solo, 10, 0, rng);
    CHECK(w.path == std::vector<std::size_t>{solo});
    CHECK(w.subgraph.size() == 1);
  }

  TEST_CASE("same seed, same walks") {
    const Star s;
    const WalkSampler ws(s.g, transition_probabilities(s.g), WalkLengthModel{3, 2, 1, 64});
    Rng a(99), b(99);
    for (int i = 0; i < 100; ++i) CHECK(ws.sample(a).path == ws.sample(b).path);
  }

  TEST_CASE("a class without vertices cannot seed walks") {
    const auto seqs = fixture::to_sequences({{"a", "b"}});
    const auto g = build_event_graph(fixture::keyword_set({"a", "b"}, {"zzz"}), seqs, 2);
    try {
      WalkSampler(g, transition_probabilities(g), WalkLengthModel{});
      FAIL("expected degenerate");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::degenerate);
    }
  }
}
