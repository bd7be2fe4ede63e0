#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "loglg/event_graph.hpp"
#include "oracles.hpp"

using namespace loglg;

namespace {

/// Random graph over n vertices built straight from adjacency lists.
EventGraph random_graph(std::size_t n, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<std::int64_t> f(1, 50);
  std::vector<std::string> words;
  for (std::size_t i = 0; i < n; ++i) words.push_back("v" + std::string(i < 10 ? "0" : "") + std::to_string(i));
  std::vector<ClassFlags> flags(n);
  for (std::size_t i = 0; i < n; ++i) flags[i] = {i % 2 == 0, i % 2 == 1 || i % 3 == 0};
  std::vector<std::vector<Neighbor>> adj(n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if (u(rng) < density) {
        const auto w = f(rng);
        adj[a].push_back({b, w});
        adj[b].push_back({a, w});
      }
  for (auto& row : adj) std::sort(row.begin(), row.end(), [](auto& x, auto& y) { return x.vertex < y.vertex; });
  return EventGraph(words, flags, adj);
}

}  // namespace

TEST_SUITE("graph") {
  TEST_CASE("co-occurrence counts match the pairwise oracle") {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      const auto docs = fixture::random_docs(20, 15, 25, seed);
      const auto seqs = fixture::to_sequences(docs);
      const auto ks = fixture::keyword_set({"w0", "w2", "w4", "w6", "w13"}, {"w1", "w3", "w5", "the", "absent"});
      std::set<std::string> kw;
      for (const auto& w : ks.all_words()) kw.insert(w);
      for (std::size_t window : {1u, 3u, 10u}) {
        const auto g = build_event_graph(ks, seqs, window);
        const auto want = oracle::cooccurrence(docs, kw, window);

        std::set<std::string> present;
        for (const auto& d : docs)
          for (const auto& t : d)
            if (kw.count(t)) present.insert(t);
        CHECK(std::set<std::string>(g.words().begin(), g.words().end()) == present);
        CHECK(std::is_sorted(g.words().begin(), g.words().end()));

        for (std::size_t a = 0; a < g.size(); ++a)
          for (std::size_t b = 0; b < g.size(); ++b) {
            const auto key = std::minmax(g.word(a), g.word(b));
            const auto it = want.find({key.first, key.second});
            const long expect = a == b || it == want.end() ? 0 : it->second;
            CHECK(g.frequency(a, b) == expect);
          }
        CHECK(g.edge_count() == want.size());
      }
    }
  }

  TEST_CASE("symmetry, no self-loops, positive weights, class flags") {
    const auto docs = fixture::random_docs(30, 10, 30, 9);
    const auto seqs = fixture::to_sequences(docs);
    const auto ks = fixture::keyword_set({"w0", "w1", "w2"}, {"w2", "w3", "w4"});
    const auto g = build_event_graph(ks, seqs, 5);
    for (std::size_t a = 0; a < g.size(); ++a) {
      for (const auto& nb : g.neighbors(a)) {
        CHECK(nb.vertex != a);
        CHECK(nb.frequency >= 1);
        CHECK(g.frequency(nb.vertex, a) == nb.frequency);
      }
      const auto& w = g.word(a);
      CHECK(g.class_flags(a)[0] == (w == "w0" || w == "w1" || w == "w2"));
      CHECK(g.class_flags(a)[1] == (w == "w2" || w == "w3" || w == "w4"));
      const Vector x = g.features(a);
      CHECK(x.size() == static_cast<Eigen::Index>(g.feature_width()));
      CHECK(x(0) == (g.class_flags(a)[0] ? 1.0 : 0.0));
      CHECK(x.tail(g.size()).sum() == 1.0);
      CHECK(x(2 + static_cast<Eigen::Index>(a)) == 1.0);
    }
  }

  TEST_CASE("directed counts split the symmetric ones") {
    const auto seqs = fixture::to_sequences({{"a", "b", "a", "c"}, {"c", "b"}});
    const auto ks = fixture::keyword_set({"a", "b"}, {"c"});
    const auto g = build_event_graph(ks, seqs, 10, true);
    REQUIRE(g.directed());
    for (std::size_t a = 0; a < g.size(); ++a)
      for (std::size_t b = 0; b < g.size(); ++b) {
        std::int64_t ab = 0, ba = 0;
        for (const auto& n : g.successors(a)) ab += n.vertex == b ? n.frequency : 0;
        for (const auto& n : g.successors(b)) ba += n.vertex == a ? n.frequency : 0;
        CHECK(ab + ba == g.frequency(a, b));
      }
  }

  TEST_CASE("construction errors") {
    const auto seqs = fixture::to_sequences({{"x", "y"}});
    try {
      build_event_graph(fixture::keyword_set({"a"}, {"b"}), seqs, 3);
      FAIL("expected empty_graph");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::empty_graph);
    }
    CHECK_THROWS_AS(build_event_graph(fixture::keyword_set({"x"}, {"y"}), seqs, 0), Error);
  }

  TEST_CASE("transition rows are distributions") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto g = random_graph(30, 0.15, seed);
      const auto p = transition_probabilities(g);
      for (std::size_t a = 0; a < g.size(); ++a) {
        if (g.neighbors(a).empty()) {
          CHECK(p.dead_end[a]);
          CHECK(p.rows[a].empty());
          continue;
        }
        CHECK_FALSE(p.dead_end[a]);
        Scalar sum = 0;
        for (const auto& t : p.rows[a]) {
          CHECK(t.probability > 0);
          sum += t.probability;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
      }
    }
  }

  TEST_CASE("transition probabilities are proportional to frequency") {
    // a-b three times, a-c once.
    const auto seqs = fixture::to_sequences({{"a", "b"}, {"a", "b"}, {"b", "a"}, {"c", "a"}});
    const auto g = build_event_graph(fixture::keyword_set({"a", "b"}, {"c"}), seqs, 1);
    const auto p = transition_probabilities(g);
    const auto a = *g.index_of("a");
    REQUIRE(p.rows[a].size() == 2);
    CHECK(p.rows[a][0].to == *g.index_of("b"));
    CHECK(p.rows[a][0].probability == doctest::Approx(0.75));
    CHECK(p.rows[a][1].probability == doctest::Approx(0.25));
  }

  TEST_CASE("induced subgraphs match an edge-filter oracle") {
    const auto g = random_graph(25, 0.2, 77);
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<std::size_t> verts(g.size());
      std::iota(verts.begin(), verts.end(), 0);
      std::shuffle(verts.begin(), verts.end(), rng);
      verts.resize(1 + rng() % 10);
      auto with_dups = verts;
      with_dups.push_back(verts.front());
      const auto sg = induce_subgraph(g, with_dups);
      REQUIRE(sg.vertices == verts);
      for (std::size_t i = 0; i < verts.size(); ++i) {
        CHECK(sg.features.row(static_cast<Eigen::Index>(i)).transpose() == g.features(verts[i]));
        for (std::size_t j = 0; j < verts.size(); ++j)
          CHECK(sg.adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) ==
                (g.frequency(verts[i], verts[j]) > 0 ? 1.0 : 0.0));
      }
      std::size_t edges = 0;
      for (std::size_t i = 0; i < verts.size(); ++i)
        for (std::size_t j = i + 1; j < verts.size(); ++j) edges += g.frequency(verts[i], verts[j]) > 0;
      CHECK(sg.edges.size() == edges);
      for (const auto& e : sg.edges) CHECK(e[0] < e[1]);
    }
  }

  TEST_CASE("sequence subgraph holds exactly its keywords") {
    const auto docs = fixture::random_docs(20, 12, 20, 3);
    const auto seqs = fixture::to_sequences(docs);
    const auto g = build_event_graph(fixture::keyword_set({"w0", "w2", "w5"}, {"w1", "w7"}), seqs, 4);
    for (const auto& s : seqs) {
      const auto sg = induce_sequence_subgraph(g, s);
      std::set<std::size_t> want;
      for (const auto& t : s.tokens())
        if (auto v = g.index_of(t)) want.insert(*v);
      CHECK(sg.vertices == std::vector<std::size_t>(want.begin(), want.end()));
    }
  }

  TEST_CASE("permute reorders rows and columns together") {
    const auto g = random_graph(12, 0.4, 8);
    const std::vector<std::size_t> verts{3, 7, 1, 9, 0};
    const auto sg = induce_subgraph(g, verts);
    const std::vector<std::size_t> perm{4, 2, 0, 3, 1};
    const auto p = permute(sg, perm);
    for (std::size_t i = 0; i < perm.size(); ++i) {
      CHECK(p.vertices[i] == sg.vertices[perm[i]]);
      for (std::size_t j = 0; j < perm.size(); ++j)
        CHECK(p.adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) ==
              sg.adjacency(static_cast<Eigen::Index>(perm[i]), static_cast<Eigen::Index>(perm[j])));
    }
  }

  TEST_CASE("json round-trip keeps the fingerprint") {
    const auto g = random_graph(10, 0.3, 2);
    const auto back = event_graph_from_json(nlohmann::json::parse(to_json(g).dump()));
    CHECK(back.words() == g.words());
    CHECK(back.vocab_hash() == g.vocab_hash());
    for (std::size_t a = 0; a < g.size(); ++a) CHECK(back.neighbors(a) == g.neighbors(a));
    CHECK(random_graph(10, 0.3, 3).vocab_hash() == g.vocab_hash());
    CHECK(random_graph(11, 0.3, 2).vocab_hash() != g.vocab_hash());
  }
}
