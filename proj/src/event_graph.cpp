#include "loglg/event_graph.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace loglg {

EventGraph::EventGraph(std::vector<std::string> words, std::vector<ClassFlags> flags,
                       std::vector<std::vector<Neighbor>> adjacency, std::vector<std::vector<Neighbor>> directed)
    : words_(std::move(words)), flags_(std::move(flags)), adjacency_(std::move(adjacency)), directed_(std::move(directed)) {
  if (flags_.size() != words_.size() || adjacency_.size() != words_.size() ||
      (!directed_.empty() && directed_.size() != words_.size()))
    throw Error(Errc::invalid_argument, "event graph: inconsistent vertex tables");
  for (std::size_t v = 0; v < words_.size(); ++v) {
    if (!flags_[v][0] && !flags_[v][1]) throw Error(Errc::invalid_argument, "event graph: vertex without class flag");
    index_.emplace(words_[v], v);
  }
}

std::optional<std::size_t> EventGraph::index_of(const std::string& word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::int64_t EventGraph::frequency(std::size_t a, std::size_t b) const {
  const auto& row = adjacency_[a];
  auto it = std::lower_bound(row.begin(), row.end(), b, [](const Neighbor& n, std::size_t v) { return n.vertex < v; });
  return it != row.end() && it->vertex == b ? it->frequency : 0;
}

std::size_t EventGraph::edge_count() const {
  std::size_t twice = 0;
  for (const auto& row : adjacency_) twice += row.size();
  return twice / 2;
}

Vector EventGraph::features(std::size_t v) const {
  Vector x = Vector::Zero(static_cast<Eigen::Index>(feature_width()));
  x(0) = flags_[v][0] ? 1.0 : 0.0;
  x(1) = flags_[v][1] ? 1.0 : 0.0;
  x(static_cast<Eigen::Index>(2 + v)) = 1.0;
  return x;
}

std::string EventGraph::vocab_hash() const {
  Fnv1a h;
  for (std::size_t v = 0; v < words_.size(); ++v) {
    h.update(words_[v]);
    h.update(flags_[v][0] ? "1" : "0");
    h.update(flags_[v][1] ? "1" : "0");
    h.update_separator();
  }
  return h.hex();
}

std::vector<std::size_t> EventGraph::vertices_of_class(int t) const {
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < words_.size(); ++v)
    if (flags_[v][t]) out.push_back(v);
  return out;
}

namespace {

std::vector<std::vector<Neighbor>> to_rows(const std::map<std::pair<std::size_t, std::size_t>, std::int64_t>& counts,
                                           std::size_t n) {
  std::vector<std::vector<Neighbor>> rows(n);
  for (const auto& [key, f] : counts) rows[key.first].push_back({key.second, f});
  return rows;
}

}  // namespace

EventGraph build_event_graph(const KeywordSet& keywords, std::span<const LogSequence> corpus, std::size_t window,
                             bool directed) {
  if (keywords.empty()) throw Error(Errc::invalid_argument, "event graph: keyword set is empty");
  if (window == 0) throw Error(Errc::invalid_argument, "event graph: co-occurrence window must be positive");

  std::map<std::string, ClassFlags> flag_of;
  for (int t = 0; t < 2; ++t)
    for (const auto& k : keywords.lists[t]) flag_of[k.word][t] = true;

  std::set<std::string> present;
  for (const auto& seq : corpus)
    for (const auto& tok : seq.tokens())
      if (flag_of.count(tok)) present.insert(tok);
  if (present.empty()) throw Error(Errc::empty_graph, "event graph: no keyword occurs in the corpus");

  std::vector<std::string> words(present.begin(), present.end());
  std::vector<ClassFlags> flags;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t v = 0; v < words.size(); ++v) {
    flags.push_back(flag_of[words[v]]);
    index.emplace(words[v], v);
  }

  std::map<std::pair<std::size_t, std::size_t>, std::int64_t> sym, dir;
  std::vector<std::ptrdiff_t> ids;
  for (const auto& seq : corpus) {
    const auto& toks = seq.tokens();
    ids.assign(toks.size(), -1);
    for (std::size_t i = 0; i < toks.size(); ++i) {
      auto it = index.find(toks[i]);
      if (it != index.end()) ids[i] = static_cast<std::ptrdiff_t>(it->second);
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] < 0) continue;
      const std::size_t stop = std::min(ids.size(), i + window + 1);
      for (std::size_t j = i + 1; j < stop; ++j) {
        if (ids[j] < 0 || ids[j] == ids[i]) continue;
        const auto a = static_cast<std::size_t>(ids[i]);
        const auto b = static_cast<std::size_t>(ids[j]);
        ++sym[{a, b}];
        ++sym[{b, a}];
        if (directed) ++dir[{a, b}];
      }
    }
  }
  auto rows = to_rows(sym, words.size());
  std::vector<std::vector<Neighbor>> drows;
  if (directed) drows = to_rows(dir, words.size());
  return EventGraph(std::move(words), std::move(flags), std::move(rows), std::move(drows));
}

WalkPolicy transition_probabilities(const EventGraph& g) {
  if (g.empty()) throw Error(Errc::empty_graph, "transition probabilities of an empty graph");
  WalkPolicy policy;
  policy.rows.resize(g.size());
  policy.dead_end.assign(g.size(), false);
  for (std::size_t a = 0; a < g.size(); ++a) {
    const auto& out = g.directed() ? g.successors(a) : g.neighbors(a);
    std::int64_t total = 0;
    for (const auto& n : out) total += n.frequency;
    if (total == 0) {
      policy.dead_end[a] = true;
      continue;
    }
    auto& row = policy.rows[a];
    row.reserve(out.size());
    for (const auto& n : out) row.push_back({n.vertex, static_cast<Scalar>(n.frequency) / static_cast<Scalar>(total)});
  }
  return policy;
}

Subgraph induce_subgraph(const EventGraph& g, std::span<const std::size_t> vertices) {
  Subgraph sg;
  std::unordered_map<std::size_t, std::size_t> local;
  for (std::size_t v : vertices) {
    if (v >= g.size()) throw Error(Errc::invalid_argument, "induce_subgraph: vertex out of range");
    if (local.emplace(v, sg.vertices.size()).second) sg.vertices.push_back(v);
  }
  const auto n = static_cast<Eigen::Index>(sg.vertices.size());
  const auto width = static_cast<Eigen::Index>(g.feature_width());
  sg.features = Matrix::Zero(n, width);
  sg.adjacency = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t v = sg.vertices[static_cast<std::size_t>(i)];
    sg.features(i, 0) = g.class_flags(v)[0] ? 1.0 : 0.0;
    sg.features(i, 1) = g.class_flags(v)[1] ? 1.0 : 0.0;
    sg.features(i, static_cast<Eigen::Index>(2 + v)) = 1.0;
    for (const auto& nb : g.neighbors(v)) {
      auto it = local.find(nb.vertex);
      if (it == local.end()) continue;
      const auto j = static_cast<Eigen::Index>(it->second);
      sg.adjacency(i, j) = 1.0;
      if (i < j) sg.edges.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j)});
    }
  }
  std::sort(sg.edges.begin(), sg.edges.end());
  return sg;
}

Subgraph induce_sequence_subgraph(const EventGraph& g, const LogSequence& seq) {
  std::set<std::size_t> present;
  for (const auto& tok : seq.tokens())
    if (auto v = g.index_of(tok)) present.insert(*v);
  std::vector<std::size_t> vs(present.begin(), present.end());
  return induce_subgraph(g, vs);
}

Subgraph permute(const Subgraph& sg, std::span<const std::size_t> perm) {
  if (perm.size() != sg.size()) throw Error(Errc::invalid_argument, "permute: permutation size mismatch");
  const auto n = static_cast<Eigen::Index>(sg.size());
  Subgraph out;
  out.vertices.resize(sg.size());
  out.features.resize(n, sg.features.cols());
  out.adjacency.resize(n, n);
  std::vector<std::size_t> inverse(sg.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    out.vertices[i] = sg.vertices[perm[i]];
    out.features.row(static_cast<Eigen::Index>(i)) = sg.features.row(static_cast<Eigen::Index>(perm[i]));
    inverse[perm[i]] = i;
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      out.adjacency(i, j) = sg.adjacency(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]),
                                         static_cast<Eigen::Index>(perm[static_cast<std::size_t>(j)]));
  for (const auto& e : sg.edges) {
    std::size_t a = inverse[e[0]], b = inverse[e[1]];
    if (a > b) std::swap(a, b);
    out.edges.push_back({a, b});
  }
  std::sort(out.edges.begin(), out.edges.end());
  return out;
}

nlohmann::ordered_json to_json(const EventGraph& g) {
  nlohmann::ordered_json j;
  j["vertices"] = nlohmann::ordered_json::array();
  for (std::size_t v = 0; v < g.size(); ++v)
    j["vertices"].push_back({{"word", g.word(v)}, {"class_flags", {g.class_flags(v)[0], g.class_flags(v)[1]}}});
  j["edges"] = nlohmann::ordered_json::array();
  for (std::size_t a = 0; a < g.size(); ++a)
    for (const auto& n : g.neighbors(a))
      if (a < n.vertex) j["edges"].push_back({a, n.vertex, n.frequency});
  if (g.directed()) {
    j["directed_edges"] = nlohmann::ordered_json::array();
    for (std::size_t a = 0; a < g.size(); ++a)
      for (const auto& n : g.successors(a)) j["directed_edges"].push_back({a, n.vertex, n.frequency});
  }
  return j;
}

EventGraph event_graph_from_json(const nlohmann::json& j) {
  std::vector<std::string> words;
  std::vector<ClassFlags> flags;
  for (const auto& v : j.at("vertices")) {
    words.push_back(v.at("word").get<std::string>());
    flags.push_back({v.at("class_flags").at(0).get<bool>(), v.at("class_flags").at(1).get<bool>()});
  }
  std::map<std::pair<std::size_t, std::size_t>, std::int64_t> sym, dir;
  for (const auto& e : j.at("edges")) {
    const auto a = e.at(0).get<std::size_t>(), b = e.at(1).get<std::size_t>();
    const auto f = e.at(2).get<std::int64_t>();
    if (a >= words.size() || b >= words.size() || a == b || f < 1)
      throw Error(Errc::bad_format, "graph json: invalid edge");
    sym[{a, b}] = f;
    sym[{b, a}] = f;
  }
  std::vector<std::vector<Neighbor>> drows;
  if (j.contains("directed_edges")) {
    for (const auto& e : j.at("directed_edges")) dir[{e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>()}] = e.at(2).get<std::int64_t>();
    drows = to_rows(dir, words.size());
  }
  auto rows = to_rows(sym, words.size());
  return EventGraph(std::move(words), std::move(flags), std::move(rows), std::move(drows));
}

}  // namespace loglg
