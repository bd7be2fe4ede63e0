#ifndef LOGLG_EVENT_GRAPH_HPP_
#define LOGLG_EVENT_GRAPH_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "loglg/common.hpp"
#include "loglg/ingest.hpp"
#include "loglg/keywords.hpp"

namespace loglg {

typedef std::array<bool, 2> ClassFlags;

struct Neighbor {
  std::size_t vertex;
  std::int64_t frequency;

  bool operator==(const Neighbor&) const = default;
};

/// Keyword co-occurrence graph. Vertices are keywords in lexicographic order;
/// adjacency is symmetric with F_ab = F_ba >= 1 and no self-loops.
class EventGraph {
 public:
  EventGraph() = default;
  EventGraph(std::vector<std::string> words, std::vector<ClassFlags> flags,
             std::vector<std::vector<Neighbor>> adjacency,
             std::vector<std::vector<Neighbor>> directed = {});

  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }
  std::size_t feature_width() const { return 2 + words_.size(); }

  const std::string& word(std::size_t v) const { return words_[v]; }
  const std::vector<std::string>& words() const { return words_; }
  const ClassFlags& class_flags(std::size_t v) const { return flags_[v]; }
  std::optional<std::size_t> index_of(const std::string& word) const;

  /// Symmetric neighbor lists sorted by vertex index.
  const std::vector<Neighbor>& neighbors(std::size_t v) const { return adjacency_[v]; }
  /// Directed "a followed by b" counts; only populated in directed mode.
  bool directed() const { return !directed_.empty(); }
  const std::vector<Neighbor>& successors(std::size_t v) const { return directed_[v]; }

  std::int64_t frequency(std::size_t a, std::size_t b) const;
  std::size_t edge_count() const;

  /// Class flags in the first two slots, then the one-hot vertex index.
  Vector features(std::size_t v) const;

  /// Fingerprint over words and class flags. Models record it so they are
  /// never applied to a graph with a different feature layout.
  std::string vocab_hash() const;

  /// Vertices carrying class t, in index order.
  std::vector<std::size_t> vertices_of_class(int t) const;

 private:
  std::vector<std::string> words_;
  std::vector<ClassFlags> flags_;
  std::vector<std::vector<Neighbor>> adjacency_;
  std::vector<std::vector<Neighbor>> directed_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Build the graph from both classes' keywords over a corpus. Two keyword
/// tokens at positions i < j co-occur when j - i <= window; each such pair
/// adds one to F_ab. With `directed`, "a followed by b" counts are also kept
/// for walk probabilities. Throws Errc::empty_graph if no keyword occurs.
EventGraph build_event_graph(const KeywordSet& keywords, std::span<const LogSequence> corpus,
                             std::size_t window, bool directed = false);

struct Transition {
  std::size_t to;
  Scalar probability;
};

/// Row-normalized transition probabilities p_ab = F_ab / sum_t F_at.
/// Isolated vertices get an empty row and are flagged as dead ends.
struct WalkPolicy {
  std::vector<std::vector<Transition>> rows;
  std::vector<bool> dead_end;
};

WalkPolicy transition_probabilities(const EventGraph& g);

/// Induced subgraph with dense per-vertex features and a 0/1 adjacency
/// matrix, both in the order of `vertices`.
struct Subgraph {
  std::vector<std::size_t> vertices;
  std::vector<std::array<std::size_t, 2>> edges;  // local indices, first < second
  Matrix features;                                // n x (2 + |V|)
  Matrix adjacency;                               // n x n

  std::size_t size() const { return vertices.size(); }
  bool empty() const { return vertices.empty(); }
};

/// Induced subgraph on the given vertices (duplicates collapse, order of first appearance kept).
Subgraph induce_subgraph(const EventGraph& g, std::span<const std::size_t> vertices);

/// Induced subgraph on the keywords of g present in the sequence, in vertex-index order.
Subgraph induce_sequence_subgraph(const EventGraph& g, const LogSequence& seq);

/// Reorder a subgraph's vertices: new position i holds old vertex perm[i].
Subgraph permute(const Subgraph& sg, std::span<const std::size_t> perm);

nlohmann::ordered_json to_json(const EventGraph& g);
EventGraph event_graph_from_json(const nlohmann::json& j);

}  // namespace loglg

#endif  // LOGLG_EVENT_GRAPH_HPP_
