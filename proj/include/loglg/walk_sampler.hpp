#ifndef LOGLG_WALK_SAMPLER_HPP_
#define LOGLG_WALK_SAMPLER_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "loglg/common.hpp"
#include "loglg/event_graph.hpp"
#include "loglg/ingest.hpp"
#include "loglg/keywords.hpp"

namespace loglg {

typedef std::mt19937_64 Rng;

/// Number of keyword tokens in a sequence, counted with multiplicity. This
/// is the single definition behind walk-length fitting and vote abstention.
std::size_t keyword_count(const LogSequence& seq, const KeywordSet& keywords);

/// Gaussian walk-length model. Draws are rounded to the nearest integer and
/// clamped into [l_min, l_max].
struct WalkLengthModel {
  Scalar mu = 0;
  Scalar sigma2 = 0;
  int l_min = 1;
  int l_max = 64;

  int sample(Rng& rng) const;
};

/// mu = mean keyword count, sigma2 = unbiased variance. Needs >= 2 sequences.
WalkLengthModel fit_length_model(std::span<const LogSequence> corpus, const KeywordSet& keywords, int l_max = 64);

struct WalkSample {
  int start_class = 0;
  std::size_t start_vertex = 0;
  std::vector<std::size_t> path;  // visited vertices in walk order, start first
  Subgraph subgraph;              // induced on the distinct visited vertices
};

/// Pick a class uniformly, a start keyword uniformly within it, a length from
/// the Gaussian model, then walk that many transitions. The walk stops early
/// at a dead end.
class WalkSampler {
 public:
  WalkSampler(const EventGraph& g, WalkPolicy policy, WalkLengthModel model);

  WalkSample sample(Rng& rng) const;
  /// Walk of a fixed length from a fixed start, for tests and diagnostics.
  WalkSample walk_from(std::size_t start, int length, int start_class, Rng& rng) const;

  const EventGraph& graph() const { return *graph_; }
  const WalkLengthModel& length_model() const { return model_; }

 private:
  std::size_t step(std::size_t from, Rng& rng) const;

  const EventGraph* graph_;
  WalkPolicy policy_;
  WalkLengthModel model_;
  std::array<std::vector<std::size_t>, 2> starts_;
};

}  // namespace loglg

#endif  // LOGLG_WALK_SAMPLER_HPP_
