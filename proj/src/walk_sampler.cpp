#include "loglg/walk_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace loglg {

std::size_t keyword_count(const LogSequence& seq, const KeywordSet& keywords) {
  const auto words = keywords.all_words();
  std::size_t n = 0;
  for (const auto& tok : seq.tokens())
    if (words.count(tok)) ++n;
  return n;
}

int WalkLengthModel::sample(Rng& rng) const {
  Scalar draw = mu;
  if (sigma2 > 0) {
    std::normal_distribution<Scalar> normal(mu, std::sqrt(sigma2));
    draw = normal(rng);
  }
  const auto rounded = std::llround(draw);
  return static_cast<int>(std::clamp<long long>(rounded, l_min, l_max));
}

WalkLengthModel fit_length_model(std::span<const LogSequence> corpus, const KeywordSet& keywords, int l_max) {
  if (corpus.size() < 2) throw Error(Errc::invalid_argument, "walk length model needs at least two sequences");
  if (l_max < 1) throw Error(Errc::invalid_argument, "walk length upper bound must be >= 1");
  const auto words = keywords.all_words();
  std::vector<Scalar> counts;
  counts.reserve(corpus.size());
  for (const auto& seq : corpus) {
    std::size_t n = 0;
    for (const auto& tok : seq.tokens())
      if (words.count(tok)) ++n;
    counts.push_back(static_cast<Scalar>(n));
  }
  const auto n = static_cast<Scalar>(counts.size());
  Scalar mean = 0;
  for (Scalar c : counts) mean += c;
  mean /= n;
  Scalar ss = 0;
  for (Scalar c : counts) ss += (c - mean) * (c - mean);
  WalkLengthModel m;
  m.mu = mean;
  m.sigma2 = ss / (n - 1);
  m.l_max = l_max;
  return m;
}

WalkSampler::WalkSampler(const EventGraph& g, WalkPolicy policy, WalkLengthModel model)
    : graph_(&g), policy_(std::move(policy)), model_(model) {
  if (policy_.rows.size() != g.size()) throw Error(Errc::invalid_argument, "walk policy does not match graph");
  for (int t = 0; t < 2; ++t) {
    starts_[t] = g.vertices_of_class(t);
    if (starts_[t].empty())
      throw Error(Errc::degenerate, "walk sampler: class " + std::to_string(t) + " has no keyword in the graph");
  }
}

std::size_t WalkSampler::step(std::size_t from, Rng& rng) const {
  const auto& row = policy_.rows[from];
  std::uniform_real_distribution<Scalar> unif(0.0, 1.0);
  const Scalar u = unif(rng);
  Scalar acc = 0;
  for (const auto& tr : row) {
    acc += tr.probability;
    if (u < acc) return tr.to;
  }
  return row.back().to;
}

WalkSample WalkSampler::walk_from(std::size_t start, int length, int start_class, Rng& rng) const {
  WalkSample s;
  s.start_class = start_class;
  s.start_vertex = start;
  s.path.push_back(start);
  std::size_t at = start;
  for (int i = 0; i < length && !policy_.dead_end[at]; ++i) {
    at = step(at, rng);
    s.path.push_back(at);
  }
  s.subgraph = induce_subgraph(*graph_, s.path);
  return s;
}

WalkSample WalkSampler::sample(Rng& rng) const {
  std::uniform_int_distribution<int> coin(0, 1);
  const int t = coin(rng);
  std::uniform_int_distribution<std::size_t> pick(0, starts_[t].size() - 1);
  const std::size_t start = starts_[t][pick(rng)];
  const int length = model_.sample(rng);
  return walk_from(start, length, t, rng);
}

}  // namespace loglg
