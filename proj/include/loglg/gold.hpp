#ifndef LOGLG_GOLD_HPP_
#define LOGLG_GOLD_HPP_

#include <optional>

#include "loglg/ingest.hpp"

namespace loglg {

/// The only accessor for LogSequence gold labels. Evaluation, dataset
/// loaders and the sequence file format use it; training code must not
/// include this header (checked by the gold-label audit test).
class GoldLabels {
 public:
  static const std::optional<Label>& of(const LogSequence& seq) { return seq.gold_; }
  static void set(LogSequence& seq, std::optional<Label> label) { seq.gold_ = label; }
};

}  // namespace loglg

#endif  // LOGLG_GOLD_HPP_
