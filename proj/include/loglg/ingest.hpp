#ifndef LOGLG_INGEST_HPP_
#define LOGLG_INGEST_HPP_

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "loglg/common.hpp"

namespace loglg {

/// Replacement for digit runs longer than four characters.
inline constexpr std::string_view kNumSentinel = "[Num]";
inline constexpr std::size_t kMaxKeptDigitRun = 4;
/// Placeholder token for a window whose lines are all punctuation.
inline constexpr std::string_view kEmptyWindowToken = "[Empty]";

struct RawLogRecord {
  std::size_t line_no = 0;
  std::optional<std::string> timestamp;
  std::string text;
  std::optional<Label> gold_label;
};

/// An ordered token list with a stable id. The gold label is stored but can
/// only be read through GoldLabels (evaluation code); nothing on the
/// training path has access to it.
class LogSequence {
 public:
  LogSequence() = default;
  LogSequence(std::string id, std::vector<std::string> tokens, std::optional<Label> gold = std::nullopt);

  const std::string& id() const { return id_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const LogSequence& other) const = default;

 private:
  friend class GoldLabels;

  std::string id_;
  std::vector<std::string> tokens_;
  std::optional<Label> gold_;
};

/// Lowercase, split on whitespace and punctuation (keeping `_`, `/` and `.`
/// inside compound tokens) and replace digit runs longer than four with
/// `[Num]`. Throws Errc::empty_sequence when nothing survives.
std::vector<std::string> normalize_line(std::string_view text);

/// True if the token contains a run of more than kMaxKeptDigitRun digits.
bool has_long_digit_run(std::string_view token);

/// Reads one record per non-blank line. Line numbers are 0-based physical
/// line indices of the input.
std::vector<RawLogRecord> read_raw_records(std::istream& in);

struct GroupResult {
  std::vector<LogSequence> sequences;
  /// line_no of every record the key pattern did not match, or whose
  /// tokens normalized to nothing.
  std::vector<std::size_t> rejected;
};

/// One sequence per distinct key, in order of first appearance. The key is
/// the first capture group of `key_pattern` if it has one, else the whole match.
GroupResult group_by_key(std::span<const RawLogRecord> records, const std::regex& key_pattern);

/// Block-id pattern for HDFS (`blk_-123...`).
const std::regex& hdfs_block_pattern();

/// Fixed-size, non-overlapping, chronological windows. Ids are window indices.
std::vector<LogSequence> window(std::span<const RawLogRecord> records, std::size_t size);

/// JSON-lines, one object per sequence: {"id", "tokens", "gold_label": 0|1|null}.
void write_sequences_jsonl(std::ostream& out, std::span<const LogSequence> sequences);
std::vector<LogSequence> read_sequences_jsonl(std::istream& in);

}  // namespace loglg

#endif  // LOGLG_INGEST_HPP_
