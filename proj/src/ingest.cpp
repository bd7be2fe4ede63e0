#include "loglg/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <istream>
#include <ostream>
#include <unordered_map>

#include <json.hpp>

#include "loglg/gold.hpp"

namespace loglg {

std::string Fnv1a::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(state_));
  return buf;
}

LogSequence::LogSequence(std::string id, std::vector<std::string> tokens, std::optional<Label> gold)
    : id_(std::move(id)), tokens_(std::move(tokens)), gold_(gold) {}

namespace {

bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

// Non-ASCII bytes are kept as word characters so UTF-8 text is never split
// inside a code point.
bool is_word_char(unsigned char c) {
  return std::isalnum(c) || c == '_' || c == '/' || c == '.' || c >= 0x80;
}

bool is_joiner(unsigned char c) { return c == '/' || c == '.'; }

bool has_content(std::string_view tok) {
  return std::any_of(tok.begin(), tok.end(), [](unsigned char c) { return std::isalnum(c) || c >= 0x80; });
}

std::string replace_long_digit_runs(std::string_view tok) {
  std::string out;
  out.reserve(tok.size());
  std::size_t i = 0;
  while (i < tok.size()) {
    if (!is_digit(tok[i])) {
      out.push_back(tok[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < tok.size() && is_digit(tok[j])) ++j;
    if (j - i > kMaxKeptDigitRun)
      out.append(kNumSentinel);
    else
      out.append(tok.substr(i, j - i));
    i = j;
  }
  return out;
}

std::optional<Label> merge_any_anomaly(std::optional<Label> acc, std::optional<Label> next) {
  if (!next) return acc;
  if (*next == Label::Anomaly) return Label::Anomaly;
  return acc ? acc : next;
}

}  // namespace

bool has_long_digit_run(std::string_view token) {
  std::size_t run = 0;
  for (unsigned char c : token) {
    run = is_digit(c) ? run + 1 : 0;
    if (run > kMaxKeptDigitRun) return true;
  }
  return false;
}

std::vector<std::string> normalize_line(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !is_word_char(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && is_word_char(text[j])) ++j;
    std::string_view raw = text.substr(i, j - i);
    i = j;
    // Joiners only glue word pieces together; strip them at the edges.
    while (!raw.empty() && is_joiner(raw.front())) raw.remove_prefix(1);
    while (!raw.empty() && is_joiner(raw.back())) raw.remove_suffix(1);
    if (raw.empty() || !has_content(raw)) continue;
    std::string tok(raw);
    for (char& c : tok)
      if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    tokens.push_back(replace_long_digit_runs(tok));
  }
  if (tokens.empty()) throw Error(Errc::empty_sequence, "line normalizes to zero tokens");
  return tokens;
}

std::vector<RawLogRecord> read_raw_records(std::istream& in) {
  std::vector<RawLogRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto first = line.find_first_not_of(" \t");
    if (first != std::string::npos) {
      RawLogRecord r;
      r.line_no = line_no;
      r.text = line;
      out.push_back(std::move(r));
    }
    ++line_no;
  }
  return out;
}

const std::regex& hdfs_block_pattern() {
  static const std::regex re(R"((blk_-?\d+))");
  return re;
}

GroupResult group_by_key(std::span<const RawLogRecord> records, const std::regex& key_pattern) {
  GroupResult result;
  struct Pending {
    std::vector<std::string> tokens;
    std::optional<Label> label;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, Pending> groups;
  std::size_t matched = 0;
  for (const auto& rec : records) {
    std::smatch m;
    if (!std::regex_search(rec.text, m, key_pattern)) {
      result.rejected.push_back(rec.line_no);
      continue;
    }
    ++matched;
    std::string key = m.size() > 1 && m[1].matched ? m[1].str() : m[0].str();
    std::vector<std::string> toks;
    try {
      toks = normalize_line(rec.text);
    } catch (const Error&) {
      result.rejected.push_back(rec.line_no);
      continue;
    }
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.tokens.insert(it->second.tokens.end(), toks.begin(), toks.end());
    it->second.label = merge_any_anomaly(it->second.label, rec.gold_label);
  }
  if (matched == 0) throw Error(Errc::invalid_argument, "key pattern matches no record");
  result.sequences.reserve(order.size());
  for (const auto& key : order) {
    auto& p = groups.at(key);
    result.sequences.emplace_back(key, std::move(p.tokens), p.label);
  }
  return result;
}

std::vector<LogSequence> window(std::span<const RawLogRecord> records, std::size_t size) {
  if (size == 0) throw Error(Errc::invalid_argument, "window size must be >= 1");
  std::vector<LogSequence> out;
  for (std::size_t start = 0, idx = 0; start < records.size(); start += size, ++idx) {
    const std::size_t stop = std::min(records.size(), start + size);
    std::vector<std::string> tokens;
    std::optional<Label> label;
    for (std::size_t i = start; i < stop; ++i) {
      try {
        auto toks = normalize_line(records[i].text);
        tokens.insert(tokens.end(), toks.begin(), toks.end());
      } catch (const Error&) {
        // punctuation-only line: contributes no tokens but still belongs to this window
      }
      label = merge_any_anomaly(label, records[i].gold_label);
    }
    if (tokens.empty()) tokens.emplace_back(kEmptyWindowToken);
    out.emplace_back(std::to_string(idx), std::move(tokens), label);
  }
  return out;
}

void write_sequences_jsonl(std::ostream& out, std::span<const LogSequence> sequences) {
  for (const auto& s : sequences) {
    nlohmann::ordered_json j;
    j["id"] = s.id();
    j["tokens"] = s.tokens();
    const auto& g = GoldLabels::of(s);
    j["gold_label"] = g ? nlohmann::ordered_json(to_index(*g)) : nlohmann::ordered_json(nullptr);
    out << j.dump() << '\n';
  }
}

std::vector<LogSequence> read_sequences_jsonl(std::istream& in) {
  std::vector<LogSequence> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      std::optional<Label> gold;
      if (j.contains("gold_label") && !j["gold_label"].is_null()) gold = label_from_index(j["gold_label"].get<int>());
      auto tokens = j.at("tokens").get<std::vector<std::string>>();
      if (tokens.empty()) throw Error(Errc::bad_format, "empty token list");
      out.emplace_back(j.at("id").get<std::string>(), std::move(tokens), gold);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::bad_format, "sequence file line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(Errc::bad_format, "sequence file line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace loglg
