#include "loglg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <regex>
#include <map>
#include <set>
#include <sstream>

#include "loglg/gold.hpp"
#include "loglg/keywords.hpp"

namespace loglg {

Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  Metrics m{tp, fp, fn, tn, 0, 0, 0, {}};
  if (tp + fp > 0)
    m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  else
    m.flags.push_back("precision_undefined");
  if (tp + fn > 0)
    m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  else
    m.flags.push_back("recall_undefined");
  if (m.precision + m.recall > 0)
    m.f1 = 2 * m.precision * m.recall / (m.precision + m.recall);
  else
    m.flags.push_back("f1_undefined");
  return m;
}

Metrics score(std::span<const Prediction> predictions, const std::unordered_map<std::string, Label>& gold) {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::set<std::string> seen;
  for (const auto& p : predictions) {
    auto it = gold.find(p.sequence_id);
    if (it == gold.end()) throw Error(Errc::invalid_argument, "score: no gold label for '" + p.sequence_id + "'");
    if (!seen.insert(p.sequence_id).second)
      throw Error(Errc::invalid_argument, "score: duplicate prediction for '" + p.sequence_id + "'");
    const bool pred = p.label == Label::Anomaly, truth = it->second == Label::Anomaly;
    tp += pred && truth;
    fp += pred && !truth;
    fn += !pred && truth;
    tn += !pred && !truth;
  }
  if (seen.size() != gold.size()) {
    for (const auto& [id, _] : gold)
      if (!seen.count(id)) throw Error(Errc::invalid_argument, "score: no prediction for '" + id + "'");
  }
  return metrics_from_counts(tp, fp, fn, tn);
}

std::unordered_map<std::string, Label> gold_map(std::span<const LogSequence> corpus) {
  std::unordered_map<std::string, Label> out;
  for (const auto& seq : corpus) {
    const auto& g = GoldLabels::of(seq);
    if (!g) throw Error(Errc::invalid_argument, "sequence '" + seq.id() + "' has no gold label");
    out[seq.id()] = *g;
  }
  return out;
}

Metrics score(std::span<const Prediction> predictions, std::span<const LogSequence> gold_corpus) {
  return score(predictions, gold_map(gold_corpus));
}

nlohmann::ordered_json to_json(const Metrics& m) {
  nlohmann::ordered_json j;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f1"] = m.f1;
  j["tp"] = m.tp;
  j["fp"] = m.fp;
  j["fn"] = m.fn;
  j["tn"] = m.tn;
  j["flags"] = m.flags;
  return j;
}

namespace {

std::vector<std::string> make_words(std::size_t count, Rng& rng, std::set<std::string>& taken) {
  static const std::string consonants = "bcdfghjklmnprstvwz";
  static const std::string vowels = "aeiou";
  std::uniform_int_distribution<std::size_t> c(0, consonants.size() - 1), v(0, vowels.size() - 1), syl(2, 3);
  std::vector<std::string> out;
  while (out.size() < count) {
    std::string w;
    for (std::size_t s = syl(rng); s > 0; --s) {
      w += consonants[c(rng)];
      w += vowels[v(rng)];
    }
    if (default_stopwords().count(w) || !taken.insert(w).second) continue;
    out.push_back(std::move(w));
  }
  return out;
}

std::discrete_distribution<std::size_t> zipf_over(std::size_t n, double s) {
  std::vector<double> w(n);
  for (std::size_t r = 0; r < n; ++r) w[r] = 1.0 / std::pow(static_cast<double>(r + 1), s);
  return {w.begin(), w.end()};
}

}  // namespace

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
  if (!(spec.anomaly_rate > 0.0 && spec.anomaly_rate < 1.0))
    throw Error(Errc::invalid_argument, "synthetic: anomaly_rate must lie in (0, 1)");
  auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!in_unit(spec.shared_fraction) || !in_unit(spec.anomaly_line_fraction) || !in_unit(spec.noise_rate))
    throw Error(Errc::invalid_argument, "synthetic: fractions must lie in [0, 1]");
  if (spec.n_sequences == 0 || spec.min_lines == 0 || spec.min_lines > spec.max_lines)
    throw Error(Errc::invalid_argument, "synthetic: bad sequence count or line range");
  if (spec.template_min_words == 0 || spec.template_min_words > spec.template_max_words)
    throw Error(Errc::invalid_argument, "synthetic: bad template length range");
  if (spec.normal_templates == 0 || spec.anomaly_templates == 0)
    throw Error(Errc::invalid_argument, "synthetic: need at least one template per class");
  if (spec.zipf < 0) throw Error(Errc::invalid_argument, "synthetic: zipf exponent must be non-negative");

  Rng rng(spec.seed);
  SyntheticCorpus out;
  std::set<std::string> taken;
  auto vocab = [&](const std::vector<std::string>& given, std::size_t size) {
    if (given.empty()) return make_words(size, rng, taken);
    for (const auto& w : given)
      if (!taken.insert(w).second) throw Error(Errc::invalid_argument, "synthetic: vocabularies overlap on '" + w + "'");
    return given;
  };
  out.normal_vocab = vocab(spec.normal_vocab, spec.normal_vocab_size);
  out.anomaly_vocab = vocab(spec.anomaly_vocab, spec.anomaly_vocab_size);
  out.shared_vocab = vocab(spec.shared_vocab, spec.shared_vocab_size);
  if (out.normal_vocab.empty() || out.anomaly_vocab.size() < 2)
    throw Error(Errc::invalid_argument, "synthetic: need a normal vocabulary and at least two anomaly words");
  if (out.shared_vocab.empty() && spec.shared_fraction > 0)
    throw Error(Errc::invalid_argument, "synthetic: shared_fraction > 0 with an empty shared vocabulary");
  const std::set<std::string> shared(out.shared_vocab.begin(), out.shared_vocab.end());
  const std::set<std::string> anomalous_words(out.anomaly_vocab.begin(), out.anomaly_vocab.end());

  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> tpl_len(spec.template_min_words, spec.template_max_words);
  auto draw_shared = zipf_over(std::max<std::size_t>(out.shared_vocab.size(), 1), spec.zipf);
  auto make_templates = [&](std::size_t count, const std::vector<std::string>& words) {
    auto draw = zipf_over(words.size(), spec.zipf);
    std::vector<std::vector<std::string>> tpls(count);
    for (auto& t : tpls) {
      const std::size_t len = tpl_len(rng);
      for (std::size_t i = 0; i < len; ++i)
        t.push_back(u(rng) < spec.shared_fraction ? out.shared_vocab[draw_shared(rng)] : words[draw(rng)]);
    }
    return tpls;
  };
  out.normal_templates = make_templates(spec.normal_templates, out.normal_vocab);
  out.anomaly_templates = make_templates(spec.anomaly_templates, out.anomaly_vocab);

  // Seeds: highest expected occurrence per anomaly line, ties by word.
  {
    auto weights = zipf_over(out.anomaly_templates.size(), spec.zipf).probabilities();
    std::map<std::string, double> mass;
    for (std::size_t t = 0; t < out.anomaly_templates.size(); ++t)
      for (const auto& w : out.anomaly_templates[t])
        if (anomalous_words.count(w)) mass[w] += weights[t];
    std::vector<std::pair<std::string, double>> ranked(mass.begin(), mass.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (ranked.size() < 2) throw Error(Errc::invalid_argument, "synthetic: anomaly templates use fewer than two words");
    out.seed_keywords = {ranked[0].first, ranked[1].first};
  }

  const auto n = spec.n_sequences;
  const auto n_anomaly = static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.anomaly_rate));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> is_anomaly(n, false);
  for (std::size_t i = 0; i < n_anomaly; ++i) is_anomaly[order[i]] = true;

  auto pick_normal = zipf_over(out.normal_templates.size(), spec.zipf);
  auto pick_anomaly = zipf_over(out.anomaly_templates.size(), spec.zipf);
  std::uniform_int_distribution<std::size_t> lines(spec.min_lines, spec.max_lines);
  std::uniform_int_distribution<std::size_t> noise_normal(0, out.normal_vocab.size() - 1);
  std::uniform_int_distribution<std::size_t> noise_anomaly(0, out.anomaly_vocab.size() - 1);

  const int width = static_cast<int>(std::to_string(n - 1).size());
  out.sequences.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t n_lines = lines(rng);
    const std::size_t forced = std::uniform_int_distribution<std::size_t>(0, n_lines - 1)(rng);
    std::vector<std::string> tokens;
    for (std::size_t l = 0; l < n_lines; ++l) {
      const bool bad_line = is_anomaly[i] && (l == forced || u(rng) < spec.anomaly_line_fraction);
      const auto& tpl = bad_line ? out.anomaly_templates[pick_anomaly(rng)] : out.normal_templates[pick_normal(rng)];
      for (const auto& w : tpl) {
        if (shared.count(w) || !(u(rng) < spec.noise_rate)) {
          tokens.push_back(w);
          continue;
        }
        tokens.push_back(anomalous_words.count(w) ? out.normal_vocab[noise_normal(rng)]
                                                  : out.anomaly_vocab[noise_anomaly(rng)]);
      }
    }
    std::string id = std::to_string(i);
    id.insert(0, static_cast<std::size_t>(width) - id.size(), '0');
    out.sequences.emplace_back("syn" + id, std::move(tokens), is_anomaly[i] ? Label::Anomaly : Label::Normal);
  }
  return out;
}

DatasetKind dataset_kind_from_string(const std::string& s) {
  if (s == "hdfs") return DatasetKind::hdfs;
  if (s == "bgl") return DatasetKind::bgl;
  if (s == "thunderbird") return DatasetKind::thunderbird;
  if (s == "hadoop") return DatasetKind::hadoop;
  if (s == "openstack") return DatasetKind::openstack;
  throw Error(Errc::invalid_argument, "unknown dataset kind '" + s + "' (hdfs, bgl, thunderbird, hadoop, openstack)");
}

std::string to_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::hdfs: return "hdfs";
    case DatasetKind::bgl: return "bgl";
    case DatasetKind::thunderbird: return "thunderbird";
    case DatasetKind::hadoop: return "hadoop";
    case DatasetKind::openstack: return "openstack";
  }
  return "hdfs";
}

namespace {

struct LineFormat {
  std::regex pattern;
  int timestamp_group;
  int text_group;
  int label_group;  // 0: unlabeled
};

const LineFormat& format_of(DatasetKind kind) {
  // Alert-tagged formats: <label> <epoch> <date> <node> <time> ... with the
  // message text starting at the Type field (BGL) or after the location
  // field (Thunderbird).
  static const LineFormat hdfs{std::regex(R"(^(\d{6} \d{6}) \d+ ([A-Z]+ .*)$)"), 1, 2, 0};
  static const LineFormat bgl{
      std::regex(R"(^(\S+) \d+ \d{4}\.\d{2}\.\d{2} \S+ (\d{4}-\d{2}-\d{2}-\d{2}\.\d{2}\.\d{2}\.\d+) \S+ (\S+ .*)$)"), 2, 3,
      1};
  static const LineFormat thunderbird{
      std::regex(R"(^(\S+) \d+ (\d{4}\.\d{2}\.\d{2}) \S+ \S+ +\d+ (\d{2}:\d{2}:\d{2}) \S+ (.*)$)"), 2, 4, 1};
  static const LineFormat hadoop{
      std::regex(R"(^(\d{4}-\d{2}-\d{2} \d{2}:\d{2}:\d{2},\d{3}) ([A-Z]+ \[[^\]]*\] .*)$)"), 1, 2, 0};
  static const LineFormat openstack{
      std::regex(R"(^\S+ (\d{4}-\d{2}-\d{2} \d{2}:\d{2}:\d{2}\.\d{3}) \d+ ([A-Z]+ .*)$)"), 1, 2, 0};
  switch (kind) {
    case DatasetKind::hdfs: return hdfs;
    case DatasetKind::bgl: return bgl;
    case DatasetKind::thunderbird: return thunderbird;
    case DatasetKind::hadoop: return hadoop;
    case DatasetKind::openstack: return openstack;
  }
  return hdfs;
}

}  // namespace

std::vector<RawLogRecord> load_loghub_sample(std::istream& in, DatasetKind kind) {
  const auto& fmt = format_of(kind);
  std::vector<RawLogRecord> out;
  std::string line;
  std::size_t line_no = 0;
  for (; std::getline(in, line); ++line_no) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::smatch m;
    if (!std::regex_match(line, m, fmt.pattern))
      throw Error(Errc::bad_format, to_string(kind) + " sample: line " + std::to_string(line_no + 1) +
                                        " does not match the expected format: " + line.substr(0, 120));
    RawLogRecord rec;
    rec.line_no = line_no;
    rec.timestamp = m[fmt.timestamp_group].str();
    if (kind == DatasetKind::thunderbird) rec.timestamp = m[2].str() + " " + m[3].str();
    rec.text = m[fmt.text_group].str();
    if (fmt.label_group) rec.gold_label = m[fmt.label_group].str() == "-" ? Label::Normal : Label::Anomaly;
    out.push_back(std::move(rec));
  }
  return out;
}

std::unordered_map<std::string, Label> read_block_labels(std::istream& in) {
  std::unordered_map<std::string, Label> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (line_no == 1 && line.rfind("BlockId", 0) == 0)) continue;
    const auto comma = line.find(',');
    const std::string value = comma == std::string::npos ? "" : line.substr(comma + 1);
    if (value != "Normal" && value != "Anomaly")
      throw Error(Errc::bad_format, "block labels: line " + std::to_string(line_no) + " is not 'BlockId,Normal|Anomaly'");
    out[line.substr(0, comma)] = value == "Anomaly" ? Label::Anomaly : Label::Normal;
  }
  return out;
}

void apply_line_labels(std::vector<RawLogRecord>& records, std::istream& in) {
  std::unordered_map<std::size_t, Label> labels;
  std::string line;
  std::size_t line_no = 0;
  static const std::regex row(R"(^\s*(\d+)\s*,\s*([01])\s*$)");
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::smatch m;
    if (!std::regex_match(line, m, row))
      throw Error(Errc::bad_format, "line labels: line " + std::to_string(line_no) + " is not 'line_no,0|1'");
    labels[std::stoull(m[1].str())] = m[2].str() == "1" ? Label::Anomaly : Label::Normal;
  }
  for (auto& rec : records) {
    auto it = labels.find(rec.line_no);
    rec.gold_label = it == labels.end() ? Label::Normal : it->second;
  }
}

void apply_block_labels(std::vector<LogSequence>& sequences, const std::unordered_map<std::string, Label>& labels) {
  for (auto& seq : sequences) {
    auto it = labels.find(seq.id());
    GoldLabels::set(seq, it == labels.end() ? std::nullopt : std::optional<Label>(it->second));
  }
}

std::vector<LogSequence> make_sequences(std::span<const RawLogRecord> records, DatasetKind kind,
                                        std::size_t window_size) {
  if (kind == DatasetKind::hdfs) return group_by_key(records, hdfs_block_pattern()).sequences;
  return window(records, window_size);
}

std::pair<std::vector<LogSequence>, std::vector<LogSequence>> chronological_split(std::span<const LogSequence> corpus,
                                                                                  double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error(Errc::invalid_argument, "split fraction must lie in (0, 1)");
  const auto cut = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(corpus.size()) + 1e-9));
  return {{corpus.begin(), corpus.begin() + static_cast<std::ptrdiff_t>(cut)},
          {corpus.begin() + static_cast<std::ptrdiff_t>(cut), corpus.end()}};
}

}  // namespace loglg
