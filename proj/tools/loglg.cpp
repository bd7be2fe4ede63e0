// loglg command-line tool: ingest, synth, train, detect, eval, report.
//
// Exit codes: 0 success, 1 runtime error, 2 missing input file,
// 3 vocabulary mismatch between stored models, 64 bad command line.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "loglg/eval.hpp"
#include "loglg/gold.hpp"
#include "loglg/pipeline.hpp"

#ifndef LOGLG_VERSION
#define LOGLG_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace loglg;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitMissingFile = 2;
constexpr int kExitVocabMismatch = 3;
constexpr int kExitUsage = 64;

std::ifstream open_input(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::missing_file, "cannot open '" + p.string() + "'");
  return in;
}

std::string slurp(const fs::path& p) {
  auto in = open_input(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Write to a sibling temp file and rename over the target.
void write_atomic(const fs::path& p, const std::string& bytes) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::missing_file, "cannot write '" + tmp.string() + "'");
    out << bytes;
    if (!out.flush()) throw Error(Errc::missing_file, "write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, p);
}

std::string json_text(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

nlohmann::json read_json(const fs::path& p) {
  try {
    return nlohmann::json::parse(slurp(p));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::bad_format, p.string() + ": " + e.what());
  }
}

std::vector<LogSequence> read_sequences(const fs::path& p) {
  auto in = open_input(p);
  return read_sequences_jsonl(in);
}

std::string sequences_text(std::span<const LogSequence> seqs) {
  std::ostringstream out;
  write_sequences_jsonl(out, seqs);
  return out.str();
}

std::string predictions_text(std::span<const Prediction> preds) {
  std::ostringstream out;
  write_predictions_jsonl(out, preds);
  return out.str();
}

std::string pseudo_labels_text(std::span<const PseudoLabel> labels) {
  std::ostringstream out;
  for (const auto& p : labels) {
    nlohmann::ordered_json j;
    j["id"] = p.sequence_id;
    j["label"] = to_index(p.label);
    j["confidence"] = p.confidence;
    j["fallback"] = p.fallback;
    out << j.dump() << '\n';
  }
  return out.str();
}

bool all_labelled(std::span<const LogSequence> seqs) {
  return std::all_of(seqs.begin(), seqs.end(), [](const LogSequence& s) { return GoldLabels::of(s).has_value(); });
}

std::string iteration_dir(std::size_t k) {
  std::ostringstream s;
  s << "iterations/" << std::setw(3) << std::setfill('0') << k;
  return s.str();
}

// ---------------------------------------------------------------------------

struct IngestArgs {
  std::string input, output, kind = "bgl", labels;
  std::size_t window = 20;
};

int cmd_ingest(const IngestArgs& a) {
  auto in = open_input(a.input);
  std::vector<RawLogRecord> recs;
  const bool raw = a.kind == "raw";
  const DatasetKind kind = raw ? DatasetKind::bgl : dataset_kind_from_string(a.kind);
  recs = raw ? read_raw_records(in) : load_loghub_sample(in, kind);
  if (!a.labels.empty() && !raw && (kind == DatasetKind::hadoop || kind == DatasetKind::openstack)) {
    auto lab = open_input(a.labels);
    apply_line_labels(recs, lab);
  }
  std::vector<LogSequence> seqs =
      raw ? window(recs, a.window) : make_sequences(recs, kind, a.window);
  if (!a.labels.empty() && !raw && kind == DatasetKind::hdfs) {
    auto lab = open_input(a.labels);
    apply_block_labels(seqs, read_block_labels(lab));
  }
  write_atomic(a.output, sequences_text(seqs));
  std::cerr << "ingest: " << recs.size() << " lines -> " << seqs.size() << " sequences\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string output, seeds_out;
  SyntheticSpec spec;
};

int cmd_synth(const SynthArgs& a) {
  const auto c = generate_synthetic(a.spec);
  write_atomic(a.output, sequences_text(c.sequences));
  std::string seeds;
  for (const auto& w : c.seed_keywords) seeds += (seeds.empty() ? "" : ",") + w;
  if (!a.seeds_out.empty()) write_atomic(a.seeds_out, seeds + "\n");
  std::cout << seeds << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string input, run_dir, config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode, seed_keywords;
  std::optional<unsigned> threads;
  std::optional<std::size_t> max_iterations;
  bool deterministic = false;
  double holdout = 0.2;
};

PipelineConfig resolve_config(const TrainArgs& a) {
  PipelineConfig cfg;
  if (!a.config.empty()) {
    auto in = open_input(a.config);
    cfg = read_config_ini(in);
  }
  if (a.seed) cfg.seed = *a.seed;
  if (a.mode) cfg.annotator_mode = annotator_mode_from_string(*a.mode);
  if (a.threads) cfg.threads = *a.threads;
  if (a.max_iterations) cfg.max_iterations = *a.max_iterations;
  if (a.seed_keywords) {
    cfg.seed_keywords.clear();
    std::stringstream ss(*a.seed_keywords);
    for (std::string w; std::getline(ss, w, ',');)
      if (!w.empty()) cfg.seed_keywords.push_back(w);
  }
  if (a.deterministic) cfg.threads = 1;
  validate(cfg);
  return cfg;
}

int cmd_train(const TrainArgs& a) {
  const std::string corpus_bytes = slurp(a.input);
  std::istringstream corpus_in(corpus_bytes);
  const auto corpus = read_sequences_jsonl(corpus_in);
  const PipelineConfig cfg = resolve_config(a);
  if (!(a.holdout >= 0.0 && a.holdout < 1.0)) throw Error(Errc::invalid_argument, "--holdout must lie in [0, 1)");

  std::vector<LogSequence> train, test;
  if (a.holdout > 0)
    std::tie(train, test) = chronological_split(corpus, 1.0 - a.holdout);
  else
    train = corpus;

  const fs::path dir(a.run_dir);
  fs::create_directories(dir);
  std::ostringstream ini;
  write_config_ini(ini, cfg);
  write_atomic(dir / "config.ini", ini.str());

  nlohmann::ordered_json iterations = nlohmann::ordered_json::array();
  nlohmann::ordered_json timings = nlohmann::ordered_json::array();
  std::string gamma_csv = "iteration,gamma\n";
  RunObserver obs;
  obs.on_iteration = [&](const IterationOutput& out) {
    const auto& rec = out.record;
    const fs::path sub = dir / iteration_dir(rec.iteration);
    write_atomic(sub / "keywords.json", json_text(to_json(rec.keywords)));
    write_atomic(sub / "record.json", json_text(to_json(rec, false)));
    write_atomic(sub / "pseudo_labels.jsonl", pseudo_labels_text(out.pseudo_labels));
    write_atomic(sub / "predictions.jsonl", predictions_text(out.predictions));
    nlohmann::ordered_json entry;
    entry["iteration"] = rec.iteration;
    entry["dir"] = iteration_dir(rec.iteration);
    entry["gamma"] = rec.gamma;
    iterations.push_back(entry);
    timings.push_back(to_json(rec, true)["timings"]);
    std::ostringstream row;
    row << rec.iteration << ',' << std::setprecision(17) << rec.gamma << '\n';
    gamma_csv += row.str();
    std::cerr << "iteration " << rec.iteration << ": |V|=" << rec.graph_vertices << " gamma=" << rec.gamma
              << " predicted anomalies=" << rec.predicted_counts[1] << "\n";
  };
  obs.on_failure = [&](std::size_t k, const std::string& what) {
    nlohmann::ordered_json j;
    j["status"] = "failed";
    j["iteration"] = k;
    j["error"] = what;
    write_atomic(dir / "failure.json", json_text(j));
  };

  const RunResult result = run(train, cfg, obs);

  write_atomic(dir / "gamma.csv", gamma_csv);
  write_atomic(dir / "timings.json", json_text(timings));
  write_atomic(dir / "checkpoints" / "graph.json", json_text(to_json(result.graph)));
  if (result.annotator) write_atomic(dir / "checkpoints" / "annotator.json", json_text(to_json(*result.annotator)));
  write_atomic(dir / "checkpoints" / "classifier.json", json_text(result.classifier->save()));
  write_atomic(dir / "final_keywords.json", json_text(to_json(result.final_keywords)));
  write_atomic(dir / "predictions_train.jsonl", predictions_text(result.predictions));

  const auto test_preds = result.classifier->predict(test, cfg.threads);
  if (!test.empty()) write_atomic(dir / "predictions_test.jsonl", predictions_text(test_preds));

  nlohmann::ordered_json metrics;
  if (all_labelled(train)) metrics["train"] = to_json(score(result.predictions, train));
  if (!test.empty() && all_labelled(test)) metrics["test"] = to_json(score(test_preds, test));
  if (!metrics.empty()) write_atomic(dir / "metrics.json", json_text(metrics));

  Fnv1a h;
  h.update(corpus_bytes);
  nlohmann::ordered_json m;
  m["tool"] = "loglg";
  m["version"] = LOGLG_VERSION;
  m["corpus"] = {{"path", a.input}, {"hash", h.hex()}, {"sequences", corpus.size()}};
  m["split"] = {{"holdout", a.holdout}, {"train", train.size()}, {"test", test.size()}};
  m["config"] = to_json(cfg);
  m["annotator_mode"] = to_string(cfg.annotator_mode);
  m["converged"] = result.converged;
  m["iterations"] = iterations;
  m["checkpoints"] = {{"graph", "checkpoints/graph.json"},
                      {"annotator", result.annotator ? "checkpoints/annotator.json" : ""},
                      {"classifier", "checkpoints/classifier.json"}};
  m["metrics"] = metrics.empty() ? "" : "metrics.json";
  write_atomic(dir / "manifest.json", json_text(m));

  if (metrics.contains("test"))
    std::cout << "test F1 " << metrics["test"]["f1"].get<double>() << " (precision "
              << metrics["test"]["precision"].get<double>() << ", recall " << metrics["test"]["recall"].get<double>()
              << ")\n";
  std::cout << (result.converged ? "converged" : "stopped at max_iterations") << " after " << result.records.size()
            << " iteration(s)\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct DetectArgs {
  std::string run_dir, input, output;
  unsigned threads = 1;
};

int cmd_detect(const DetectArgs& a) {
  const fs::path dir(a.run_dir);
  const auto manifest = read_json(dir / "manifest.json");
  const auto clf = load_classifier(read_json(dir / manifest.at("checkpoints").at("classifier").get<std::string>()));
  const std::string annotator_path = manifest.at("checkpoints").at("annotator").get<std::string>();
  if (!annotator_path.empty()) {
    const auto graph = event_graph_from_json(read_json(dir / manifest.at("checkpoints").at("graph").get<std::string>()));
    const auto ann = annotator_from_json(read_json(dir / annotator_path));
    if (ann.vocab_hash() != graph.vocab_hash())
      throw Error(Errc::vocab_mismatch, "annotator checkpoint was trained on a different event graph");
  }
  const auto seqs = read_sequences(a.input);
  const auto preds = clf->predict(seqs, a.threads);
  const std::string text = predictions_text(preds);
  if (a.output.empty() || a.output == "-")
    std::cout << text;
  else
    write_atomic(a.output, text);
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string predictions, gold, output;
};

int cmd_eval(const EvalArgs& a) {
  auto pin = open_input(a.predictions);
  const auto preds = read_predictions_jsonl(pin);
  const auto gold = read_sequences(a.gold);
  const auto m = to_json(score(preds, gold));
  if (!a.output.empty()) write_atomic(a.output, json_text(m));
  std::cout << json_text(m);
  return 0;
}

// ---------------------------------------------------------------------------

struct ReportArgs {
  std::string run_dir;
  std::size_t top = 12;
};

std::string top_words(const nlohmann::json& list, std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < std::min(n, list.size()); ++i) out += (i ? " " : "") + list[i].at(0).get<std::string>();
  return out;
}

int cmd_report(const ReportArgs& a) {
  const fs::path dir(a.run_dir);
  const auto manifest = read_json(dir / "manifest.json");
  std::cout << "run " << dir.string() << "  mode=" << manifest.at("annotator_mode").get<std::string>()
            << "  converged=" << (manifest.at("converged").get<bool>() ? "yes" : "no") << "\n\n";
  std::cout << "iter  gamma   |V|   |E|  anomaly keywords / normal keywords\n";
  for (const auto& it : manifest.at("iterations")) {
    const fs::path sub = dir / it.at("dir").get<std::string>();
    const auto kw = read_json(sub / "keywords.json");
    const auto rec = read_json(sub / "record.json");
    std::cout << std::setw(4) << it.at("iteration").get<std::size_t>() << "  " << std::fixed << std::setprecision(3)
              << rec.at("gamma").get<double>() << std::setw(6) << rec.at("graph_vertices").get<std::size_t>()
              << std::setw(6) << rec.at("graph_edges").get<std::size_t>() << "  [" << top_words(kw.at("anomaly"), a.top)
              << "] / [" << top_words(kw.at("normal"), a.top) << "]\n";
  }
  std::cout << "\ngamma.csv\n" << slurp(dir / "gamma.csv");
  if (fs::exists(dir / "metrics.json")) std::cout << "\nmetrics\n" << read_json(dir / "metrics.json").dump(2) << "\n";
  return 0;
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case Errc::missing_file:
      return kExitMissingFile;
    case Errc::vocab_mismatch:
      return kExitVocabMismatch;
    default:
      return kExitRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weakly supervised log anomaly detection over keyword co-occurrence graphs"};
  app.set_version_flag("--version", LOGLG_VERSION);
  app.require_subcommand(1);

  IngestArgs ia;
  auto* ingest = app.add_subcommand("ingest", "Turn a raw log file into sequence JSONL");
  ingest->add_option("input", ia.input, "Log file")->required();
  ingest->add_option("-o,--output", ia.output, "Sequence JSONL to write")->required();
  ingest->add_option("--kind", ia.kind, "hdfs, bgl, thunderbird, hadoop, openstack or raw")->capture_default_str();
  ingest->add_option("--window", ia.window, "Lines per window (non-HDFS kinds)")->capture_default_str();
  ingest->add_option("--labels", ia.labels, "HDFS block label csv, or line labels for Hadoop/OpenStack");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate a labelled synthetic corpus");
  synth->add_option("-o,--output", sa.output, "Sequence JSONL to write")->required();
  synth->add_option("--seeds-out", sa.seeds_out, "Write the suggested seed keywords here");
  synth->add_option("--n", sa.spec.n_sequences, "Number of sequences")->capture_default_str();
  synth->add_option("--anomaly-rate", sa.spec.anomaly_rate, "Fraction of anomalous sequences")->capture_default_str();
  synth->add_option("--noise", sa.spec.noise_rate, "Token swap probability")->capture_default_str();
  synth->add_option("--seed", sa.spec.seed, "Generator seed")->capture_default_str();

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Run the iterative pipeline and write a run directory");
  train->add_option("input", ta.input, "Sequence JSONL")->required();
  train->add_option("-o,--run-dir", ta.run_dir, "Output run directory")->required();
  train->add_option("--config", ta.config, "INI config; flags override it");
  train->add_option("--seed", ta.seed, "Master seed");
  train->add_option("--mode", ta.mode, "full, no_selfsup or counting");
  train->add_option("--threads", ta.threads, "Worker threads for annotation and prediction");
  train->add_option("--max-iterations", ta.max_iterations, "Iteration cap");
  train->add_option("--seed-keywords", ta.seed_keywords, "Comma-separated anomaly seed keywords");
  train->add_option("--holdout", ta.holdout, "Trailing fraction held out for testing (0 disables)")->capture_default_str();
  train->add_flag("--deterministic", ta.deterministic, "Force single-threaded numerics");

  DetectArgs da;
  auto* detect = app.add_subcommand("detect", "Label sequences with a trained run's classifier");
  detect->add_option("run_dir", da.run_dir, "Run directory written by train")->required();
  detect->add_option("input", da.input, "Sequence JSONL")->required();
  detect->add_option("-o,--output", da.output, "Predictions JSONL (stdout if omitted)");
  detect->add_option("--threads", da.threads, "Worker threads")->capture_default_str();

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Score predictions against gold-labelled sequences");
  eval->add_option("predictions", ea.predictions, "Predictions JSONL")->required();
  eval->add_option("gold", ea.gold, "Sequence JSONL with gold labels")->required();
  eval->add_option("-o,--output", ea.output, "Also write the metrics JSON here");

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "Keyword evolution, drift and metrics of a run");
  report->add_option("run_dir", ra.run_dir, "Run directory written by train")->required();
  report->add_option("--top", ra.top, "Keywords shown per class")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*ingest) return cmd_ingest(ia);
    if (*synth) return cmd_synth(sa);
    if (*train) return cmd_train(ta);
    if (*detect) return cmd_detect(da);
    if (*eval) return cmd_eval(ea);
    if (*report) return cmd_report(ra);
  } catch (const Error& e) {
    std::cerr << "loglg: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "loglg: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
