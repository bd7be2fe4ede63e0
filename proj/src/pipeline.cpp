#include "loglg/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "loglg/walk_sampler.hpp"

namespace loglg {

namespace {

enum Stage : std::uint32_t { kBootstrap = 1, kAnnotatorInit, kPretrain, kFinetune, kClassifierInit, kClassifierTrain };

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::string join_list(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

/// Scores of the seed words on the initial split, so the Anomaly list is
/// ordered like any extracted list.
std::vector<ScoredKeyword> score_seeds(const std::vector<std::string>& seeds, const TermStats& stats, int M) {
  std::vector<ScoredKeyword> out;
  for (const auto& w : seeds) out.push_back({w, stats.score(w, 1, M)});
  std::stable_sort(out.begin(), out.end(), [](const ScoredKeyword& a, const ScoredKeyword& b) {
    return a.score != b.score ? a.score > b.score : a.word < b.word;
  });
  return out;
}

}  // namespace

std::string to_string(AnnotatorMode m) {
  switch (m) {
    case AnnotatorMode::full: return "full";
    case AnnotatorMode::no_selfsup: return "no_selfsup";
    case AnnotatorMode::counting: return "counting";
  }
  return "full";
}

std::string to_string(InitMode m) { return m == InitMode::seeded ? "seeded" : "random"; }

AnnotatorMode annotator_mode_from_string(const std::string& s) {
  if (s == "full") return AnnotatorMode::full;
  if (s == "no_selfsup") return AnnotatorMode::no_selfsup;
  if (s == "counting") return AnnotatorMode::counting;
  throw Error(Errc::invalid_argument, "unknown annotator mode '" + s + "' (full, no_selfsup, counting)");
}

InitMode init_mode_from_string(const std::string& s) {
  if (s == "seeded") return InitMode::seeded;
  if (s == "random") return InitMode::random;
  throw Error(Errc::invalid_argument, "unknown init mode '" + s + "' (seeded, random)");
}

void validate(const PipelineConfig& cfg) {
  auto fail = [](const std::string& what) { throw Error(Errc::invalid_argument, "config: " + what); };
  if (cfg.Z == 0) fail("Z must be positive");
  if (cfg.M <= 0) fail("M must be positive");
  if (cfg.cooccur_window == 0) fail("cooccur_window must be positive");
  if (cfg.layers == 0 || cfg.hidden == 0) fail("annotator layers and hidden must be positive");
  if (cfg.annotator_batch == 0 || cfg.classifier_batch == 0) fail("batch sizes must be positive");
  if (!(cfg.annotator_lr > 0) || !(cfg.classifier_lr > 0)) fail("learning rates must be positive");
  if (cfg.walk_max_length < 1) fail("walk_max_length must be at least 1");
  if (cfg.embedding_dim == 0 || cfg.classifier_hidden == 0) fail("classifier dimensions must be positive");
  if (!(cfg.eps_stop >= 0)) fail("eps_stop must be non-negative");
  if (cfg.max_iterations == 0) fail("max_iterations must be positive");
  if (cfg.init_mode == InitMode::seeded && cfg.seed_keywords.empty()) fail("seeded init needs seed_keywords");
}

nlohmann::ordered_json to_json(const PipelineConfig& c) {
  nlohmann::ordered_json j;
  j["Z"] = c.Z;
  j["M"] = c.M;
  j["cooccur_window"] = c.cooccur_window;
  j["directed"] = c.directed;
  j["layers"] = c.layers;
  j["hidden"] = c.hidden;
  j["annotator_epochs"] = c.annotator_epochs;
  j["finetune_epochs"] = c.finetune_epochs;
  j["annotator_batch"] = c.annotator_batch;
  j["annotator_lr"] = c.annotator_lr;
  j["walk_max_length"] = c.walk_max_length;
  j["classifier_epochs"] = c.classifier_epochs;
  j["classifier_batch"] = c.classifier_batch;
  j["classifier_lr"] = c.classifier_lr;
  j["embedding_dim"] = c.embedding_dim;
  j["classifier_hidden"] = c.classifier_hidden;
  j["eps_stop"] = c.eps_stop;
  j["max_iterations"] = c.max_iterations;
  j["seed"] = c.seed;
  j["annotator_mode"] = to_string(c.annotator_mode);
  j["init_mode"] = to_string(c.init_mode);
  j["seed_keywords"] = c.seed_keywords;
  j["threads"] = c.threads;
  return j;
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("Z", c.Z);
  get("M", c.M);
  get("cooccur_window", c.cooccur_window);
  get("directed", c.directed);
  get("layers", c.layers);
  get("hidden", c.hidden);
  get("annotator_epochs", c.annotator_epochs);
  get("finetune_epochs", c.finetune_epochs);
  get("annotator_batch", c.annotator_batch);
  get("annotator_lr", c.annotator_lr);
  get("walk_max_length", c.walk_max_length);
  get("classifier_epochs", c.classifier_epochs);
  get("classifier_batch", c.classifier_batch);
  get("classifier_lr", c.classifier_lr);
  get("embedding_dim", c.embedding_dim);
  get("classifier_hidden", c.classifier_hidden);
  get("eps_stop", c.eps_stop);
  get("max_iterations", c.max_iterations);
  get("seed", c.seed);
  if (j.contains("annotator_mode")) c.annotator_mode = annotator_mode_from_string(j.at("annotator_mode"));
  if (j.contains("init_mode")) c.init_mode = init_mode_from_string(j.at("init_mode"));
  get("seed_keywords", c.seed_keywords);
  get("threads", c.threads);
  validate(c);
  return c;
}

PipelineConfig read_config_ini(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(Errc::bad_format, std::string("config: ") + e.what());
  }
  static const std::set<std::string> known = {
      "keywords.Z", "keywords.M", "graph.cooccur_window", "graph.directed", "annotator.layers", "annotator.hidden",
      "annotator.epochs", "annotator.finetune_epochs", "annotator.batch", "annotator.lr", "annotator.walk_max_length", "annotator.mode",
      "classifier.epochs", "classifier.batch", "classifier.lr", "classifier.embedding_dim", "classifier.hidden",
      "loop.eps_stop", "loop.max_iterations", "loop.seed", "loop.init_mode", "loop.seed_keywords", "loop.threads"};
  for (const auto& [section, body] : tree)
    for (const auto& [key, value] : body)
      if (!known.count(section + "." + key))
        throw Error(Errc::bad_format, "config: unknown key '" + section + "." + key + "'");

  PipelineConfig c;
  try {
    c.Z = tree.get("keywords.Z", c.Z);
    c.M = tree.get("keywords.M", c.M);
    c.cooccur_window = tree.get("graph.cooccur_window", c.cooccur_window);
    c.directed = tree.get("graph.directed", c.directed);
    c.layers = tree.get("annotator.layers", c.layers);
    c.hidden = tree.get("annotator.hidden", c.hidden);
    c.annotator_epochs = tree.get("annotator.epochs", c.annotator_epochs);
    c.finetune_epochs = tree.get("annotator.finetune_epochs", c.finetune_epochs);
    c.annotator_batch = tree.get("annotator.batch", c.annotator_batch);
    c.annotator_lr = tree.get("annotator.lr", c.annotator_lr);
    c.walk_max_length = tree.get("annotator.walk_max_length", c.walk_max_length);
    c.annotator_mode = annotator_mode_from_string(tree.get("annotator.mode", to_string(c.annotator_mode)));
    c.classifier_epochs = tree.get("classifier.epochs", c.classifier_epochs);
    c.classifier_batch = tree.get("classifier.batch", c.classifier_batch);
    c.classifier_lr = tree.get("classifier.lr", c.classifier_lr);
    c.embedding_dim = tree.get("classifier.embedding_dim", c.embedding_dim);
    c.classifier_hidden = tree.get("classifier.hidden", c.classifier_hidden);
    c.eps_stop = tree.get("loop.eps_stop", c.eps_stop);
    c.max_iterations = tree.get("loop.max_iterations", c.max_iterations);
    c.seed = tree.get("loop.seed", c.seed);
    c.init_mode = init_mode_from_string(tree.get("loop.init_mode", to_string(c.init_mode)));
    if (auto s = tree.get_optional<std::string>("loop.seed_keywords")) c.seed_keywords = split_list(*s);
    c.threads = tree.get("loop.threads", c.threads);
  } catch (const pt::ptree_bad_data& e) {
    throw Error(Errc::bad_format, std::string("config: ") + e.what());
  }
  validate(c);
  return c;
}

void write_config_ini(std::ostream& out, const PipelineConfig& c) {
  out.precision(17);
  out << "[keywords]\n"
      << "Z = " << c.Z << "\nM = " << c.M << "\n\n"
      << "[graph]\n"
      << "cooccur_window = " << c.cooccur_window << "\ndirected = " << (c.directed ? "true" : "false") << "\n\n"
      << "[annotator]\n"
      << "mode = " << to_string(c.annotator_mode) << "\nlayers = " << c.layers << "\nhidden = " << c.hidden
      << "\nepochs = " << c.annotator_epochs
      << "\nfinetune_epochs = " << c.finetune_epochs << "\nbatch = " << c.annotator_batch << "\nlr = " << c.annotator_lr
      << "\nwalk_max_length = " << c.walk_max_length << "\n\n"
      << "[classifier]\n"
      << "epochs = " << c.classifier_epochs << "\nbatch = " << c.classifier_batch << "\nlr = " << c.classifier_lr
      << "\nembedding_dim = " << c.embedding_dim << "\nhidden = " << c.classifier_hidden << "\n\n"
      << "[loop]\n"
      << "eps_stop = " << c.eps_stop << "\nmax_iterations = " << c.max_iterations << "\nseed = " << c.seed
      << "\ninit_mode = " << to_string(c.init_mode) << "\nseed_keywords = " << join_list(c.seed_keywords)
      << "\nthreads = " << c.threads << "\n";
}

Rng stage_rng(std::uint64_t seed, std::size_t iteration, std::uint32_t stage) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(iteration), stage};
  return Rng(seq);
}

PipelineState bootstrap(std::span<const LogSequence> corpus, const PipelineConfig& cfg) {
  validate(cfg);
  if (corpus.empty()) throw Error(Errc::empty_sequence, "bootstrap: empty corpus");
  PipelineState st;
  st.labels.assign(corpus.size(), Label::Normal);

  if (cfg.init_mode == InitMode::random) {
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng = stage_rng(cfg.seed, 0, kBootstrap);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < order.size() / 2; ++i) st.labels[order[i]] = Label::Anomaly;
    st.keywords = extract_top(ClassifiedCorpus(corpus, st.labels), cfg.Z, cfg.M).keywords;
    return st;
  }

  std::set<std::string> seeds;
  for (const auto& s : cfg.seed_keywords) {
    const auto toks = normalize_line(s);
    if (toks.size() != 1) throw Error(Errc::invalid_argument, "seed keyword '" + s + "' is not a single token");
    seeds.insert(toks.front());
  }
  std::set<std::string> hit;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    for (const auto& tok : corpus[i].tokens())
      if (seeds.count(tok)) {
        st.labels[i] = Label::Anomaly;
        hit.insert(tok);
      }
  if (hit.empty()) throw Error(Errc::degenerate, "bootstrap: no sequence contains a seed keyword");
  const ClassifiedCorpus split(corpus, st.labels);
  if (split.class_count(0) == 0) throw Error(Errc::degenerate, "bootstrap: every sequence contains a seed keyword");
  st.keywords = extract_top(split, cfg.Z, cfg.M).keywords;
  st.keywords.lists[1] = score_seeds({hit.begin(), hit.end()}, TermStats(split), cfg.M);
  st.keywords.iteration = 0;
  return st;
}

nlohmann::ordered_json to_json(const IterationRecord& r, bool with_timings) {
  nlohmann::ordered_json j;
  j["iteration"] = r.iteration;
  j["gamma"] = r.gamma;
  j["graph_vertices"] = r.graph_vertices;
  j["graph_edges"] = r.graph_edges;
  j["pseudo_counts"] = r.pseudo_counts;
  j["pseudo_fallbacks"] = r.pseudo_fallbacks;
  j["predicted_counts"] = r.predicted_counts;
  j["pretrain_loss"] = r.pretrain_loss;
  j["finetune_loss"] = r.finetune_loss;
  j["classifier_loss"] = r.classifier_loss;
  j["flags"] = r.flags;
  if (with_timings) {
    const auto& t = r.timings;
    j["timings_ms"] = {{"graph", t.graph_ms},       {"pretrain", t.pretrain_ms},     {"finetune", t.finetune_ms},
                       {"annotate", t.annotate_ms}, {"classifier", t.classifier_ms}, {"extract", t.extract_ms}};
  }
  return j;
}

IterationOutput run_iteration(const PipelineState& state, std::span<const LogSequence> corpus,
                              const PipelineConfig& cfg) {
  validate(cfg);
  if (state.labels.size() != corpus.size()) throw Error(Errc::invalid_argument, "run_iteration: state/corpus mismatch");
  IterationOutput out;
  IterationRecord& rec = out.record;
  rec.iteration = state.iteration;
  rec.keywords = state.keywords;
  const std::size_t k = state.iteration;
  const unsigned threads = std::max(1u, cfg.threads);

  auto t0 = Clock::now();
  out.graph = build_event_graph(state.keywords, corpus, cfg.cooccur_window, cfg.directed);
  rec.graph_vertices = out.graph.size();
  rec.graph_edges = out.graph.edge_count();
  rec.timings.graph_ms = ms_since(t0);

  if (cfg.annotator_mode == AnnotatorMode::counting) {
    t0 = Clock::now();
    out.pseudo_labels = vote_annotate(corpus, state.keywords);
    rec.timings.annotate_ms = ms_since(t0);
  } else {
    AnnotatorModel model(AnnotatorShape{out.graph.feature_width(), cfg.hidden, cfg.layers, Activation::relu},
                         out.graph.vocab_hash());
    Rng init_rng = stage_rng(cfg.seed, k, kAnnotatorInit);
    model.init(init_rng);
    TrainOptions opts;
    opts.batch_size = cfg.annotator_batch;
    opts.adam.lr = cfg.annotator_lr;
    if (cfg.annotator_mode == AnnotatorMode::full) {
      t0 = Clock::now();
      const WalkSampler sampler(out.graph, transition_probabilities(out.graph),
                                fit_length_model(corpus, state.keywords, cfg.walk_max_length));
      const std::size_t steps = cfg.annotator_epochs * ((corpus.size() + opts.batch_size - 1) / opts.batch_size);
      Rng rng = stage_rng(cfg.seed, k, kPretrain);
      rec.pretrain_loss = pretrain(model, sampler, steps, opts, rng);
      rec.timings.pretrain_ms = ms_since(t0);
    }
    t0 = Clock::now();
    Rng rng = stage_rng(cfg.seed, k, kFinetune);
    rec.finetune_loss = finetune(model, corpus, out.graph, state.keywords, cfg.finetune_epochs, opts, rng);
    rec.timings.finetune_ms = ms_since(t0);
    t0 = Clock::now();
    out.pseudo_labels = annotate(model, corpus, out.graph, state.keywords, threads);
    rec.timings.annotate_ms = ms_since(t0);
    out.annotator = std::move(model);
  }
  for (const auto& p : out.pseudo_labels) {
    ++rec.pseudo_counts[to_index(p.label)];
    rec.pseudo_fallbacks += p.fallback;
  }
  if (rec.pseudo_counts[0] == 0 || rec.pseudo_counts[1] == 0) rec.flags.push_back("single_class_pseudo_labels");

  t0 = Clock::now();
  Rng cls_init = stage_rng(cfg.seed, k, kClassifierInit);
  auto clf = std::make_unique<MeanEmbeddingClassifier>(corpus, cfg.embedding_dim, cfg.classifier_hidden, cls_init);
  ClassifierTrainOptions copts;
  copts.epochs = cfg.classifier_epochs;
  copts.batch_size = cfg.classifier_batch;
  copts.adam.lr = cfg.classifier_lr;
  Rng cls_rng = stage_rng(cfg.seed, k, kClassifierTrain);
  rec.classifier_loss = clf->train(corpus, out.pseudo_labels, copts, cls_rng);
  out.predictions = clf->predict(corpus, threads);
  out.classifier = std::move(clf);
  rec.timings.classifier_ms = ms_since(t0);

  t0 = Clock::now();
  out.next.labels.reserve(corpus.size());
  for (const auto& p : out.predictions) {
    out.next.labels.push_back(p.label);
    ++rec.predicted_counts[to_index(p.label)];
  }
  if (rec.predicted_counts[0] == 0 || rec.predicted_counts[1] == 0) {
    // Nothing to contrast against: keep the keywords, which also ends the loop.
    rec.flags.push_back("single_class_predictions");
    out.next.keywords = state.keywords;
  } else {
    const auto ex = extract_top(ClassifiedCorpus(corpus, out.next.labels), cfg.Z, cfg.M);
    out.next.keywords = ex.keywords;
    if (ex.short_list[0]) rec.flags.push_back("short_normal_list");
    if (ex.short_list[1]) rec.flags.push_back("short_anomaly_list");
  }
  out.next.keywords.iteration = k + 1;
  out.next.iteration = k + 1;
  rec.next_keywords = out.next.keywords;
  rec.gamma = drift(out.next.keywords, state.keywords);
  rec.timings.extract_ms = ms_since(t0);
  return out;
}

RunResult run(std::span<const LogSequence> corpus, const PipelineConfig& cfg, const RunObserver& observer) {
  RunResult result;
  std::size_t k = 0;
  try {
    PipelineState state = bootstrap(corpus, cfg);
    for (k = 0; k < cfg.max_iterations; ++k) {
      IterationOutput out = run_iteration(state, corpus, cfg);
      if (observer.on_iteration) observer.on_iteration(out);
      const double gamma = out.record.gamma;
      result.records.push_back(std::move(out.record));
      result.graph = std::move(out.graph);
      result.annotator = std::move(out.annotator);
      result.classifier = std::move(out.classifier);
      result.predictions = std::move(out.predictions);
      state = std::move(out.next);
      if (gamma < cfg.eps_stop) {
        result.converged = true;
        break;
      }
    }
    result.final_keywords = state.keywords;
  } catch (const std::exception& e) {
    if (observer.on_failure) observer.on_failure(k, e.what());
    throw;
  }
  return result;
}

}  // namespace loglg
