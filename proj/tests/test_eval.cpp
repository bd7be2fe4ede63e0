#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "loglg/annotator.hpp"
#include "loglg/eval.hpp"
#include "loglg/gold.hpp"

using namespace loglg;

namespace {

std::ifstream open_data(const std::string& name) {
  std::ifstream in(std::string(LOGLG_TEST_DATA_DIR) + "/" + name);
  REQUIRE(in.good());
  return in;
}

std::vector<Prediction> preds_from(const std::vector<int>& labels) {
  std::vector<Prediction> out;
  for (std::size_t i = 0; i < labels.size(); ++i) out.push_back({"s" + std::to_string(i), label_from_index(labels[i]), 1.0});
  return out;
}

std::unordered_map<std::string, Label> gold_from(const std::vector<int>& labels) {
  std::unordered_map<std::string, Label> out;
  for (std::size_t i = 0; i < labels.size(); ++i) out["s" + std::to_string(i)] = label_from_index(labels[i]);
  return out;
}

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("confusion counts and derived scores") {
    const auto m = metrics_from_counts(3, 1, 2, 4);
    CHECK(m.precision == doctest::Approx(0.75));
    CHECK(m.recall == doctest::Approx(0.6));
    CHECK(m.f1 == doctest::Approx(2.0 / 3.0));
    CHECK(m.flags.empty());

    const auto none = metrics_from_counts(0, 0, 0, 10);
    CHECK(none.f1 == 0.0);
    CHECK(none.flags == std::vector<std::string>{"precision_undefined", "recall_undefined", "f1_undefined"});
    const auto missed = metrics_from_counts(0, 0, 4, 6);
    CHECK(missed.flags == std::vector<std::string>{"precision_undefined", "f1_undefined"});
    CHECK(missed.recall == 0.0);
  }

  TEST_CASE("scoring matches labels by id") {
    //                         TP TP TP FP FN FN TN
    const std::vector<int> pred{1, 1, 1, 1, 0, 0, 0};
    const std::vector<int> gold{1, 1, 1, 0, 1, 1, 0};
    const auto m = score(preds_from(pred), gold_from(gold));
    CHECK(m == metrics_from_counts(3, 1, 2, 1));
    const auto j = to_json(m);
    CHECK(j["tp"] == 3);
    CHECK(j.contains("f1"));
    CHECK_FALSE(j.contains("timings"));

    auto extra = gold_from(gold);
    extra["ghost"] = Label::Normal;
    CHECK_THROWS_AS(score(preds_from(pred), extra), Error);
    auto dup = preds_from(pred);
    dup.push_back(dup.front());
    CHECK_THROWS_AS(score(dup, gold_from(gold)), Error);
    auto missing = gold_from(gold);
    missing.erase("s0");
    CHECK_THROWS_AS(score(preds_from(pred), missing), Error);
  }

  TEST_CASE("synthetic corpora are deterministic with exact anomaly counts") {
    SyntheticSpec spec;
    spec.n_sequences = 1000;
    const auto a = generate_synthetic(spec);
    const auto b = generate_synthetic(spec);
    CHECK(a.sequences == b.sequences);
    REQUIRE(a.sequences.size() == 1000);
    std::size_t anomalies = 0;
    for (const auto& s : a.sequences) {
      REQUIRE(GoldLabels::of(s).has_value());
      anomalies += *GoldLabels::of(s) == Label::Anomaly;
    }
    CHECK(anomalies == 100);
    CHECK(a.seed_keywords.size() == 2);
    for (const auto& w : a.seed_keywords)
      CHECK(std::find(a.anomaly_vocab.begin(), a.anomaly_vocab.end(), w) != a.anomaly_vocab.end());

    std::set<std::string> n(a.normal_vocab.begin(), a.normal_vocab.end()), an(a.anomaly_vocab.begin(), a.anomaly_vocab.end()),
        sh(a.shared_vocab.begin(), a.shared_vocab.end());
    CHECK(n.size() == spec.normal_vocab_size);
    CHECK(an.size() == spec.anomaly_vocab_size);
    for (const auto& w : an) CHECK((n.count(w) == 0 && sh.count(w) == 0));
    for (const auto& w : n) CHECK(default_stopwords().count(w) == 0);

    spec.seed += 1;
    CHECK(generate_synthetic(spec).sequences != a.sequences);
    spec.anomaly_rate = 0;
    CHECK_THROWS_AS(generate_synthetic(spec), Error);
  }

  TEST_CASE("noise-free corpus is solved by its own anomaly vocabulary") {
    SyntheticSpec spec;
    spec.n_sequences = 500;
    spec.noise_rate = 0;
    const auto c = generate_synthetic(spec);
    KeywordSet oracle_keywords;
    for (const auto& w : c.anomaly_vocab) oracle_keywords.lists[1].push_back({w, 1.0});
    std::vector<Prediction> preds;
    for (const auto& p : vote_annotate(c.sequences, oracle_keywords)) preds.push_back({p.sequence_id, p.label, p.confidence});
    const auto m = score(preds, c.sequences);
    CHECK(m.f1 == 1.0);
    CHECK(m.tp == 50);
  }

  TEST_CASE("BGL sample: alert tags and windows") {
    auto in = open_data("bgl_100.log");
    const auto recs = load_loghub_sample(in, DatasetKind::bgl);
    REQUIRE(recs.size() == 100);
    CHECK(recs[0].timestamp == "2005-06-03-15.42.00.168711");
    CHECK(recs[0].text.rfind("RAS KERNEL INFO", 0) == 0);
    const auto seqs = make_sequences(recs, DatasetKind::bgl);
    REQUIRE(seqs.size() == 5);
    std::vector<Label> gold;
    for (const auto& s : seqs) gold.push_back(*GoldLabels::of(s));
    // Alert lines 7, 8, 45, 46, 93.
    CHECK(gold == std::vector<Label>{Label::Anomaly, Label::Normal, Label::Anomaly, Label::Normal, Label::Anomaly});
  }

  TEST_CASE("HDFS sample: block grouping and label file") {
    auto in = open_data("hdfs_sample.log");
    const auto recs = load_loghub_sample(in, DatasetKind::hdfs);
    REQUIRE(recs.size() == 8);
    CHECK_FALSE(recs[0].gold_label.has_value());
    auto seqs = make_sequences(recs, DatasetKind::hdfs);
    REQUIRE(seqs.size() == 3);
    CHECK(seqs[1].id() == "blk_-6952295868487656571");
    auto lab = open_data("hdfs_labels.csv");
    apply_block_labels(seqs, read_block_labels(lab));
    CHECK(GoldLabels::of(seqs[0]) == Label::Normal);
    CHECK(GoldLabels::of(seqs[1]) == Label::Anomaly);
    CHECK(GoldLabels::of(seqs[2]) == Label::Normal);

    std::istringstream bad("BlockId,Label\nblk_1,Maybe\n");
    CHECK_THROWS_WITH_AS(read_block_labels(bad), doctest::Contains("line 2"), Error);
  }

  TEST_CASE("line-labelled and unlabelled formats") {
    auto in = open_data("hadoop_sample.log");
    auto recs = load_loghub_sample(in, DatasetKind::hadoop);
    REQUIRE(recs.size() == 4);
    auto lab = open_data("hadoop_line_labels.csv");
    apply_line_labels(recs, lab);
    CHECK(recs[1].gold_label == Label::Normal);
    CHECK(recs[2].gold_label == Label::Anomaly);

    auto os = open_data("openstack_sample.log");
    CHECK(load_loghub_sample(os, DatasetKind::openstack).size() == 2);
    auto tb = open_data("thunderbird_sample.log");
    const auto t = load_loghub_sample(tb, DatasetKind::thunderbird);
    REQUIRE(t.size() == 2);
    CHECK(t[0].gold_label == Label::Normal);
    CHECK(t[1].gold_label == Label::Anomaly);
    CHECK(t[1].timestamp == "2005.11.09 12:01:02");
  }

  TEST_CASE("format errors name the line") {
    std::istringstream in("081109 203615 148 INFO ok line blk_1\nnot a log line\n");
    try {
      load_loghub_sample(in, DatasetKind::hdfs);
      FAIL("expected bad_format");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::bad_format);
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK(dataset_kind_from_string("bgl") == DatasetKind::bgl);
    CHECK_THROWS_AS(dataset_kind_from_string("syslog"), Error);
  }

  TEST_CASE("chronological split") {
    std::vector<LogSequence> seqs;
    for (int i = 0; i < 10; ++i) seqs.emplace_back(std::to_string(i), std::vector<std::string>{"x"});
    const auto [train, test] = chronological_split(seqs, 0.8);
    REQUIRE(train.size() == 8);
    REQUIRE(test.size() == 2);
    CHECK(train.back().id() == "7");
    CHECK(test.front().id() == "8");
    CHECK(chronological_split(std::span(seqs).first(7), 0.8).first.size() == 5);
    CHECK_THROWS_AS(chronological_split(seqs, 1.0), Error);
  }
}
