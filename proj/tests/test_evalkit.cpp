#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "drift/biaslab.hpp"
#include "drift/evalkit.hpp"
#include "drift/rng.hpp"

#include "test_oracles.hpp"

#include <sstream>

using namespace drift;

namespace {

// Vocabulary, table and linear weights arranged so the classifier reads the
// label straight out of the hypothesis word.
struct EchoSetup {
  Dataset data;
  Vocabulary vocab;
  Featurizer feat;
  Classifier clf;

  explicit EchoSetup(int n) {
    for (int i = 0; i < n; ++i) {
      Example ex;
      const Label y = static_cast<Label>(i % 3);
      ex.premise = {"p" + std::to_string(i % 4)};
      ex.hypothesis = {label_name(y)};
      ex.label = y;
      data.examples.push_back(ex);
    }
    data.name = "echo";
    vocab = build_vocab(data, 1);

    feat.kind = Extractor::Hypo;
    feat.vocab = &vocab;
    feat.table.weights = MatX::Zero(vocab.size(), 3);
    for (int k = 0; k < 3; ++k) {
      feat.table.weights(vocab.id(label_name(static_cast<Label>(k))), k) = 1.0;
    }

    Architecture arch{ArchKind::Linear, 3, 0, 0.0};
    clf = Classifier{arch, VecX::Zero(param_count(arch))};
    weight1(clf) = MatX::Identity(3, 3) * 10.0;
  }
};

}  // namespace

TEST_CASE("evaluate an oracle classifier") {
  EchoSetup setup(30);
  const EvalReport report = evaluate(setup.clf, setup.data, setup.feat, "echo-model");
  CHECK(report.accuracy == 1.0);
  for (double f : report.f1) CHECK(f == 1.0);
  CHECK(report.confusion.total() == 30);
  CHECK(report.confusion.counts(0, 0) == 10);
  CHECK(report.model_id == "echo-model");
  CHECK(report.dataset_id == "echo");
}

TEST_CASE("constant classifier on a balanced set") {
  EchoSetup setup(30);
  Classifier constant = setup.clf;
  weight1(constant).setZero();  // ties -> always Entailment
  const EvalReport report = evaluate(constant, setup.data, setup.feat);
  CHECK(report.accuracy == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(report.f1[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(report.f1[1] == 0.0);
  CHECK(report.f1[2] == 0.0);
}

TEST_CASE("evaluate rejects empty datasets and mismatched features") {
  EchoSetup setup(9);
  Dataset empty;
  empty.name = "empty";
  CHECK_THROWS(evaluate(setup.clf, empty, setup.feat));

  Featurizer wrong = setup.feat;
  wrong.kind = Extractor::Cbow;  // 12-dim features against a 3-dim model
  CHECK_THROWS(evaluate(setup.clf, setup.data, wrong));
}

TEST_CASE("per_class_f1 basics") {
  Confusion diagonal;
  diagonal.counts << 5, 0, 0, 0, 7, 0, 0, 0, 2;
  for (double f : per_class_f1(diagonal)) CHECK(f == 1.0);

  Confusion absent;  // class 2 never appears as gold or prediction
  absent.counts << 3, 1, 0, 2, 4, 0, 0, 0, 0;
  CHECK(per_class_f1(absent)[2] == 0.0);

  Confusion example;
  example.counts << 5, 3, 2, 1, 8, 1, 0, 2, 8;
  const double p = 8.0 / 13.0, r = 8.0 / 10.0;
  CHECK(per_class_f1(example)[1] == doctest::Approx(2 * p * r / (p + r)).epsilon(1e-12));
  CHECK(per_class_f1(example)[1] == doctest::Approx(0.6957).epsilon(1e-4));
}

TEST_CASE("metrics agree with a brute-force recount on random cases") {
  Rng rng(23);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + uniform_int(rng, 60);
    std::vector<std::pair<int, int>> pairs;
    Confusion confusion;
    for (int i = 0; i < n; ++i) {
      const int gold = uniform_int(rng, 3);
      const int pred = uniform_int(rng, 3);
      pairs.emplace_back(gold, pred);
      confusion.counts(gold, pred) += 1;
    }
    const auto expected = oracles::metrics_from_pairs(pairs);
    const auto f1 = per_class_f1(confusion);
    const double accuracy =
        static_cast<double>(confusion.correct()) / static_cast<double>(confusion.total());
    CHECK(accuracy == expected.accuracy);
    for (int k = 0; k < 3; ++k) {
      CHECK(f1[static_cast<std::size_t>(k)] == expected.f1[static_cast<std::size_t>(k)]);
    }
  }
}

TEST_CASE("report fields are invariant to dataset order") {
  EchoSetup setup(24);
  Classifier noisy = setup.clf;
  weight1(noisy) << 2, -1, 0, 0, 1, 1, -1, 0, 2;  // imperfect predictions

  Dataset shuffled = setup.data;
  Rng rng(5);
  shuffle_in_place(shuffled.examples, rng);
  REQUIRE_FALSE(shuffled.examples == setup.data.examples);

  const EvalReport a = evaluate(noisy, setup.data, setup.feat);
  const EvalReport b = evaluate(noisy, shuffled, setup.feat);
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.confusion.counts == b.confusion.counts);
  CHECK(a.f1 == b.f1);
}

TEST_CASE("accuracy_gap is a difference in points") {
  EvalReport a, b;
  a.accuracy = 0.85;
  b.accuracy = 0.80;
  CHECK(accuracy_gap(a, b) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(accuracy_gap(a, a) == 0.0);
  b.accuracy = 0.82;
  a.accuracy = 0.80;
  CHECK(accuracy_gap(a, b) == doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("report CSV and table render") {
  EchoSetup setup(12);
  const EvalReport report = evaluate(setup.clf, setup.data, setup.feat, "echo");
  std::ostringstream csv;
  write_report_csv(report, csv);
  CHECK(csv.str().starts_with(
      "model,dataset,n,accuracy,f1_entailment,f1_contradiction,f1_neutral"));
  CHECK(csv.str().find("echo,echo,12,1") != std::string::npos);

  const std::string table = format_report_table(report);
  CHECK(table.find("accuracy: 100.0%") != std::string::npos);
  CHECK(table.find("entailment") != std::string::npos);
}

TEST_CASE("bias audit on a cheat-heavy distribution flags the hypo model") {
  const Dataset base = generate_synthetic_task(360, 20, 33);
  const SplitResult splits = split(base, 0.7, 0.15, 0.15, 34);
  const Vocabulary vocab = build_vocab(splits.train, 1);

  const Dataset train = inject_cheat(splits.train, {0.9, CheatMode::Biased, 35});
  const Dataset dev = inject_cheat(splits.dev, {0.9, CheatMode::Biased, 36});
  const Dataset test = inject_cheat(splits.test, {0.9, CheatMode::Random, 37});

  AuditConfig config;
  config.embed_dim = 8;
  config.hidden_dim = 8;
  config.plan.epochs = 25;
  config.plan.batch_size = 16;
  config.plan.base_lr = 5e-3;
  config.seed = 38;

  const auto rows = bias_audit(train, dev, &test, vocab, config);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].model == "hypo");
  // The dev distribution is balanced, so the baseline sits near a third.
  CHECK(rows[0].majority_baseline < 0.40);
  // Hypothesis-only sees the cheat word and crushes the baseline on dev...
  CHECK(rows[0].dev_accuracy > rows[0].majority_baseline + 0.30);
  CHECK(rows[0].signals_bias);
  // ...but collapses on the random-cheat test distribution.
  CHECK(rows[0].test_accuracy < 0.45);

  const std::string table = format_audit_table(rows);
  CHECK(table.find("hypo") != std::string::npos);
  CHECK(table.find("yes") != std::string::npos);

  std::ostringstream csv;
  write_audit_csv(rows, csv);
  CHECK(csv.str().starts_with("model,dev_accuracy,test_accuracy,majority_baseline,signals_bias"));
}

TEST_CASE("bias audit majority baseline on a balanced set") {
  const Dataset base = generate_synthetic_task(120, 20, 44);
  const SplitResult splits = split(base, 0.75, 0.125, 0.125, 45);
  const Vocabulary vocab = build_vocab(splits.train, 1);

  AuditConfig config;
  config.embed_dim = 4;
  config.hidden_dim = 4;
  config.plan.epochs = 2;
  config.seed = 46;

  const auto rows = bias_audit(splits.train, splits.dev, nullptr, vocab, config);
  REQUIRE(rows.size() == 3);
  for (const auto& row : rows) {
    CHECK(row.majority_baseline == doctest::Approx(1.0 / 3).epsilon(0.15));
    CHECK(std::isnan(row.test_accuracy));
  }
}
