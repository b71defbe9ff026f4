#include "drift/evalkit.hpp"

#include "drift/fmtio.hpp"
#include "drift/rng.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace drift {

std::array<double, 3> per_class_f1(const Confusion& confusion) {
  std::array<double, 3> f1{};
  for (int k = 0; k < kNumClasses; ++k) {
    const double diag = static_cast<double>(confusion.counts(k, k));
    const double col = static_cast<double>(confusion.counts.col(k).sum());
    const double row = static_cast<double>(confusion.counts.row(k).sum());
    const double precision = col > 0 ? diag / col : 0.0;
    const double recall = row > 0 ? diag / row : 0.0;
    f1[static_cast<std::size_t>(k)] =
        precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  }
  return f1;
}

EvalReport evaluate(const Classifier& clf, const Dataset& dataset, const Featurizer& featurizer,
                    std::string model_id, std::string dataset_id) {
  if (dataset.empty()) {
    throw std::runtime_error("cannot evaluate on empty dataset \"" + dataset.name + "\"");
  }
  EvalReport report;
  report.model_id = std::move(model_id);
  report.dataset_id = dataset_id.empty() ? dataset.name : std::move(dataset_id);
  for (const Example& ex : dataset.examples) {
    const Label pred = predict(clf, featurizer.features(ex).values);
    report.confusion.counts(label_code(ex.label), label_code(pred)) += 1;
  }
  report.accuracy =
      static_cast<double>(report.confusion.correct()) / static_cast<double>(report.confusion.total());
  report.f1 = per_class_f1(report.confusion);
  for (int k = 0; k < kNumClasses; ++k) {
    report.class_present[static_cast<std::size_t>(k)] = report.confusion.counts.row(k).sum() > 0;
  }
  return report;
}

double accuracy_gap(const EvalReport& baseline, const EvalReport& report) {
  return (baseline.accuracy - report.accuracy) * 100.0;
}

void write_report_csv(const EvalReport& report, std::ostream& out) {
  out << "model,dataset,n,accuracy,f1_entailment,f1_contradiction,f1_neutral";
  for (int g = 0; g < kNumClasses; ++g) {
    for (int p = 0; p < kNumClasses; ++p) {
      out << ",c_" << label_name(static_cast<Label>(g))[0] << label_name(static_cast<Label>(p))[0];
    }
  }
  out << '\n';
  out << report.model_id << ',' << report.dataset_id << ',' << report.confusion.total() << ','
      << format_double(report.accuracy);
  for (double f : report.f1) out << ',' << format_double(f);
  for (int g = 0; g < kNumClasses; ++g) {
    for (int p = 0; p < kNumClasses; ++p) out << ',' << report.confusion.counts(g, p);
  }
  out << '\n';
}

std::string format_report_table(const EvalReport& report) {
  std::ostringstream out;
  out << "model:    " << report.model_id << '\n';
  out << "dataset:  " << report.dataset_id << "  (" << report.confusion.total() << " examples)\n";
  out << "accuracy: " << format_fixed(report.accuracy * 100.0, 1) << "%\n";
  out << '\n';
  out << "class           F1     gold  predicted\n";
  for (int k = 0; k < kNumClasses; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    const std::string f1 =
        report.class_present[idx] ? format_fixed(report.f1[idx], 4) : std::string("-");
    char line[96];
    std::snprintf(line, sizeof(line), "%-13s %6s %8ld %10ld\n",
                  label_name(static_cast<Label>(k)).c_str(), f1.c_str(),
                  report.confusion.counts.row(k).sum(), report.confusion.counts.col(k).sum());
    out << line;
  }
  out << '\n';
  out << "confusion (rows gold, cols predicted):\n";
  for (int g = 0; g < kNumClasses; ++g) {
    char line[96];
    std::snprintf(line, sizeof(line), "%-13s %6ld %6ld %6ld\n",
                  label_name(static_cast<Label>(g)).c_str(), report.confusion.counts(g, 0),
                  report.confusion.counts(g, 1), report.confusion.counts(g, 2));
    out << line;
  }
  return out.str();
}

std::vector<AuditRow> bias_audit(const Dataset& train, const Dataset& dev, const Dataset* test,
                                 const Vocabulary& vocab, const AuditConfig& config) {
  if (train.empty() || dev.empty()) throw std::runtime_error("bias audit requires train and dev");

  std::array<long, 3> counts{};
  for (const Example& ex : train.examples) ++counts[static_cast<std::size_t>(label_code(ex.label))];
  const Label majority = static_cast<Label>(
      std::max_element(counts.begin(), counts.end()) - counts.begin());
  long dev_majority_hits = 0;
  for (const Example& ex : dev.examples) dev_majority_hits += ex.label == majority ? 1 : 0;
  const double baseline =
      static_cast<double>(dev_majority_hits) / static_cast<double>(dev.size());

  std::vector<AuditRow> rows;
  for (Extractor kind : {Extractor::Hypo, Extractor::Cbow, Extractor::Hand}) {
    const std::string& id = extractor_id(kind);
    Featurizer feat = make_featurizer(kind, vocab, config.embed_dim,
                                      derive_seed(config.seed, id + "-emb"));
    Architecture arch;
    if (kind == Extractor::Hypo) {
      arch = Architecture{ArchKind::Linear, feat.dim(), 0, 0.1};
    } else {
      arch = Architecture{ArchKind::Mlp, feat.dim(), config.hidden_dim, 0.1};
    }
    Classifier clf = init_params(arch, derive_seed(config.seed, id + "-init"));
    TrainPlan plan = config.plan;
    plan.objective = Objective::Mle;
    plan.seed = derive_seed(config.seed, id + "-train");
    auto [trained, history] = train_mle(std::move(clf), train, feat, plan, &dev);

    AuditRow row;
    row.model = id;
    row.dev_accuracy = evaluate(trained, dev, feat, id, dev.name).accuracy;
    if (test != nullptr && !test->empty()) {
      row.test_accuracy = evaluate(trained, *test, feat, id, test->name).accuracy;
    }
    row.majority_baseline = baseline;
    row.signals_bias = (row.dev_accuracy - baseline) * 100.0 > config.signal_threshold;
    rows.push_back(row);
  }
  return rows;
}

std::string format_audit_table(const std::vector<AuditRow>& rows) {
  std::ostringstream out;
  out << "model   dev_acc  test_acc  majority  signals_bias\n";
  for (const AuditRow& row : rows) {
    const std::string test = std::isnan(row.test_accuracy)
                                 ? std::string("-")
                                 : format_fixed(row.test_accuracy * 100.0, 1);
    char line[96];
    std::snprintf(line, sizeof(line), "%-7s %7s %9s %9s  %s\n", row.model.c_str(),
                  format_fixed(row.dev_accuracy * 100.0, 1).c_str(), test.c_str(),
                  format_fixed(row.majority_baseline * 100.0, 1).c_str(),
                  row.signals_bias ? "yes" : "no");
    out << line;
  }
  return out.str();
}

void write_audit_csv(const std::vector<AuditRow>& rows, std::ostream& out) {
  out << "model,dev_accuracy,test_accuracy,majority_baseline,signals_bias\n";
  for (const AuditRow& row : rows) {
    out << row.model << ',' << format_double(row.dev_accuracy) << ','
        << format_double(row.test_accuracy) << ',' << format_double(row.majority_baseline) << ','
        << (row.signals_bias ? 1 : 0) << '\n';
  }
}

}  // namespace drift
