#pragma once

#include "drift/corpus.hpp"
#include "drift/featurize.hpp"
#include "drift/netcore.hpp"
#include "drift/objectives.hpp"

#include <array>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace drift {

/// Rows are gold labels, columns are predictions.
struct Confusion {
  Eigen::Matrix<long, 3, 3> counts = Eigen::Matrix<long, 3, 3>::Zero();

  long total() const { return counts.sum(); }
  long correct() const { return counts.diagonal().sum(); }
};

/// Per class: precision = diag/col, recall = diag/row, F1 = 2PR/(P+R); any
/// zero denominator yields 0.
std::array<double, 3> per_class_f1(const Confusion& confusion);

struct EvalReport {
  double accuracy = 0.0;
  std::array<double, 3> f1{};           // Entailment, Contradiction, Neutral
  std::array<bool, 3> class_present{};  // gold count > 0 (F1 is 0 by convention otherwise)
  Confusion confusion;
  std::string model_id;
  std::string dataset_id;
};

EvalReport evaluate(const Classifier& clf, const Dataset& dataset, const Featurizer& featurizer,
                    std::string model_id = "", std::string dataset_id = "");

/// baseline.accuracy - report.accuracy, in percentage points.
double accuracy_gap(const EvalReport& baseline, const EvalReport& report);

void write_report_csv(const EvalReport& report, std::ostream& out);
std::string format_report_table(const EvalReport& report);

struct AuditConfig {
  int embed_dim = 50;
  int hidden_dim = 64;
  TrainPlan plan;                  // applied to each biased model (objective mle)
  double signal_threshold = 5.0;   // points over the majority baseline
  std::uint64_t seed = 1;
};

struct AuditRow {
  std::string model;
  double dev_accuracy = 0.0;
  double test_accuracy = std::numeric_limits<double>::quiet_NaN();  // NaN when no test set
  double majority_baseline = 0.0;
  bool signals_bias = false;
};

/// Trains each biased model (hypo, cbow, hand) by MLE and reports dev
/// accuracy against the majority-class baseline; a model signals bias when
/// it beats the baseline by more than the threshold.
std::vector<AuditRow> bias_audit(const Dataset& train, const Dataset& dev, const Dataset* test,
                                 const Vocabulary& vocab, const AuditConfig& config);

std::string format_audit_table(const std::vector<AuditRow>& rows);
void write_audit_csv(const std::vector<AuditRow>& rows, std::ostream& out);

}  // namespace drift
