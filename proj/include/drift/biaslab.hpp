#pragma once

#include "drift/corpus.hpp"
#include "drift/netcore.hpp"
#include "drift/objectives.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace drift {

enum class CheatMode { Biased, Random };

struct CheatConfig {
  double p_cheat = 0.0;
  CheatMode mode = CheatMode::Biased;
  std::uint64_t seed = 0;
};

/// Prepends "{label word} and" to every hypothesis and records the chosen
/// word in cheat_token. Biased mode picks the gold label word with
/// probability p_cheat (uniform otherwise); Random mode is uniform and never
/// reads p_cheat. Returns a new dataset.
Dataset inject_cheat(const Dataset& dataset, const CheatConfig& config);

inline constexpr double kOracleLogit = 30.0;

/// The perfect cheat classifier: +30 on the gold class when the injected
/// word matches the gold label, uniform (0,0,0) otherwise. Throws when the
/// example was never cheat-injected.
Logits oracle_biased_logits(const Example& ex);

/// Removes the examples the oracle gets right: every cheated-true example,
/// plus each remaining example with probability 1/3 (the oracle guesses
/// uniformly on those). Throws when nothing is left.
Dataset oracle_remove_filter(const Dataset& dataset, std::uint64_t seed);

enum class StressKind { Overlap, Negation };

/// Appends the distractor phrase "and true is true" (Overlap) or
/// "and false is not true" (Negation) to every hypothesis; labels unchanged.
Dataset stress_transform(const Dataset& dataset, StressKind kind);

struct SweepRow {
  double rate = 0.0;
  std::string method;
  double test_accuracy = 0.0;
  double dev_accuracy = 0.0;
  double biased_model_test_accuracy = 0.0;
};

struct SweepConfig {
  std::vector<double> rates{0.0, 0.3, 0.6, 0.8, 0.9};
  int embed_dim = 50;
  Architecture deb_arch;     // input_dim filled from the featurizer
  Architecture biased_arch;  // hypothesis-only model
  TrainPlan biased_plan;     // objective mle
  TrainPlan mle_plan;        // objective mle
  TrainPlan drift_plan;      // objective drift
  std::uint64_t seed = 1;
};

SweepConfig default_sweep_config(std::uint64_t seed);

/// One cell per (rate, method): train/dev get Biased(rate) injection, test
/// gets Random injection; methods are mle, drift-hypo, drift-oracle and
/// remove-oracle, all sharing the per-rate hypothesis-only biased model
/// column. Cell RNG streams derive from (seed, rate, method).
std::vector<SweepRow> cheat_sweep(const Dataset& train, const Dataset& dev, const Dataset& test,
                                  const Vocabulary& vocab, const SweepConfig& config);

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out);

}  // namespace drift
