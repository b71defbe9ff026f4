#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace drift {

/// Configuration and flag errors; the driver maps these to exit code 2
/// (runtime errors exit with 1).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flat-key run configuration. Every key can come from a config file
/// ("key = value" lines) or a command-line flag; flags win.
struct RunConfig {
  // data source
  std::string format = "synthetic";  // synthetic | tsv | jsonl
  std::string data_path;             // input file for tsv/jsonl
  int synthetic_n = 3000;
  int synthetic_vocab = 40;
  double frac_train = 0.8;
  double frac_dev = 0.1;
  double frac_test = 0.1;
  int min_count = 1;

  // embeddings
  int embed_dim = 50;
  std::string word_vectors;

  // model under training
  std::string featurizer = "full";
  std::string arch = "mlp";
  int hidden = 64;
  double dropout = 0.1;

  // biased model reference (drift / remove / sweep)
  std::string biased;  // hypo | cbow | hand | oracle
  std::string biased_checkpoint;

  // train plan
  std::string objective = "mle";
  int epochs = 0;  // 0 selects the per-objective default (30 mle/remove, 80 drift)
  int drift_epochs = 0;
  int batch_size = 32;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 0.01;
  double warmup = 0.1;
  bool dropout_on = true;

  // synthetic bias / stress
  double cheat_rate = -1.0;  // negative disables injection
  std::string cheat_mode = "biased";
  std::vector<double> rates{0.0, 0.3, 0.6, 0.8, 0.9};
  std::string stress;  // overlap | negation | empty
  int dump_examples = 0;

  // audit
  double audit_threshold = 5.0;

  // io
  std::string data_dir;  // prepared dataset directory
  std::string checkpoint;
  std::string eval_featurizer;  // optional consistency check for eval
  std::string split_name = "test";
  std::string out_dir = "out";
  std::uint64_t seed = 1;
};

/// Parses "key = value" lines ('#' comments); throws UsageError on unknown
/// keys or bad values.
void apply_config_file(RunConfig& config, const std::string& path);
void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value);

/// Resolved configuration in config-file form, for the output manifest.
std::string resolved_config_text(const RunConfig& config);

int run_prepare(const RunConfig& config);
int run_train(const RunConfig& config);
int run_eval(const RunConfig& config);
int run_sweep(const RunConfig& config);
int run_audit(const RunConfig& config);

}  // namespace drift
