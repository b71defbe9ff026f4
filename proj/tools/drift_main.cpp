#include "drift/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using drift::RunConfig;

/// Flag values captured separately so they can override the config file.
struct Overrides {
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> data_dir;
  std::optional<std::string> format;
  std::optional<std::string> input;
  std::optional<int> n;
  std::optional<int> vocab_size;
  std::optional<std::vector<double>> fractions;
  std::optional<int> min_count;
  std::optional<int> embed_dim;
  std::optional<std::string> word_vectors;
  std::optional<std::string> featurizer;
  std::optional<std::string> arch;
  std::optional<int> hidden;
  std::optional<double> dropout;
  std::optional<std::string> objective;
  std::optional<std::string> biased;
  std::optional<std::string> biased_checkpoint;
  std::optional<int> epochs;
  std::optional<int> drift_epochs;
  std::optional<int> batch_size;
  std::optional<double> lr;
  std::optional<double> weight_decay;
  std::optional<double> warmup;
  std::optional<bool> dropout_on;
  std::optional<double> cheat_rate;
  std::optional<std::string> cheat_mode;
  std::optional<std::vector<double>> rates;
  std::optional<std::string> stress;
  std::optional<int> dump_examples;
  std::optional<double> audit_threshold;
  std::optional<std::string> checkpoint;
  std::optional<std::string> split;
};

RunConfig resolve(const Overrides& o, bool eval_command) {
  RunConfig c;
  if (o.config_path) drift::apply_config_file(c, *o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.out_dir) c.out_dir = *o.out_dir;
  if (o.data_dir) c.data_dir = *o.data_dir;
  if (o.format) c.format = *o.format;
  if (o.input) c.data_path = *o.input;
  if (o.n) c.synthetic_n = *o.n;
  if (o.vocab_size) c.synthetic_vocab = *o.vocab_size;
  if (o.fractions) {
    if (o.fractions->size() != 3) throw drift::UsageError("--fractions needs exactly 3 values");
    c.frac_train = (*o.fractions)[0];
    c.frac_dev = (*o.fractions)[1];
    c.frac_test = (*o.fractions)[2];
  }
  if (o.min_count) c.min_count = *o.min_count;
  if (o.embed_dim) c.embed_dim = *o.embed_dim;
  if (o.word_vectors) c.word_vectors = *o.word_vectors;
  if (o.featurizer) {
    if (eval_command) {
      c.eval_featurizer = *o.featurizer;
    } else {
      c.featurizer = *o.featurizer;
    }
  }
  if (o.arch) c.arch = *o.arch;
  if (o.hidden) c.hidden = *o.hidden;
  if (o.dropout) c.dropout = *o.dropout;
  if (o.objective) c.objective = *o.objective;
  if (o.biased) c.biased = *o.biased;
  if (o.biased_checkpoint) c.biased_checkpoint = *o.biased_checkpoint;
  if (o.epochs) c.epochs = *o.epochs;
  if (o.drift_epochs) c.drift_epochs = *o.drift_epochs;
  if (o.batch_size) c.batch_size = *o.batch_size;
  if (o.lr) c.lr = *o.lr;
  if (o.weight_decay) c.weight_decay = *o.weight_decay;
  if (o.warmup) c.warmup = *o.warmup;
  if (o.dropout_on) c.dropout_on = *o.dropout_on;
  if (o.cheat_rate) c.cheat_rate = *o.cheat_rate;
  if (o.cheat_mode) c.cheat_mode = *o.cheat_mode;
  if (o.rates) c.rates = *o.rates;
  if (o.stress) c.stress = *o.stress;
  if (o.dump_examples) c.dump_examples = *o.dump_examples;
  if (o.audit_threshold) c.audit_threshold = *o.audit_threshold;
  if (o.checkpoint) c.checkpoint = *o.checkpoint;
  if (o.split) c.split_name = *o.split;
  return c;
}

void add_common_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "Config file (key = value lines; flags override)");
  cmd->add_option("--seed", o.seed, "Master random seed");
  cmd->add_option("--out-dir", o.out_dir, "Output directory (manifest plus artifacts)");
}

void add_data_flag(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--data", o.data_dir, "Prepared dataset directory (from `drift prepare`)");
}

void add_cheat_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--cheat-rate", o.cheat_rate, "Inject the cheating feature at this rate");
  cmd->add_option("--cheat-mode", o.cheat_mode, "Cheat word choice: biased|random");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Residual-fitting debiasing for small softmax pair classifiers"};
  app.require_subcommand(1);
  Overrides o;

  CLI::App* prepare = app.add_subcommand("prepare", "Generate or ingest a dataset and write canonical splits");
  add_common_flags(prepare, o);
  prepare->add_option("--format", o.format, "Data source: synthetic|tsv|jsonl");
  prepare->add_option("--input", o.input, "Input file for tsv/jsonl formats");
  prepare->add_option("--n", o.n, "Synthetic dataset size");
  prepare->add_option("--vocab-size", o.vocab_size, "Synthetic content vocabulary size (even, >= 20)");
  prepare->add_option("--fractions", o.fractions, "Train,dev,test fractions")->delimiter(',');
  prepare->add_option("--min-count", o.min_count, "Vocabulary min token count");

  CLI::App* train = app.add_subcommand("train", "Train a classifier (mle, drift or remove)");
  add_common_flags(train, o);
  add_data_flag(train, o);
  add_cheat_flags(train, o);
  train->add_option("--objective", o.objective, "Training objective: mle|drift|remove");
  train->add_option("--featurizer", o.featurizer, "Feature extractor: hypo|cbow|hand|full");
  train->add_option("--arch", o.arch, "Classifier architecture: linear|mlp");
  train->add_option("--hidden", o.hidden, "Hidden layer width (mlp)");
  train->add_option("--dropout", o.dropout, "Dropout rate in [0,1)");
  train->add_option("--no-dropout", [&o](const std::vector<std::string>&) { o.dropout_on = false; return true; },
                    "Disable dropout during training")->expected(0);
  train->add_option("--embed-dim", o.embed_dim, "Embedding dimension");
  train->add_option("--word-vectors", o.word_vectors, "Optional word-vector text file");
  train->add_option("--epochs", o.epochs, "Training epochs (default 30, drift 80)");
  train->add_option("--batch-size", o.batch_size, "Minibatch size");
  train->add_option("--lr", o.lr, "Base learning rate");
  train->add_option("--weight-decay", o.weight_decay, "Decoupled weight decay");
  train->add_option("--warmup", o.warmup, "Warmup fraction of total updates");
  train->add_option("--biased", o.biased, "Biased model: hypo|cbow|hand|oracle");
  train->add_option("--biased-checkpoint", o.biased_checkpoint, "Checkpoint of the trained biased model");

  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
  add_common_flags(eval, o);
  add_data_flag(eval, o);
  add_cheat_flags(eval, o);
  eval->add_option("--checkpoint", o.checkpoint, "Model checkpoint to evaluate");
  eval->add_option("--split", o.split, "Dataset split: train|dev|test");
  eval->add_option("--featurizer", o.featurizer, "Expected extractor (consistency check)");
  eval->add_option("--stress", o.stress, "Stress transform: overlap|negation");
  eval->add_option("--dump-examples", o.dump_examples, "Print the first N evaluated examples");

  CLI::App* sweep = app.add_subcommand("sweep", "Cheating-rate sweep over mle/drift/remove methods");
  add_common_flags(sweep, o);
  add_data_flag(sweep, o);
  sweep->add_option("--rates", o.rates, "Cheating rates to sweep")->delimiter(',');
  sweep->add_option("--embed-dim", o.embed_dim, "Embedding dimension");
  sweep->add_option("--hidden", o.hidden, "Debiased model hidden width");
  sweep->add_option("--arch", o.arch, "Debiased model architecture: linear|mlp");
  sweep->add_option("--epochs", o.epochs, "Epochs for mle/remove and the biased model");
  sweep->add_option("--drift-epochs", o.drift_epochs, "Epochs for drift methods");
  sweep->add_option("--batch-size", o.batch_size, "Minibatch size");
  sweep->add_option("--lr", o.lr, "Base learning rate");

  CLI::App* audit = app.add_subcommand("audit", "Train the biased models and report bias signals");
  add_common_flags(audit, o);
  add_data_flag(audit, o);
  add_cheat_flags(audit, o);
  audit->add_option("--embed-dim", o.embed_dim, "Embedding dimension");
  audit->add_option("--hidden", o.hidden, "Hidden width for cbow/hand models");
  audit->add_option("--epochs", o.epochs, "Training epochs per biased model");
  audit->add_option("--threshold", o.audit_threshold, "Bias-signal threshold in points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const RunConfig config = resolve(o, eval->parsed());
    if (prepare->parsed()) return drift::run_prepare(config);
    if (train->parsed()) return drift::run_train(config);
    if (eval->parsed()) return drift::run_eval(config);
    if (sweep->parsed()) return drift::run_sweep(config);
    if (audit->parsed()) return drift::run_audit(config);
    return 2;
  } catch (const drift::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
