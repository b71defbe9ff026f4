#include "drift/cli.hpp"

#include "drift/biaslab.hpp"
#include "drift/checkpoint.hpp"
#include "drift/corpus.hpp"
#include "drift/evalkit.hpp"
#include "drift/featurize.hpp"
#include "drift/fmtio.hpp"
#include "drift/netcore.hpp"
#include "drift/objectives.hpp"
#include "drift/rng.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace drift {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    int v = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw UsageError("config key \"" + key + "\": expected an integer, got \"" + value + "\"");
  }
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw UsageError("config key \"" + key + "\": expected a number, got \"" + value + "\"");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  throw UsageError("config key \"" + key + "\": expected a boolean, got \"" + value + "\"");
}

std::vector<double> parse_real_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::istringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_real(key, item));
  }
  if (out.empty()) throw UsageError("config key \"" + key + "\": empty list");
  return out;
}

/// Collects produced files and writes the manifest on finalize.
class OutputDir {
 public:
  explicit OutputDir(const std::string& dir) : root_(dir) {
    if (dir.empty()) throw UsageError("--out-dir must not be empty");
    fs::create_directories(root_);
  }

  fs::path write(const std::string& filename, std::string_view content) {
    const fs::path path = root_ / filename;
    write_file_atomic(path, content);
    files_.push_back(filename);
    return path;
  }

  void finalize(const RunConfig& config, const std::string& command) {
    std::ostringstream out;
    out << "command: " << command << '\n';
    out << "files:\n";
    for (const std::string& f : files_) out << "  " << f << '\n';
    out << "config:\n";
    std::istringstream cfg(resolved_config_text(config));
    std::string line;
    while (std::getline(cfg, line)) out << "  " << line << '\n';
    write_file_atomic(root_ / "MANIFEST.txt", out.str());
  }

  const fs::path& root() const { return root_; }

 private:
  fs::path root_;
  std::vector<std::string> files_;
};

Dataset load_source(const RunConfig& config) {
  if (config.format == "synthetic") {
    return generate_synthetic_task(config.synthetic_n, config.synthetic_vocab, config.seed);
  }
  if (config.format != "tsv" && config.format != "jsonl") {
    throw UsageError("unknown data format \"" + config.format + "\" (synthetic|tsv|jsonl)");
  }
  if (config.data_path.empty()) {
    throw UsageError("--input is required for format " + config.format);
  }
  std::ifstream in(config.data_path);
  if (!in) throw std::runtime_error("cannot open input file: " + config.data_path);
  const std::string name = fs::path(config.data_path).stem().string();
  return config.format == "tsv" ? parse_snli_tsv(in, name) : parse_jsonl(in, name);
}

struct PreparedData {
  Dataset train, dev, test;
  Vocabulary vocab;
};

Dataset load_split_file(const fs::path& dir, const std::string& split) {
  const fs::path path = dir / (split + ".jsonl");
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path.string());
  return parse_jsonl(in, split);
}

PreparedData load_prepared(const RunConfig& config, bool need_test) {
  if (config.data_dir.empty()) {
    throw UsageError("--data is required (a directory produced by `drift prepare`)");
  }
  const fs::path dir(config.data_dir);
  PreparedData data;
  data.train = load_split_file(dir, "train");
  data.dev = load_split_file(dir, "dev");
  if (need_test || fs::exists(dir / "test.jsonl")) data.test = load_split_file(dir, "test");
  std::ifstream vin(dir / "vocab.txt");
  if (!vin) throw std::runtime_error("cannot open vocabulary file: " + (dir / "vocab.txt").string());
  data.vocab = load_vocab(vin);
  return data;
}

CheatMode cheat_mode_from(const std::string& name) {
  if (name == "biased") return CheatMode::Biased;
  if (name == "random") return CheatMode::Random;
  throw UsageError("unknown cheat mode \"" + name + "\" (biased|random)");
}

void maybe_inject(const RunConfig& config, Dataset& train, Dataset& dev) {
  if (config.cheat_rate < 0) return;
  if (config.cheat_rate > 1.0) throw UsageError("cheat rate must be in [0, 1]");
  const CheatMode mode = cheat_mode_from(config.cheat_mode);
  train = inject_cheat(train, {config.cheat_rate, mode, derive_seed(config.seed, "cheat-train")});
  dev = inject_cheat(dev, {config.cheat_rate, mode, derive_seed(config.seed, "cheat-dev")});
}

Architecture model_arch(const RunConfig& config, int input_dim) {
  if (config.arch == "linear") return Architecture{ArchKind::Linear, input_dim, 0, config.dropout};
  if (config.arch == "mlp") {
    return Architecture{ArchKind::Mlp, input_dim, config.hidden, config.dropout};
  }
  throw UsageError("unknown architecture \"" + config.arch + "\" (linear|mlp)");
}

TrainPlan make_plan(const RunConfig& config, Objective objective) {
  TrainPlan plan;
  plan.objective = objective;
  plan.epochs = config.epochs > 0 ? config.epochs : (objective == Objective::Drift ? 80 : 30);
  plan.batch_size = config.batch_size;
  plan.base_lr = config.lr;
  plan.beta1 = config.beta1;
  plan.beta2 = config.beta2;
  plan.weight_decay = config.weight_decay;
  plan.warmup_fraction = config.warmup;
  plan.dropout_on = config.dropout_on;
  plan.seed = derive_seed(config.seed, "train");
  return plan;
}

std::string hash_hex(std::uint64_t hash) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return std::string(buf);
}

struct BiasedSource {
  bool oracle = false;
  Classifier clf;
  Featurizer featurizer;
};

BiasedSource resolve_biased(const RunConfig& config, const Vocabulary& vocab,
                            const Dataset& train) {
  BiasedSource source;
  if (config.biased == "oracle") {
    source.oracle = true;
    for (const Example& ex : train.examples) {
      if (!ex.cheat_token) {
        throw std::runtime_error(
            "oracle biased model requires cheat-injected data (set --cheat-rate)");
      }
    }
    return source;
  }
  if (config.biased_checkpoint.empty()) {
    throw UsageError("--objective " + config.objective +
                     " requires --biased-checkpoint or --biased oracle");
  }
  Checkpoint ckpt = load_checkpoint(config.biased_checkpoint);
  const std::uint64_t data_hash = vocab_hash(vocab);
  if (ckpt.vocab_hash != data_hash) {
    throw std::runtime_error("vocabulary hash mismatch: checkpoint " + hash_hex(ckpt.vocab_hash) +
                             " vs data " + hash_hex(data_hash));
  }
  if (!config.biased.empty() && config.biased != ckpt.extractor) {
    throw std::runtime_error("biased featurizer mismatch: --biased " + config.biased +
                             " vs checkpoint " + ckpt.extractor);
  }
  source.clf = std::move(ckpt.clf);
  source.featurizer.kind = extractor_from_id(ckpt.extractor);
  source.featurizer.vocab = &vocab;
  source.featurizer.table = std::move(ckpt.table);
  return source;
}

}  // namespace

void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value) {
  if (key == "data.format") config.format = value;
  else if (key == "data.path") config.data_path = value;
  else if (key == "data.n") config.synthetic_n = parse_int(key, value);
  else if (key == "data.vocab_size") config.synthetic_vocab = parse_int(key, value);
  else if (key == "data.fractions") {
    auto fracs = parse_real_list(key, value);
    if (fracs.size() != 3) throw UsageError("data.fractions needs exactly 3 values");
    config.frac_train = fracs[0];
    config.frac_dev = fracs[1];
    config.frac_test = fracs[2];
  } else if (key == "vocab.min_count") config.min_count = parse_int(key, value);
  else if (key == "embed.dim") config.embed_dim = parse_int(key, value);
  else if (key == "embed.vectors") config.word_vectors = value;
  else if (key == "model.featurizer") config.featurizer = value;
  else if (key == "model.arch") config.arch = value;
  else if (key == "model.hidden") config.hidden = parse_int(key, value);
  else if (key == "model.dropout") config.dropout = parse_real(key, value);
  else if (key == "biased.featurizer") config.biased = value;
  else if (key == "biased.checkpoint") config.biased_checkpoint = value;
  else if (key == "train.objective") config.objective = value;
  else if (key == "train.epochs") config.epochs = parse_int(key, value);
  else if (key == "train.drift_epochs") config.drift_epochs = parse_int(key, value);
  else if (key == "train.batch_size") config.batch_size = parse_int(key, value);
  else if (key == "train.lr") config.lr = parse_real(key, value);
  else if (key == "train.beta1") config.beta1 = parse_real(key, value);
  else if (key == "train.beta2") config.beta2 = parse_real(key, value);
  else if (key == "train.weight_decay") config.weight_decay = parse_real(key, value);
  else if (key == "train.warmup") config.warmup = parse_real(key, value);
  else if (key == "train.dropout") config.dropout_on = parse_bool(key, value);
  else if (key == "cheat.rate") config.cheat_rate = parse_real(key, value);
  else if (key == "cheat.mode") config.cheat_mode = value;
  else if (key == "sweep.rates") config.rates = parse_real_list(key, value);
  else if (key == "eval.stress") config.stress = value;
  else if (key == "eval.split") config.split_name = value;
  else if (key == "eval.dump_examples") config.dump_examples = parse_int(key, value);
  else if (key == "eval.featurizer") config.eval_featurizer = value;
  else if (key == "audit.threshold") config.audit_threshold = parse_real(key, value);
  else if (key == "checkpoint") config.checkpoint = value;
  else if (key == "data_dir") config.data_dir = value;
  else if (key == "out_dir") config.out_dir = value;
  else if (key == "seed") config.seed = static_cast<std::uint64_t>(std::stoull(value));
  else throw UsageError("unknown config key \"" + key + "\"");
}

void apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    apply_config_entry(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

std::string resolved_config_text(const RunConfig& c) {
  std::ostringstream out;
  out << "data.format = " << c.format << '\n';
  out << "data.path = " << c.data_path << '\n';
  out << "data.n = " << c.synthetic_n << '\n';
  out << "data.vocab_size = " << c.synthetic_vocab << '\n';
  out << "data.fractions = " << format_double(c.frac_train) << ',' << format_double(c.frac_dev)
      << ',' << format_double(c.frac_test) << '\n';
  out << "vocab.min_count = " << c.min_count << '\n';
  out << "embed.dim = " << c.embed_dim << '\n';
  out << "embed.vectors = " << c.word_vectors << '\n';
  out << "model.featurizer = " << c.featurizer << '\n';
  out << "model.arch = " << c.arch << '\n';
  out << "model.hidden = " << c.hidden << '\n';
  out << "model.dropout = " << format_double(c.dropout) << '\n';
  out << "biased.featurizer = " << c.biased << '\n';
  out << "biased.checkpoint = " << c.biased_checkpoint << '\n';
  out << "train.objective = " << c.objective << '\n';
  out << "train.epochs = " << c.epochs << '\n';
  out << "train.drift_epochs = " << c.drift_epochs << '\n';
  out << "train.batch_size = " << c.batch_size << '\n';
  out << "train.lr = " << format_double(c.lr) << '\n';
  out << "train.beta1 = " << format_double(c.beta1) << '\n';
  out << "train.beta2 = " << format_double(c.beta2) << '\n';
  out << "train.weight_decay = " << format_double(c.weight_decay) << '\n';
  out << "train.warmup = " << format_double(c.warmup) << '\n';
  out << "train.dropout = " << (c.dropout_on ? "true" : "false") << '\n';
  out << "cheat.rate = " << format_double(c.cheat_rate) << '\n';
  out << "cheat.mode = " << c.cheat_mode << '\n';
  out << "sweep.rates = ";
  for (std::size_t i = 0; i < c.rates.size(); ++i) {
    if (i) out << ',';
    out << format_double(c.rates[i]);
  }
  out << '\n';
  out << "eval.stress = " << c.stress << '\n';
  out << "eval.split = " << c.split_name << '\n';
  out << "eval.dump_examples = " << c.dump_examples << '\n';
  out << "eval.featurizer = " << c.eval_featurizer << '\n';
  out << "audit.threshold = " << format_double(c.audit_threshold) << '\n';
  out << "checkpoint = " << c.checkpoint << '\n';
  out << "data_dir = " << c.data_dir << '\n';
  out << "out_dir = " << c.out_dir << '\n';
  out << "seed = " << c.seed << '\n';
  return out.str();
}

int run_prepare(const RunConfig& config) {
  const Dataset source = load_source(config);
  const SplitResult splits = split(source, config.frac_train, config.frac_dev, config.frac_test,
                                   derive_seed(config.seed, "split"));
  const Vocabulary vocab = build_vocab(splits.train, config.min_count);

  OutputDir out(config.out_dir);
  auto dump = [&](const Dataset& ds, const std::string& filename) {
    std::ostringstream ss;
    write_jsonl(ds, ss);
    out.write(filename, ss.str());
  };
  dump(splits.train, "train.jsonl");
  dump(splits.dev, "dev.jsonl");
  dump(splits.test, "test.jsonl");
  std::ostringstream vss;
  save_vocab(vocab, vss);
  out.write("vocab.txt", vss.str());
  out.finalize(config, "prepare");

  std::cout << "train: " << splits.train.size() << '\n';
  std::cout << "dev: " << splits.dev.size() << '\n';
  std::cout << "test: " << splits.test.size() << '\n';
  std::cout << "vocab: " << vocab.size() << " tokens\n";
  std::cout << "wrote " << (out.root() / "MANIFEST.txt").string() << '\n';
  return 0;
}

int run_train(const RunConfig& config) {
  PreparedData data = load_prepared(config, false);
  maybe_inject(config, data.train, data.dev);

  const Objective objective = objective_from_name(config.objective);
  Featurizer feat = make_featurizer(extractor_from_id(config.featurizer), data.vocab,
                                    config.embed_dim, derive_seed(config.seed, "emb"));
  if (!config.word_vectors.empty()) {
    std::ifstream vin(config.word_vectors);
    if (!vin) throw std::runtime_error("cannot open word vector file: " + config.word_vectors);
    load_word_vectors(vin, data.vocab, feat.table);
  }
  Classifier clf = init_params(model_arch(config, feat.dim()), derive_seed(config.seed, "init"));
  TrainPlan plan = make_plan(config, objective);

  std::pair<Classifier, TrainHistory> result;
  if (objective == Objective::Mle) {
    result = train_mle(std::move(clf), data.train, feat, plan, &data.dev);
  } else {
    BiasedSource biased = resolve_biased(config, data.vocab, data.train);
    if (objective == Objective::Drift) {
      std::vector<Logits> cache;
      if (biased.oracle) {
        cache.reserve(data.train.size());
        for (const Example& ex : data.train.examples) cache.push_back(oracle_biased_logits(ex));
      } else {
        cache = biased_logits_for(biased.clf, biased.featurizer, data.train);
      }
      result = train_drift(std::move(clf), data.train, feat, cache, plan, &data.dev);
    } else {
      const Dataset kept =
          biased.oracle
              ? oracle_remove_filter(data.train, derive_seed(config.seed, "remove-filter"))
              : filter_remove(biased.clf, data.train, biased.featurizer);
      std::cout << "remove filter kept " << kept.size() << " of " << data.train.size()
                << " examples\n";
      TrainPlan mle_plan = plan;
      mle_plan.objective = Objective::Mle;
      result = train_mle(std::move(clf), kept, feat, mle_plan, &data.dev);
    }
  }

  OutputDir out(config.out_dir);
  Checkpoint ckpt{std::move(result.first), feat.table, extractor_id(feat.kind),
                  vocab_hash(data.vocab)};
  const fs::path model_path = out.write("model.ckpt", serialize_checkpoint(ckpt));
  std::ostringstream hist;
  write_history_csv(result.second, hist);
  out.write("history.csv", hist.str());
  out.finalize(config, "train");

  std::cout << "objective: " << objective_name(objective) << '\n';
  std::cout << "final train loss: " << format_double(result.second.train_loss.back()) << '\n';
  std::cout << "final dev accuracy: "
            << format_fixed(result.second.dev_accuracy.back() * 100.0, 1) << '\n';
  std::cout << "wrote " << model_path.string() << '\n';
  return 0;
}

int run_eval(const RunConfig& config) {
  if (config.checkpoint.empty()) throw UsageError("--checkpoint is required");
  PreparedData data = load_prepared(config, false);
  Checkpoint ckpt = load_checkpoint(config.checkpoint);

  const std::uint64_t data_hash = vocab_hash(data.vocab);
  if (ckpt.vocab_hash != data_hash) {
    throw std::runtime_error("vocabulary hash mismatch: checkpoint " + hash_hex(ckpt.vocab_hash) +
                             " vs data " + hash_hex(data_hash));
  }
  if (!config.eval_featurizer.empty() && config.eval_featurizer != ckpt.extractor) {
    throw std::runtime_error("extractor mismatch: checkpoint " + ckpt.extractor +
                             " vs --featurizer " + config.eval_featurizer);
  }

  Dataset dataset = [&] {
    if (config.split_name == "train") return std::move(data.train);
    if (config.split_name == "dev") return std::move(data.dev);
    if (config.split_name == "test") return std::move(data.test);
    throw UsageError("unknown split \"" + config.split_name + "\" (train|dev|test)");
  }();
  std::string dataset_id = config.split_name;

  if (config.cheat_rate >= 0) {
    if (config.cheat_rate > 1.0) throw UsageError("cheat rate must be in [0, 1]");
    dataset = inject_cheat(dataset, {config.cheat_rate, cheat_mode_from(config.cheat_mode),
                                     derive_seed(config.seed, "cheat-eval")});
    dataset_id += "+cheat";
  }
  if (!config.stress.empty()) {
    if (config.stress == "overlap") {
      dataset = stress_transform(dataset, StressKind::Overlap);
    } else if (config.stress == "negation") {
      dataset = stress_transform(dataset, StressKind::Negation);
    } else {
      throw UsageError("unknown stress transform \"" + config.stress + "\" (overlap|negation)");
    }
    dataset_id += "+" + config.stress;
  }

  if (config.dump_examples > 0) {
    const int n = std::min<int>(config.dump_examples, static_cast<int>(dataset.size()));
    for (int i = 0; i < n; ++i) {
      const Example& ex = dataset.examples[static_cast<std::size_t>(i)];
      std::cout << "premise:";
      for (const std::string& t : ex.premise) std::cout << ' ' << t;
      std::cout << "\nhypothesis:";
      for (const std::string& t : ex.hypothesis) std::cout << ' ' << t;
      std::cout << "\nlabel: " << label_name(ex.label) << "\n\n";
    }
  }

  Featurizer feat;
  feat.kind = extractor_from_id(ckpt.extractor);
  feat.vocab = &data.vocab;
  feat.table = std::move(ckpt.table);

  const EvalReport report = evaluate(ckpt.clf, dataset, feat, ckpt.extractor, dataset_id);
  std::cout << format_report_table(report);

  OutputDir out(config.out_dir);
  std::ostringstream csv;
  write_report_csv(report, csv);
  out.write("report.csv", csv.str());
  out.finalize(config, "eval");
  return 0;
}

int run_sweep(const RunConfig& config) {
  for (double rate : config.rates) {
    if (!(rate >= 0.0 && rate <= 1.0)) throw UsageError("cheat rate must be in [0, 1]");
  }
  PreparedData data = load_prepared(config, true);

  SweepConfig sweep = default_sweep_config(config.seed);
  sweep.rates = config.rates;
  sweep.embed_dim = config.embed_dim;
  sweep.deb_arch = Architecture{ArchKind::Mlp, 0, config.hidden, config.dropout};
  if (config.arch == "linear") sweep.deb_arch = Architecture{ArchKind::Linear, 0, 0, config.dropout};
  for (TrainPlan* plan : {&sweep.biased_plan, &sweep.mle_plan, &sweep.drift_plan}) {
    plan->batch_size = config.batch_size;
    plan->base_lr = config.lr;
    plan->beta1 = config.beta1;
    plan->beta2 = config.beta2;
    plan->weight_decay = config.weight_decay;
    plan->warmup_fraction = config.warmup;
    plan->dropout_on = config.dropout_on;
  }
  if (config.epochs > 0) {
    sweep.biased_plan.epochs = config.epochs;
    sweep.mle_plan.epochs = config.epochs;
  }
  if (config.drift_epochs > 0) sweep.drift_plan.epochs = config.drift_epochs;

  const std::vector<SweepRow> rows = cheat_sweep(data.train, data.dev, data.test, data.vocab, sweep);

  OutputDir out(config.out_dir);
  std::ostringstream csv;
  write_sweep_csv(rows, csv);
  out.write("sweep.csv", csv.str());
  out.finalize(config, "sweep");

  const double max_rate = *std::max_element(config.rates.begin(), config.rates.end());
  const double min_rate = *std::min_element(config.rates.begin(), config.rates.end());
  auto accuracy_at = [&](const std::string& method, double rate) {
    for (const SweepRow& row : rows) {
      if (row.method == method && row.rate == rate) return row.test_accuracy;
    }
    throw std::runtime_error("missing sweep row for " + method);
  };
  const std::pair<std::string, std::string> methods[] = {{"mle", "MLE"},
                                                         {"drift-hypo", "DRiFt-hypo"},
                                                         {"drift-oracle", "DRiFt-oracle"},
                                                         {"remove-oracle", "Remove-oracle"}};
  for (const auto& [method, display] : methods) {
    const double drop = (accuracy_at(method, min_rate) - accuracy_at(method, max_rate)) * 100.0;
    std::cout << display << " drop: " << format_fixed(drop, 1) << '\n';
  }
  std::cout << "wrote " << (out.root() / "sweep.csv").string() << '\n';
  return 0;
}

int run_audit(const RunConfig& config) {
  PreparedData data = load_prepared(config, false);
  Dataset test = std::move(data.test);
  maybe_inject(config, data.train, data.dev);
  if (config.cheat_rate >= 0 && !test.empty()) {
    test = inject_cheat(test, {config.cheat_rate, CheatMode::Random,
                               derive_seed(config.seed, "cheat-test")});
  }

  AuditConfig audit;
  audit.embed_dim = config.embed_dim;
  audit.hidden_dim = config.hidden;
  audit.plan = make_plan(config, Objective::Mle);
  audit.signal_threshold = config.audit_threshold;
  audit.seed = derive_seed(config.seed, "audit");

  const std::vector<AuditRow> rows =
      bias_audit(data.train, data.dev, test.empty() ? nullptr : &test, data.vocab, audit);
  std::cout << format_audit_table(rows);

  OutputDir out(config.out_dir);
  std::ostringstream csv;
  write_audit_csv(rows, csv);
  out.write("audit.csv", csv.str());
  out.finalize(config, "audit");
  return 0;
}

}  // namespace drift
