#include "drift/biaslab.hpp"

#include "drift/evalkit.hpp"
#include "drift/fmtio.hpp"
#include "drift/rng.hpp"

#include <cstring>
#include <ostream>
#include <stdexcept>

namespace drift {

Dataset inject_cheat(const Dataset& dataset, const CheatConfig& config) {
  if (!(config.p_cheat >= 0.0 && config.p_cheat <= 1.0)) {
    throw std::invalid_argument("p_cheat must be in [0, 1]");
  }
  Rng rng(config.seed);
  Dataset out;
  out.name = dataset.name;
  out.examples.reserve(dataset.size());
  for (const Example& ex : dataset.examples) {
    Label word;
    if (config.mode == CheatMode::Biased) {
      word = uniform_real(rng) < config.p_cheat ? ex.label
                                                : static_cast<Label>(uniform_int(rng, kNumClasses));
    } else {
      word = static_cast<Label>(uniform_int(rng, kNumClasses));
    }
    Example injected = ex;
    injected.hypothesis.insert(injected.hypothesis.begin(), {label_name(word), "and"});
    injected.cheat_token = word;
    out.examples.push_back(std::move(injected));
  }
  return out;
}

Logits oracle_biased_logits(const Example& ex) {
  if (!ex.cheat_token) {
    throw std::runtime_error("oracle biased classifier requires a cheat-injected example");
  }
  Logits z = Logits::Zero();
  if (*ex.cheat_token == ex.label) z(label_code(ex.label)) = kOracleLogit;
  return z;
}

Dataset oracle_remove_filter(const Dataset& dataset, std::uint64_t seed) {
  Rng rng(seed);
  Dataset kept;
  kept.name = dataset.name;
  for (const Example& ex : dataset.examples) {
    if (!ex.cheat_token) {
      throw std::runtime_error("oracle biased classifier requires a cheat-injected example");
    }
    if (*ex.cheat_token == ex.label) continue;
    if (static_cast<Label>(uniform_int(rng, kNumClasses)) == ex.label) continue;
    kept.examples.push_back(ex);
  }
  if (kept.empty()) throw std::runtime_error("Remove filter eliminated all examples");
  return kept;
}

Dataset stress_transform(const Dataset& dataset, StressKind kind) {
  const TokenList suffix = kind == StressKind::Overlap
                               ? TokenList{"and", "true", "is", "true"}
                               : TokenList{"and", "false", "is", "not", "true"};
  Dataset out;
  out.name = dataset.name;
  out.examples.reserve(dataset.size());
  for (const Example& ex : dataset.examples) {
    Example stressed = ex;
    stressed.hypothesis.insert(stressed.hypothesis.end(), suffix.begin(), suffix.end());
    out.examples.push_back(std::move(stressed));
  }
  return out;
}

SweepConfig default_sweep_config(std::uint64_t seed) {
  SweepConfig config;
  config.seed = seed;
  config.deb_arch = Architecture{ArchKind::Mlp, 0, 64, 0.1};
  config.biased_arch = Architecture{ArchKind::Linear, 0, 0, 0.1};
  config.biased_plan.objective = Objective::Mle;
  config.biased_plan.epochs = 30;
  config.mle_plan.objective = Objective::Mle;
  config.mle_plan.epochs = 30;
  config.drift_plan.objective = Objective::Drift;
  config.drift_plan.epochs = 80;
  return config;
}

namespace {

std::uint64_t cell_seed(const SweepConfig& config, double rate, const std::string& tag) {
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(rate));
  std::memcpy(&bits, &rate, sizeof(bits));
  return derive_seed(derive_seed(config.seed, bits), tag);
}

}  // namespace

std::vector<SweepRow> cheat_sweep(const Dataset& train, const Dataset& dev, const Dataset& test,
                                  const Vocabulary& vocab, const SweepConfig& config) {
  std::vector<SweepRow> rows;
  for (double rate : config.rates) {
    if (!(rate >= 0.0 && rate <= 1.0)) throw std::invalid_argument("cheat rate must be in [0, 1]");

    const Dataset train_r =
        inject_cheat(train, {rate, CheatMode::Biased, cell_seed(config, rate, "inject-train")});
    const Dataset dev_r =
        inject_cheat(dev, {rate, CheatMode::Biased, cell_seed(config, rate, "inject-dev")});
    const Dataset test_r =
        inject_cheat(test, {rate, CheatMode::Random, cell_seed(config, rate, "inject-test")});

    // Per-rate hypothesis-only biased model, shared by drift-hypo and the
    // biased-accuracy column.
    Featurizer hypo_feat = make_featurizer(Extractor::Hypo, vocab, config.embed_dim,
                                           cell_seed(config, rate, "hypo-emb"));
    Architecture hypo_arch = config.biased_arch;
    hypo_arch.input_dim = hypo_feat.dim();
    TrainPlan hypo_plan = config.biased_plan;
    hypo_plan.seed = cell_seed(config, rate, "hypo-train");
    auto [hypo_clf, hypo_hist] =
        train_mle(init_params(hypo_arch, cell_seed(config, rate, "hypo-init")), train_r, hypo_feat,
                  hypo_plan, &dev_r);
    const double biased_test_acc = evaluate(hypo_clf, test_r, hypo_feat).accuracy;

    auto deb_model = [&](const std::string& method) {
      Featurizer feat = make_featurizer(Extractor::Full, vocab, config.embed_dim,
                                        cell_seed(config, rate, method + "-emb"));
      Architecture arch = config.deb_arch;
      arch.input_dim = feat.dim();
      Classifier clf = init_params(arch, cell_seed(config, rate, method + "-init"));
      return std::make_pair(std::move(feat), std::move(clf));
    };
    auto push_row = [&](const std::string& method, const Classifier& clf,
                        const Featurizer& feat) {
      SweepRow row;
      row.rate = rate;
      row.method = method;
      row.test_accuracy = evaluate(clf, test_r, feat).accuracy;
      row.dev_accuracy = evaluate(clf, dev_r, feat).accuracy;
      row.biased_model_test_accuracy = biased_test_acc;
      rows.push_back(std::move(row));
    };

    {
      auto [feat, clf] = deb_model("mle");
      TrainPlan plan = config.mle_plan;
      plan.seed = cell_seed(config, rate, "mle-train");
      auto [trained, hist] = train_mle(std::move(clf), train_r, feat, plan, &dev_r);
      push_row("mle", trained, feat);
    }
    {
      auto [feat, clf] = deb_model("drift-hypo");
      TrainPlan plan = config.drift_plan;
      plan.seed = cell_seed(config, rate, "drift-hypo-train");
      auto [trained, hist] =
          train_drift(hypo_clf, std::move(clf), train_r, hypo_feat, feat, plan, &dev_r);
      push_row("drift-hypo", trained, feat);
    }
    {
      auto [feat, clf] = deb_model("drift-oracle");
      std::vector<Logits> oracle;
      oracle.reserve(train_r.size());
      for (const Example& ex : train_r.examples) oracle.push_back(oracle_biased_logits(ex));
      TrainPlan plan = config.drift_plan;
      plan.seed = cell_seed(config, rate, "drift-oracle-train");
      auto [trained, hist] = train_drift(std::move(clf), train_r, feat, oracle, plan, &dev_r);
      push_row("drift-oracle", trained, feat);
    }
    {
      auto [feat, clf] = deb_model("remove-oracle");
      const Dataset kept =
          oracle_remove_filter(train_r, cell_seed(config, rate, "remove-oracle-filter"));
      TrainPlan plan = config.mle_plan;
      plan.seed = cell_seed(config, rate, "remove-oracle-train");
      auto [trained, hist] = train_mle(std::move(clf), kept, feat, plan, &dev_r);
      push_row("remove-oracle", trained, feat);
    }
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << "rate,method,test_accuracy,dev_accuracy,biased_model_test_accuracy\n";
  for (const SweepRow& row : rows) {
    out << format_double(row.rate) << ',' << row.method << ',' << format_double(row.test_accuracy)
        << ',' << format_double(row.dev_accuracy) << ','
        << format_double(row.biased_model_test_accuracy) << '\n';
  }
}

}  // namespace drift
