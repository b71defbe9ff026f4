#include "drift/objectives.hpp"

#include "drift/fmtio.hpp"
#include "drift/rng.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace drift {

const std::string& objective_name(Objective obj) {
  static const std::string names[3] = {"mle", "drift", "remove"};
  return names[static_cast<int>(obj)];
}

Objective objective_from_name(const std::string& name) {
  if (name == "mle") return Objective::Mle;
  if (name == "drift") return Objective::Drift;
  if (name == "remove") return Objective::Remove;
  throw std::invalid_argument("unknown objective \"" + name + "\"");
}

void TrainPlan::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(base_lr > 0.0)) throw std::invalid_argument("base_lr must be positive");
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) {
    throw std::invalid_argument("warmup_fraction must be in [0, 1)");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("adam betas must be in [0, 1)");
  }
  if (weight_decay < 0.0) throw std::invalid_argument("weight_decay must be nonnegative");
}

double lr_schedule(long t, long total_steps, const TrainPlan& plan) {
  if (total_steps <= 0) throw std::invalid_argument("total_steps must be positive");
  if (t < 0 || t >= total_steps) throw std::out_of_range("step index outside [0, total_steps)");
  const long warmup = std::max<long>(
      1, static_cast<long>(std::ceil(plan.warmup_fraction * static_cast<double>(total_steps))));
  if (t + 1 <= warmup) {
    return plan.base_lr * static_cast<double>(t + 1) / static_cast<double>(warmup);
  }
  const double decayed = plan.base_lr * static_cast<double>(total_steps - (t + 1)) /
                         static_cast<double>(total_steps - warmup);
  return std::max(0.0, decayed);
}

void adam_step(AdamState& state, VecX& params, const VecX& grads, double lr,
               const TrainPlan& plan, const VecX& decay_mask) {
  if (params.size() != grads.size() || params.size() != state.m.size() ||
      params.size() != decay_mask.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  if (!grads.allFinite()) {
    throw std::runtime_error("non-finite gradient encountered; aborting training");
  }
  state.t += 1;
  state.m = plan.beta1 * state.m + (1.0 - plan.beta1) * grads;
  state.v = plan.beta2 * state.v + (1.0 - plan.beta2) * grads.cwiseProduct(grads);
  const double bc1 = 1.0 - std::pow(plan.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(plan.beta2, static_cast<double>(state.t));
  const VecX update =
      ((state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + kAdamEpsilon) +
       plan.weight_decay * decay_mask.array() * params.array())
          .matrix();
  params -= lr * update;
}

void write_history_csv(const TrainHistory& history, std::ostream& out) {
  out << "epoch,mean_train_loss,dev_accuracy,lr\n";
  for (std::size_t e = 0; e < history.train_loss.size(); ++e) {
    out << (e + 1) << ',' << format_double(history.train_loss[e]) << ','
        << format_double(history.dev_accuracy[e]) << ',' << format_double(history.lr[e]) << '\n';
  }
}

double residual_regularizer(const ProbDist& ps, const ProbDist& pd) {
  const double z = ps.cwiseProduct(pd).sum();
  if (z <= 0.0) {
    throw std::runtime_error("residual regularizer undefined: distributions have zero overlap");
  }
  return -std::log(z);
}

std::vector<Logits> biased_logits_for(const Classifier& biased, const Featurizer& featurizer,
                                      const Dataset& dataset) {
  std::vector<Logits> logits;
  logits.reserve(dataset.size());
  for (const Example& ex : dataset.examples) {
    logits.push_back(forward(biased, featurizer.features(ex).values));
  }
  return logits;
}

namespace {

double dataset_accuracy(const Classifier& clf, const Featurizer& featurizer, const Dataset& data) {
  if (data.empty()) return std::numeric_limits<double>::quiet_NaN();
  long correct = 0;
  for (const Example& ex : data.examples) {
    if (predict(clf, featurizer.features(ex).values) == ex.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

// Shared minibatch loop; biased_logits null selects the MLE objective.
std::pair<Classifier, TrainHistory> run_training(Classifier clf, const Dataset& dataset,
                                                 Featurizer& featurizer,
                                                 const std::vector<Logits>* biased_logits,
                                                 const TrainPlan& plan, const Dataset* dev) {
  plan.validate();
  validate(clf.arch);
  if (dataset.empty()) throw std::runtime_error("cannot train on an empty dataset");
  if (biased_logits && biased_logits->size() != dataset.size()) {
    throw std::invalid_argument("biased logits cache does not match dataset size");
  }
  if (featurizer.dim() != clf.arch.input_dim) {
    throw std::runtime_error("feature dimension mismatch: got " +
                             std::to_string(featurizer.dim()) + ", expected " +
                             std::to_string(clf.arch.input_dim));
  }

  const long n = static_cast<long>(dataset.size());
  const long batch = std::min<long>(plan.batch_size, n);
  const long steps_per_epoch = (n + batch - 1) / batch;
  const long total_steps = steps_per_epoch * plan.epochs;

  const long n_clf = clf.params.size();
  const bool train_table = featurizer.table.trainable;
  const long n_tab = train_table ? featurizer.table.weights.size() : 0;

  VecX theta(n_clf + n_tab);
  theta.head(n_clf) = clf.params;
  if (train_table) {
    theta.tail(n_tab) = Eigen::Map<const VecX>(featurizer.table.weights.data(), n_tab);
  }
  VecX decay_mask(n_clf + n_tab);
  decay_mask.head(n_clf) = weight_decay_mask(clf.arch);
  if (train_table) decay_mask.tail(n_tab).setOnes();  // embedding rows decay like weights

  AdamState adam(theta.size());
  Rng shuffle_rng(derive_seed(plan.seed, "shuffle"));
  Rng dropout_rng(derive_seed(plan.seed, "dropout"));
  const bool use_dropout =
      plan.dropout_on && clf.arch.kind == ArchKind::Mlp && clf.arch.dropout_rate > 0.0;

  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainHistory history;
  VecX grad(theta.size());
  MatX table_grad;
  if (train_table) table_grad.resizeLike(featurizer.table.weights);

  long step = 0;
  for (int epoch = 0; epoch < plan.epochs; ++epoch) {
    shuffle_in_place(order, shuffle_rng);
    double epoch_loss = 0.0;
    double epoch_grad_norm = 0.0;
    double last_lr = 0.0;

    for (long begin = 0; begin < n; begin += batch) {
      const long count = std::min(batch, n - begin);
      grad.setZero();
      if (train_table) table_grad.setZero();

      for (long j = 0; j < count; ++j) {
        const std::size_t idx = order[static_cast<std::size_t>(begin + j)];
        const Example& ex = dataset.examples[idx];
        const FeatureVector fv = featurizer.features(ex);
        const ForwardTrace trace = forward_trace(clf, fv.values, use_dropout, &dropout_rng);
        const Logits* fs = biased_logits ? &(*biased_logits)[idx] : nullptr;
        epoch_loss +=
            nll_from_logits(fs ? combine_logits(*fs, trace.logits) : trace.logits, ex.label);
        const Gradients g = backward(clf, fv.values, ex.label, fs, trace);
        grad.head(n_clf) += g.params;
        if (train_table) featurizer.accumulate_table_grad(ex, g.input, table_grad);
      }
      grad.head(n_clf) /= static_cast<double>(count);
      if (train_table) {
        grad.tail(n_tab) =
            Eigen::Map<const VecX>(table_grad.data(), n_tab) / static_cast<double>(count);
      }

      last_lr = lr_schedule(step, total_steps, plan);
      adam_step(adam, theta, grad, last_lr, plan, decay_mask);
      clf.params = theta.head(n_clf);
      if (train_table) {
        Eigen::Map<VecX>(featurizer.table.weights.data(), n_tab) = theta.tail(n_tab);
      }
      epoch_grad_norm += grad.norm();
      ++step;
    }

    history.train_loss.push_back(epoch_loss / static_cast<double>(n));
    history.dev_accuracy.push_back(dev ? dataset_accuracy(clf, featurizer, *dev)
                                       : std::numeric_limits<double>::quiet_NaN());
    history.lr.push_back(last_lr);
    history.grad_norm.push_back(epoch_grad_norm);
  }
  return {std::move(clf), std::move(history)};
}

}  // namespace

std::pair<Classifier, TrainHistory> train_mle(Classifier clf, const Dataset& dataset,
                                              Featurizer& featurizer, const TrainPlan& plan,
                                              const Dataset* dev) {
  if (plan.objective != Objective::Mle) {
    throw std::invalid_argument("train_mle requires plan.objective == mle");
  }
  return run_training(std::move(clf), dataset, featurizer, nullptr, plan, dev);
}

std::pair<Classifier, TrainHistory> train_drift(Classifier deb, const Dataset& dataset,
                                                Featurizer& deb_featurizer,
                                                const std::vector<Logits>& biased_logits,
                                                const TrainPlan& plan, const Dataset* dev) {
  if (plan.objective != Objective::Drift) {
    throw std::invalid_argument("train_drift requires plan.objective == drift");
  }
  return run_training(std::move(deb), dataset, deb_featurizer, &biased_logits, plan, dev);
}

std::pair<Classifier, TrainHistory> train_drift(const Classifier& biased, Classifier deb,
                                                const Dataset& dataset,
                                                const Featurizer& biased_featurizer,
                                                Featurizer& deb_featurizer, const TrainPlan& plan,
                                                const Dataset* dev) {
  const std::vector<Logits> cache = biased_logits_for(biased, biased_featurizer, dataset);
  return train_drift(std::move(deb), dataset, deb_featurizer, cache, plan, dev);
}

Dataset filter_remove_logits(const Dataset& dataset, const std::vector<Logits>& biased_logits) {
  if (biased_logits.size() != dataset.size()) {
    throw std::invalid_argument("biased logits cache does not match dataset size");
  }
  Dataset kept;
  kept.name = dataset.name;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Logits& z = biased_logits[i];
    int best = 0;
    for (int k = 1; k < kNumClasses; ++k) {
      if (z(k) > z(best)) best = k;
    }
    if (static_cast<Label>(best) != dataset.examples[i].label) {
      kept.examples.push_back(dataset.examples[i]);
    }
  }
  if (kept.empty()) throw std::runtime_error("Remove filter eliminated all examples");
  return kept;
}

Dataset filter_remove(const Classifier& biased, const Dataset& dataset,
                      const Featurizer& featurizer) {
  return filter_remove_logits(dataset, biased_logits_for(biased, featurizer, dataset));
}

std::pair<Classifier, TrainHistory> train_remove(const Classifier& biased, Classifier deb,
                                                 const Dataset& dataset,
                                                 const Featurizer& biased_featurizer,
                                                 Featurizer& deb_featurizer, const TrainPlan& plan,
                                                 const Dataset* dev) {
  if (plan.objective != Objective::Remove) {
    throw std::invalid_argument("train_remove requires plan.objective == remove");
  }
  const Dataset kept = filter_remove(biased, dataset, biased_featurizer);
  TrainPlan mle_plan = plan;
  mle_plan.objective = Objective::Mle;
  return run_training(std::move(deb), kept, deb_featurizer, nullptr, mle_plan, dev);
}

}  // namespace drift
