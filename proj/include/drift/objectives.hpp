#pragma once

#include "drift/corpus.hpp"
#include "drift/featurize.hpp"
#include "drift/netcore.hpp"

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

namespace drift {

enum class Objective { Mle, Drift, Remove };

const std::string& objective_name(Objective obj);
Objective objective_from_name(const std::string& name);

struct TrainPlan {
  Objective objective = Objective::Mle;
  int epochs = 30;
  int batch_size = 32;
  double base_lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 0.01;
  double warmup_fraction = 0.1;
  std::uint64_t seed = 1;
  bool dropout_on = true;

  void validate() const;
};

inline constexpr double kAdamEpsilon = 1e-8;

/// Linear warmup over the first ceil(warmup_fraction * total_steps) updates
/// (never fewer than one), then linear decay to 0 at the final step.
double lr_schedule(long t, long total_steps, const TrainPlan& plan);

struct AdamState {
  VecX m;
  VecX v;
  long t = 0;

  explicit AdamState(Eigen::Index n) : m(VecX::Zero(n)), v(VecX::Zero(n)) {}
};

/// One decoupled-weight-decay Adam update in place. decay_mask zeroes the
/// decay term on bias parameters. Throws on non-finite gradients.
void adam_step(AdamState& state, VecX& params, const VecX& grads, double lr,
               const TrainPlan& plan, const VecX& decay_mask);

struct TrainHistory {
  std::vector<double> train_loss;    // mean per-example loss per epoch
  std::vector<double> dev_accuracy;  // NaN when no dev set was given
  std::vector<double> lr;            // learning rate at the last step of each epoch
  std::vector<double> grad_norm;     // sum over batches of the mean-gradient 2-norm
};

/// CSV columns: epoch, mean_train_loss, dev_accuracy, lr.
void write_history_csv(const TrainHistory& history, std::ostream& out);

/// R(x) = -log sum_k ps(k) pd(k); log 3 when ps is uniform, 0 iff both are
/// the same one-hot. Throws when the inner product is zero.
double residual_regularizer(const ProbDist& ps, const ProbDist& pd);

/// Eval-mode biased logits for every example, cached once before residual
/// fitting so the frozen-classifier contract is mechanical.
std::vector<Logits> biased_logits_for(const Classifier& biased, const Featurizer& featurizer,
                                      const Dataset& dataset);

/// Minibatch Adam over seeded shuffles; the featurizer's table trains along
/// with the classifier when marked trainable.
std::pair<Classifier, TrainHistory> train_mle(Classifier clf, const Dataset& dataset,
                                              Featurizer& featurizer, const TrainPlan& plan,
                                              const Dataset* dev = nullptr);

/// Residual fitting against fixed per-example biased logits.
std::pair<Classifier, TrainHistory> train_drift(Classifier deb, const Dataset& dataset,
                                                Featurizer& deb_featurizer,
                                                const std::vector<Logits>& biased_logits,
                                                const TrainPlan& plan,
                                                const Dataset* dev = nullptr);

std::pair<Classifier, TrainHistory> train_drift(const Classifier& biased, Classifier deb,
                                                const Dataset& dataset,
                                                const Featurizer& biased_featurizer,
                                                Featurizer& deb_featurizer, const TrainPlan& plan,
                                                const Dataset* dev = nullptr);

/// Keeps exactly the examples the biased model predicts incorrectly, in
/// order. Throws when nothing is left.
Dataset filter_remove(const Classifier& biased, const Dataset& dataset,
                      const Featurizer& featurizer);
Dataset filter_remove_logits(const Dataset& dataset, const std::vector<Logits>& biased_logits);

/// filter_remove then MLE on the remainder.
std::pair<Classifier, TrainHistory> train_remove(const Classifier& biased, Classifier deb,
                                                 const Dataset& dataset,
                                                 const Featurizer& biased_featurizer,
                                                 Featurizer& deb_featurizer, const TrainPlan& plan,
                                                 const Dataset* dev = nullptr);

}  // namespace drift
