#pragma once

#include "drift/rng.hpp"
#include "drift/types.hpp"

#include <cstdint>

namespace drift {

enum class ArchKind { Linear, Mlp };

/// Output layer is always K=3 classes. dropout_rate applies to the hidden
/// layer of the Mlp kind in train mode only.
struct Architecture {
  ArchKind kind = ArchKind::Linear;
  int input_dim = 1;
  int hidden_dim = 0;  // Mlp only
  double dropout_rate = 0.1;
};

void validate(const Architecture& arch);

/// Flat parameter layout:
///   Linear: [W (3 x input_dim, column-major) | b (3)]
///   Mlp:    [W1 (hidden x input_dim, column-major) | b1 (hidden)
///            | W2 (3 x hidden, column-major) | b2 (3)]
int param_count(const Architecture& arch);

/// 1.0 for weight entries, 0.0 for biases; weight decay skips biases.
VecX weight_decay_mask(const Architecture& arch);

struct Classifier {
  Architecture arch;
  VecX params;
};

/// Glorot-uniform weights, zero biases, seeded.
Classifier init_params(const Architecture& arch, std::uint64_t seed);

// Views into the flat parameter vector.
Eigen::Map<const MatX> weight1(const Classifier& clf);
Eigen::Map<const VecX> bias1(const Classifier& clf);
Eigen::Map<const MatX> weight2(const Classifier& clf);  // Mlp only
Eigen::Map<const VecX> bias2(const Classifier& clf);    // Mlp only
Eigen::Map<MatX> weight1(Classifier& clf);
Eigen::Map<VecX> bias1(Classifier& clf);
Eigen::Map<MatX> weight2(Classifier& clf);
Eigen::Map<VecX> bias2(Classifier& clf);

using Logits = Vec3;
using ProbDist = Vec3;

/// Deterministic eval-mode logits (no dropout).
Logits forward(const Classifier& clf, const VecX& x);

struct ForwardTrace {
  VecX hidden_pre;     // Mlp: pre-activation
  VecX hidden_act;     // Mlp: relu then dropout mask applied
  VecX dropout_mask;   // Mlp: per-unit 0 or 1/(1-rate); all ones in eval mode
  Logits logits = Logits::Zero();
};

/// Forward pass keeping intermediates for backward. Dropout fires only when
/// train_mode is set and the architecture has a positive rate; rng must be
/// non-null in that case.
ForwardTrace forward_trace(const Classifier& clf, const VecX& x, bool train_mode, Rng* rng);

/// Max-subtracted, overflow-safe.
ProbDist softmax(const Logits& z);

/// Elementwise sum; softmax of the sum is the renormalized product of experts.
Logits combine_logits(const Logits& fs, const Logits& fd);

/// p_a(k) = ps(k) pd(k) / sum_j ps(j) pd(j). Throws when every product is 0.
ProbDist gradient_weights(const ProbDist& ps, const ProbDist& pd);

/// Stable -log softmax(z)[y].
double nll_from_logits(const Logits& z, Label y);

double loss_mle(const Classifier& clf, const VecX& x, Label y);

/// -log softmax(fs + f(x))[y] with the biased logits fs held fixed.
double loss_drift(const Classifier& clf, const VecX& x, Label y, const Logits& fs);

struct Gradients {
  VecX params;  // same layout as Classifier::params
  VecX input;   // d(loss)/d(features), for the embedding pullback
};

/// Exact analytic gradient of the per-example loss. biased_logits selects the
/// objective: null for MLE, fixed biased logits for residual fitting. The
/// output-layer error is softmax(fs + z) - onehot(y); relu subgradient at 0
/// is 0.
Gradients backward(const Classifier& clf, const VecX& x, Label y, const Logits* biased_logits,
                   const ForwardTrace& trace);
Gradients backward(const Classifier& clf, const VecX& x, Label y,
                   const Logits* biased_logits = nullptr);

/// Argmax of eval-mode logits; ties break toward the smallest class code.
Label predict(const Classifier& clf, const VecX& x);

}  // namespace drift
