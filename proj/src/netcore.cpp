#include "drift/netcore.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace drift {

namespace {

struct Layout {
  int w1_off = 0, w1_rows = 0, w1_cols = 0;
  int b1_off = 0, b1_len = 0;
  int w2_off = 0, w2_rows = 0, w2_cols = 0;
  int b2_off = 0, b2_len = 0;
  int total = 0;
};

Layout layout_of(const Architecture& arch) {
  Layout l;
  if (arch.kind == ArchKind::Linear) {
    l.w1_rows = kNumClasses;
    l.w1_cols = arch.input_dim;
    l.b1_off = l.w1_rows * l.w1_cols;
    l.b1_len = kNumClasses;
    l.total = l.b1_off + l.b1_len;
  } else {
    l.w1_rows = arch.hidden_dim;
    l.w1_cols = arch.input_dim;
    l.b1_off = l.w1_rows * l.w1_cols;
    l.b1_len = arch.hidden_dim;
    l.w2_off = l.b1_off + l.b1_len;
    l.w2_rows = kNumClasses;
    l.w2_cols = arch.hidden_dim;
    l.b2_off = l.w2_off + l.w2_rows * l.w2_cols;
    l.b2_len = kNumClasses;
    l.total = l.b2_off + l.b2_len;
  }
  return l;
}

void check_input(const Classifier& clf, const VecX& x) {
  if (static_cast<int>(x.size()) != clf.arch.input_dim) {
    throw std::runtime_error("feature dimension mismatch: got " + std::to_string(x.size()) +
                             ", expected " + std::to_string(clf.arch.input_dim));
  }
  if (static_cast<int>(clf.params.size()) != param_count(clf.arch)) {
    throw std::runtime_error("parameter vector does not match architecture layout");
  }
}

}  // namespace

void validate(const Architecture& arch) {
  if (arch.input_dim < 1) throw std::invalid_argument("input_dim must be >= 1");
  if (arch.kind == ArchKind::Mlp && arch.hidden_dim < 1) {
    throw std::invalid_argument("hidden_dim must be >= 1 for the MLP architecture");
  }
  if (!(arch.dropout_rate >= 0.0 && arch.dropout_rate < 1.0)) {
    throw std::invalid_argument("dropout_rate must be in [0, 1)");
  }
}

int param_count(const Architecture& arch) { return layout_of(arch).total; }

VecX weight_decay_mask(const Architecture& arch) {
  const Layout l = layout_of(arch);
  VecX mask = VecX::Zero(l.total);
  mask.segment(l.w1_off, l.w1_rows * l.w1_cols).setOnes();
  if (arch.kind == ArchKind::Mlp) mask.segment(l.w2_off, l.w2_rows * l.w2_cols).setOnes();
  return mask;
}

Classifier init_params(const Architecture& arch, std::uint64_t seed) {
  validate(arch);
  const Layout l = layout_of(arch);
  Classifier clf{arch, VecX::Zero(l.total)};
  Rng rng(seed);
  auto fill_glorot = [&](int off, int count, int fan_in, int fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (int i = 0; i < count; ++i) clf.params(off + i) = uniform_range(rng, -limit, limit);
  };
  if (arch.kind == ArchKind::Linear) {
    fill_glorot(l.w1_off, l.w1_rows * l.w1_cols, arch.input_dim, kNumClasses);
  } else {
    fill_glorot(l.w1_off, l.w1_rows * l.w1_cols, arch.input_dim, arch.hidden_dim);
    fill_glorot(l.w2_off, l.w2_rows * l.w2_cols, arch.hidden_dim, kNumClasses);
  }
  return clf;
}

Eigen::Map<const MatX> weight1(const Classifier& clf) {
  const Layout l = layout_of(clf.arch);
  return {clf.params.data() + l.w1_off, l.w1_rows, l.w1_cols};
}
Eigen::Map<const VecX> bias1(const Classifier& clf) {
  const Layout l = layout_of(clf.arch);
  return {clf.params.data() + l.b1_off, l.b1_len};
}
Eigen::Map<const MatX> weight2(const Classifier& clf) {
  const Layout l = layout_of(clf.arch);
  return {clf.params.data() + l.w2_off, l.w2_rows, l.w2_cols};
}
Eigen::Map<const VecX> bias2(const Classifier& clf) {
  const Layout l = layout_of(clf.arch);
  return {clf.params.data() + l.b2_off, l.b2_len};
}
Eigen::Map<MatX> weight1(Classifier& clf) {
  const Layout l = layout_of(clf.arch);
  return {clf.params.data() + l.w1_off, l.w1_rows, l.w1_cols};
}
Eigen::Map<VecX> bias1(Classifier& clf) {
  const Layout l = layout_of(clf.arch);
  return {clf.params.data() + l.b1_off, l.b1_len};
}
Eigen::Map<MatX> weight2(Classifier& clf) {
  const Layout l = layout_of(clf.arch);
  return {clf.params.data() + l.w2_off, l.w2_rows, l.w2_cols};
}
Eigen::Map<VecX> bias2(Classifier& clf) {
  const Layout l = layout_of(clf.arch);
  return {clf.params.data() + l.b2_off, l.b2_len};
}

Logits forward(const Classifier& clf, const VecX& x) {
  ForwardTrace trace = forward_trace(clf, x, false, nullptr);
  return trace.logits;
}

ForwardTrace forward_trace(const Classifier& clf, const VecX& x, bool train_mode, Rng* rng) {
  check_input(clf, x);
  ForwardTrace trace;
  if (clf.arch.kind == ArchKind::Linear) {
    trace.logits = weight1(clf) * x + bias1(clf);
    return trace;
  }
  trace.hidden_pre = weight1(clf) * x + bias1(clf);
  trace.dropout_mask = VecX::Ones(clf.arch.hidden_dim);
  if (train_mode && clf.arch.dropout_rate > 0.0) {
    if (rng == nullptr) throw std::invalid_argument("dropout requires an rng in train mode");
    const double keep_scale = 1.0 / (1.0 - clf.arch.dropout_rate);
    for (int i = 0; i < clf.arch.hidden_dim; ++i) {
      trace.dropout_mask(i) = uniform_real(*rng) < clf.arch.dropout_rate ? 0.0 : keep_scale;
    }
  }
  trace.hidden_act = trace.hidden_pre.cwiseMax(0.0).cwiseProduct(trace.dropout_mask);
  trace.logits = weight2(clf) * trace.hidden_act + bias2(clf);
  return trace;
}

ProbDist softmax(const Logits& z) {
  const double m = z.maxCoeff();
  Vec3 e = (z.array() - m).exp();
  return e / e.sum();
}

Logits combine_logits(const Logits& fs, const Logits& fd) { return fs + fd; }

ProbDist gradient_weights(const ProbDist& ps, const ProbDist& pd) {
  Vec3 w = ps.cwiseProduct(pd);
  const double total = w.sum();
  if (total <= 0.0) {
    throw std::runtime_error("gradient weights undefined: all class products are zero");
  }
  return w / total;
}

double nll_from_logits(const Logits& z, Label y) {
  const double m = z.maxCoeff();
  const double lse = m + std::log((z.array() - m).exp().sum());
  return lse - z(label_code(y));
}

double loss_mle(const Classifier& clf, const VecX& x, Label y) {
  return nll_from_logits(forward(clf, x), y);
}

double loss_drift(const Classifier& clf, const VecX& x, Label y, const Logits& fs) {
  return nll_from_logits(combine_logits(fs, forward(clf, x)), y);
}

Gradients backward(const Classifier& clf, const VecX& x, Label y, const Logits* biased_logits,
                   const ForwardTrace& trace) {
  check_input(clf, x);
  const Layout l = layout_of(clf.arch);
  const Logits combined =
      biased_logits ? combine_logits(*biased_logits, trace.logits) : trace.logits;
  Vec3 err = softmax(combined);
  err(label_code(y)) -= 1.0;

  Gradients g;
  g.params = VecX::Zero(l.total);
  if (clf.arch.kind == ArchKind::Linear) {
    Eigen::Map<MatX>(g.params.data() + l.w1_off, l.w1_rows, l.w1_cols) = err * x.transpose();
    g.params.segment(l.b1_off, l.b1_len) = err;
    g.input = weight1(clf).transpose() * err;
    return g;
  }
  Eigen::Map<MatX>(g.params.data() + l.w2_off, l.w2_rows, l.w2_cols) =
      err * trace.hidden_act.transpose();
  g.params.segment(l.b2_off, l.b2_len) = err;
  VecX dhidden = (weight2(clf).transpose() * err).cwiseProduct(trace.dropout_mask);
  dhidden = dhidden.cwiseProduct(
      (trace.hidden_pre.array() > 0.0).cast<double>().matrix());
  Eigen::Map<MatX>(g.params.data() + l.w1_off, l.w1_rows, l.w1_cols) = dhidden * x.transpose();
  g.params.segment(l.b1_off, l.b1_len) = dhidden;
  g.input = weight1(clf).transpose() * dhidden;
  return g;
}

Gradients backward(const Classifier& clf, const VecX& x, Label y, const Logits* biased_logits) {
  return backward(clf, x, y, biased_logits, forward_trace(clf, x, false, nullptr));
}

Label predict(const Classifier& clf, const VecX& x) {
  const Logits z = forward(clf, x);
  int best = 0;
  for (int k = 1; k < kNumClasses; ++k) {
    if (z(k) > z(best)) best = k;
  }
  return static_cast<Label>(best);
}

}  // namespace drift
