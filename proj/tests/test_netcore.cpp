#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "drift/netcore.hpp"
#include "drift/objectives.hpp"
#include "drift/rng.hpp"

#include "test_oracles.hpp"

using namespace drift;

namespace {

VecX random_vec(Rng& rng, int n, double lo = -2.0, double hi = 2.0) {
  VecX v(n);
  for (int i = 0; i < n; ++i) v(i) = uniform_range(rng, lo, hi);
  return v;
}

Classifier random_classifier(Rng& rng, bool mlp, int input_dim, int hidden_dim) {
  Architecture arch;
  arch.kind = mlp ? ArchKind::Mlp : ArchKind::Linear;
  arch.input_dim = input_dim;
  arch.hidden_dim = mlp ? hidden_dim : 0;
  arch.dropout_rate = 0.0;
  Classifier clf = init_params(arch, rng());
  // Spread the parameters a bit beyond the init range.
  for (Eigen::Index i = 0; i < clf.params.size(); ++i) {
    clf.params(i) += uniform_range(rng, -0.5, 0.5);
  }
  return clf;
}

bool has_relu_kink(const Classifier& clf, const VecX& x, double margin) {
  if (clf.arch.kind != ArchKind::Mlp) return false;
  const VecX pre = weight1(clf) * x + bias1(clf);
  return pre.cwiseAbs().minCoeff() < margin;
}

}  // namespace

TEST_CASE("init_params layout, seeding and zero biases") {
  Architecture lin{ArchKind::Linear, 10, 0, 0.1};
  const Classifier a = init_params(lin, 5);
  CHECK(a.params.size() == 33);
  CHECK(bias1(a).isZero(0.0));
  CHECK(init_params(lin, 5).params == a.params);
  CHECK_FALSE(init_params(lin, 6).params == a.params);

  Architecture mlp{ArchKind::Mlp, 7, 4, 0.1};
  const Classifier m = init_params(mlp, 9);
  CHECK(m.params.size() == 7 * 4 + 4 + 4 * 3 + 3);
  CHECK(bias1(m).isZero(0.0));
  CHECK(bias2(m).isZero(0.0));

  CHECK_THROWS(init_params(Architecture{ArchKind::Mlp, 4, 0, 0.1}, 1));
  CHECK_THROWS(init_params(Architecture{ArchKind::Linear, 0, 0, 0.1}, 1));
  CHECK_THROWS(init_params(Architecture{ArchKind::Linear, 4, 0, 1.0}, 1));
}

TEST_CASE("forward computes the documented affine map") {
  Architecture lin{ArchKind::Linear, 3, 0, 0.0};
  Classifier clf{lin, VecX::Zero(param_count(lin))};
  VecX x(3);
  x << 1, 2, 3;
  CHECK(forward(clf, x) == Logits::Zero());

  MatX w(3, 3);
  w << 1, 0, 0,
       0, 1, 0,
       1, 1, 1;
  weight1(clf) = w;
  const Logits z = forward(clf, x);
  CHECK(z(0) == 1.0);
  CHECK(z(1) == 2.0);
  CHECK(z(2) == 6.0);

  bias1(clf) << 0.5, -0.5, 0.0;
  CHECK(forward(clf, x)(0) == 1.5);

  CHECK(forward(clf, x) == forward(clf, x));  // eval mode is deterministic

  VecX wrong(4);
  wrong.setZero();
  CHECK_THROWS(forward(clf, wrong));
}

TEST_CASE("softmax basics against a high-precision oracle") {
  CHECK(softmax(Logits(0, 0, 0)).isApprox(Vec3(1.0 / 3, 1.0 / 3, 1.0 / 3), 1e-15));
  CHECK(softmax(Logits(std::log(2.0), 0, 0)).isApprox(Vec3(0.5, 0.25, 0.25), 1e-12));

  const ProbDist big = softmax(Logits(1000, 0, 0));
  CHECK(big.allFinite());
  CHECK(big(0) >= 1.0 - 1e-300);
  CHECK(big(1) < 1e-300);

  Rng rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    const Logits z(uniform_range(rng, -50, 50), uniform_range(rng, -50, 50),
                   uniform_range(rng, -50, 50));
    const ProbDist p = softmax(z);
    const auto exact = oracles::softmax_ld(z);
    for (int k = 0; k < 3; ++k) {
      CHECK(std::abs(p(k) - static_cast<double>(exact[static_cast<std::size_t>(k)])) < 1e-12);
    }
    CHECK(std::abs(p.sum() - 1.0) < 1e-9);
    // invariance to a common shift
    const double c = uniform_range(rng, -100, 100);
    const ProbDist shifted = softmax(Logits(z(0) + c, z(1) + c, z(2) + c));
    CHECK((p - shifted).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("combine_logits and the product-of-experts identity") {
  const Logits fs(1, 0, 0);
  CHECK(combine_logits(fs, Logits::Zero()) == fs);
  CHECK(combine_logits(fs, Logits(0, 1, 0)) == Logits(1, 1, 0));

  Rng rng(13);
  for (int trial = 0; trial < 500; ++trial) {
    const Logits a(uniform_range(rng, -20, 20), uniform_range(rng, -20, 20),
                   uniform_range(rng, -20, 20));
    const Logits b(uniform_range(rng, -20, 20), uniform_range(rng, -20, 20),
                   uniform_range(rng, -20, 20));
    const ProbDist lhs = softmax(combine_logits(a, b));
    Vec3 prod = softmax(a).cwiseProduct(softmax(b));
    prod /= prod.sum();
    CHECK((lhs - prod).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("gradient_weights") {
  const ProbDist uniform(1.0 / 3, 1.0 / 3, 1.0 / 3);
  const ProbDist pd(0.2, 0.3, 0.5);
  CHECK(gradient_weights(uniform, pd).isApprox(pd, 1e-12));

  const ProbDist onehot(0, 1, 0);
  CHECK(gradient_weights(onehot, pd).isApprox(ProbDist(0, 1, 0), 1e-12));

  const ProbDist ps(0.5, 0.3, 0.2);
  CHECK(gradient_weights(ps, pd).isApprox(ProbDist(10.0 / 29, 9.0 / 29, 10.0 / 29), 1e-12));

  CHECK_THROWS(gradient_weights(ProbDist(1, 0, 0), ProbDist(0, 1, 0)));
}

TEST_CASE("loss_mle") {
  Architecture lin{ArchKind::Linear, 4, 0, 0.0};
  Classifier zero{lin, VecX::Zero(param_count(lin))};
  VecX x(4);
  x << 1, -1, 2, 0.5;
  CHECK(loss_mle(zero, x, Label::Contradiction) == doctest::Approx(std::log(3.0)).epsilon(1e-12));

  Classifier strong = zero;
  bias1(strong) << 40, 0, 0;
  CHECK(loss_mle(strong, x, Label::Entailment) < 1e-12);

  Rng rng(14);
  for (int trial = 0; trial < 200; ++trial) {
    const Classifier clf = random_classifier(rng, false, 4, 0);
    const VecX xr = random_vec(rng, 4);
    const Label y = static_cast<Label>(uniform_int(rng, 3));
    const double loss = loss_mle(clf, xr, y);
    const long double exact = oracles::nll_ld(forward(clf, xr), label_code(y));
    CHECK(std::abs(loss - static_cast<double>(exact)) < 1e-12);
  }
}

TEST_CASE("loss_drift limits and decomposition") {
  Rng rng(15);
  const Classifier clf = random_classifier(rng, true, 6, 5);
  const VecX x = random_vec(rng, 6);
  const Label y = Label::Neutral;

  CHECK(loss_drift(clf, x, y, Logits::Zero()) == loss_mle(clf, x, y));

  // A biased model that already solves the example drives the loss to zero.
  Architecture lin{ArchKind::Linear, 6, 0, 0.0};
  Classifier zero{lin, VecX::Zero(param_count(lin))};
  CHECK(loss_drift(zero, x, Label::Entailment, Logits(50, 0, 0)) < 1e-12);

  // Per-example decomposition: loss = -log pd(y) - R(x) - log ps(y).
  for (int trial = 0; trial < 300; ++trial) {
    const Logits fs(uniform_range(rng, -5, 5), uniform_range(rng, -5, 5),
                    uniform_range(rng, -5, 5));
    const Label yy = static_cast<Label>(uniform_int(rng, 3));
    const VecX xx = random_vec(rng, 6);
    const double lhs = loss_drift(clf, xx, yy, fs);
    const ProbDist ps = softmax(fs);
    const ProbDist pd = softmax(forward(clf, xx));
    const double rhs = -std::log(pd(label_code(yy))) - residual_regularizer(ps, pd) -
                       std::log(ps(label_code(yy)));
    CHECK(std::abs(lhs - rhs) < 1e-9);
  }
}

TEST_CASE("backward limits") {
  Rng rng(16);
  for (int trial = 0; trial < 50; ++trial) {
    const bool mlp = trial % 2 == 0;
    const Classifier clf = random_classifier(rng, mlp, 5, 4);
    const VecX x = random_vec(rng, 5, -1.0, 1.0);
    const Label y = static_cast<Label>(uniform_int(rng, 3));

    // (a) uniform biased logits reduce the residual gradient to MLE
    const Logits uniform = Logits::Zero();
    const Gradients g_drift = backward(clf, x, y, &uniform);
    const Gradients g_mle = backward(clf, x, y, nullptr);
    CHECK((g_drift.params - g_mle.params).lpNorm<Eigen::Infinity>() <= 1e-15);
    CHECK((g_drift.input - g_mle.input).lpNorm<Eigen::Infinity>() <= 1e-15);

    // (b) a biased model with p_s(y) >= 1 - 1e-8 cancels the gradient
    for (double margin : {std::log(2.0 / 1e-8), 30.0}) {
      Logits saturated = Logits::Zero();
      saturated(label_code(y)) = margin;
      CHECK(softmax(saturated)(label_code(y)) >= 1.0 - 1e-8);
      const Gradients g = backward(clf, x, y, &saturated);
      CHECK(g.params.norm() <= 1e-6);
    }
  }
}

TEST_CASE("drift gradient equals MLE gradient of a classifier forced to p_a") {
  // Absorbing the biased logits into the output bias of a linear model turns
  // its output distribution into p_a; the MLE gradient there must match.
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const Classifier clf = random_classifier(rng, false, 6, 0);
    const VecX x = random_vec(rng, 6);
    const Label y = static_cast<Label>(uniform_int(rng, 3));
    const Logits fs(uniform_range(rng, -3, 3), uniform_range(rng, -3, 3),
                    uniform_range(rng, -3, 3));

    Classifier shifted = clf;
    bias1(shifted) += fs;

    const Gradients drift_grad = backward(clf, x, y, &fs);
    const Gradients forced_mle = backward(shifted, x, y, nullptr);
    CHECK((drift_grad.params - forced_mle.params).lpNorm<Eigen::Infinity>() < 1e-10);
  }
}

TEST_CASE("residual gradient norm decreases monotonically in p_s(y)") {
  Rng rng(18);
  const Classifier clf = random_classifier(rng, false, 8, 0);
  const VecX x = random_vec(rng, 8);
  const Label y = Label::Contradiction;

  double previous = std::numeric_limits<double>::infinity();
  for (double q : {0.4, 0.6, 0.8, 0.95, 0.999}) {
    // ps = (q at y, even split elsewhere), built from logits.
    Logits fs = Logits::Constant(std::log((1.0 - q) / 2.0));
    fs(label_code(y)) = std::log(q);
    const double norm = backward(clf, x, y, &fs).params.norm();
    CHECK(norm < previous);
    previous = norm;
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  Rng rng(19);
  const double step = 1e-6;
  int checked = 0;
  while (checked < 120) {
    const bool mlp = checked % 2 == 0;
    const int input_dim = 3 + uniform_int(rng, 5);
    const Classifier clf = random_classifier(rng, mlp, input_dim, 2 + uniform_int(rng, 4));
    const VecX x = random_vec(rng, input_dim);
    if (has_relu_kink(clf, x, 1e-4)) continue;  // keep clear of the relu kink
    const Label y = static_cast<Label>(uniform_int(rng, 3));
    const bool use_drift = uniform_int(rng, 2) == 1;
    Logits fs = Logits::Zero();
    if (use_drift) {
      fs = Logits(uniform_range(rng, -3, 3), uniform_range(rng, -3, 3), uniform_range(rng, -3, 3));
    }

    const Gradients g = backward(clf, x, y, use_drift ? &fs : nullptr);
    auto loss_at = [&](const VecX& theta) {
      Classifier probe = clf;
      probe.params = theta;
      return use_drift ? loss_drift(probe, x, y, fs) : loss_mle(probe, x, y);
    };
    const VecX fd = oracles::central_differences(loss_at, clf.params, step);
    const double rel = (g.params - fd).lpNorm<Eigen::Infinity>() /
                       std::max(fd.lpNorm<Eigen::Infinity>(), 1e-12);
    CHECK(rel <= 1e-5);
    ++checked;
  }
}

TEST_CASE("predict breaks ties toward the smallest class code") {
  Architecture lin{ArchKind::Linear, 3, 0, 0.0};
  Classifier clf{lin, VecX::Zero(param_count(lin))};
  VecX x(3);
  x << 1, 1, 1;

  bias1(clf) << 3, 1, 1;
  CHECK(predict(clf, x) == Label::Entailment);
  bias1(clf) << 2, 2, 0;
  CHECK(predict(clf, x) == Label::Entailment);
  bias1(clf) << 0, 0, 0;
  CHECK(predict(clf, x) == Label::Entailment);
  bias1(clf) << 0, 5, 5;
  CHECK(predict(clf, x) == Label::Contradiction);
  bias1(clf) << 0, 1, 5;
  CHECK(predict(clf, x) == Label::Neutral);
}

TEST_CASE("dropout fires only in train mode and rescales survivors") {
  Architecture arch{ArchKind::Mlp, 4, 64, 0.5};
  Classifier clf = init_params(arch, 3);
  VecX x(4);
  x << 1, -2, 0.5, 1;

  const ForwardTrace eval_trace = forward_trace(clf, x, false, nullptr);
  CHECK(eval_trace.dropout_mask == VecX::Ones(64));

  Rng rng(31);
  const ForwardTrace train_trace = forward_trace(clf, x, true, &rng);
  int zeros = 0;
  for (int i = 0; i < 64; ++i) {
    const double m = train_trace.dropout_mask(i);
    CHECK((m == 0.0 || m == 2.0));
    zeros += m == 0.0 ? 1 : 0;
  }
  CHECK(zeros > 10);
  CHECK(zeros < 54);

  CHECK_THROWS(forward_trace(clf, x, true, nullptr));
}
