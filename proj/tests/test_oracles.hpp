#pragma once

// Test-only reference implementations, kept independent of the library code
// paths they check.

#include "drift/types.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <vector>

namespace oracles {

/// softmax in extended precision.
inline std::array<long double, 3> softmax_ld(const drift::Vec3& z) {
  long double m = z(0);
  for (int k = 1; k < 3; ++k) m = std::max<long double>(m, z(k));
  std::array<long double, 3> e{};
  long double sum = 0;
  for (int k = 0; k < 3; ++k) {
    e[static_cast<std::size_t>(k)] = std::exp(static_cast<long double>(z(k)) - m);
    sum += e[static_cast<std::size_t>(k)];
  }
  for (auto& v : e) v /= sum;
  return e;
}

/// -log softmax(z)[y] in extended precision.
inline long double nll_ld(const drift::Vec3& z, int y) {
  long double m = z(0);
  for (int k = 1; k < 3; ++k) m = std::max<long double>(m, z(k));
  long double sum = 0;
  for (int k = 0; k < 3; ++k) sum += std::exp(static_cast<long double>(z(k)) - m);
  return m + std::log(sum) - static_cast<long double>(z(y));
}

/// Central finite differences of f over every coordinate of theta.
inline drift::VecX central_differences(const std::function<double(const drift::VecX&)>& f,
                                       drift::VecX theta, double step) {
  drift::VecX grad(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double saved = theta(i);
    theta(i) = saved + step;
    const double up = f(theta);
    theta(i) = saved - step;
    const double down = f(theta);
    theta(i) = saved;
    grad(i) = (up - down) / (2.0 * step);
  }
  return grad;
}

/// Accuracy and per-class F1 recomputed directly from (gold, pred) pairs.
struct MetricsOracle {
  double accuracy = 0.0;
  std::array<double, 3> f1{};
};

inline MetricsOracle metrics_from_pairs(const std::vector<std::pair<int, int>>& pairs) {
  MetricsOracle out;
  long correct = 0;
  for (auto [gold, pred] : pairs) correct += gold == pred ? 1 : 0;
  out.accuracy = pairs.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(pairs.size());
  for (int k = 0; k < 3; ++k) {
    long tp = 0, gold_k = 0, pred_k = 0;
    for (auto [gold, pred] : pairs) {
      if (gold == k && pred == k) ++tp;
      if (gold == k) ++gold_k;
      if (pred == k) ++pred_k;
    }
    const double precision = pred_k > 0 ? static_cast<double>(tp) / static_cast<double>(pred_k) : 0.0;
    const double recall = gold_k > 0 ? static_cast<double>(tp) / static_cast<double>(gold_k) : 0.0;
    out.f1[static_cast<std::size_t>(k)] =
        precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  }
  return out;
}

}  // namespace oracles
