#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>

namespace drift {

template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

using VecX = Vec<double>;
using MatX = Mat<double>;
using Vec3 = Eigen::Vector3d;

inline constexpr int kNumClasses = 3;

/// Three-way pair-classification label with stable integer codes.
enum class Label : int { Entailment = 0, Contradiction = 1, Neutral = 2 };

const std::string& label_name(Label y);

/// Throws std::invalid_argument for anything but the three label names.
Label label_from_name(const std::string& name);

inline int label_code(Label y) { return static_cast<int>(y); }

}  // namespace drift
