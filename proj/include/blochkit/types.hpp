#pragma once

#include <complex>
#include <numbers>

#include <Eigen/Core>
#include <Eigen/LU>

namespace blochkit {

using cplx = std::complex<double>;
using Mat2 = Eigen::Matrix2cd;
using Vec2 = Eigen::Vector2cd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace blochkit
