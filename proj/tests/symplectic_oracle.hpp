#pragma once

// Symplectic spectrum by direct eigen-decomposition of i Omega V.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>

namespace fso::reference {

/// 4x4 covariance matrix [[a I, c Z], [c Z, b I]] with Z = diag(1, -1).
inline Eigen::Matrix4d two_mode_matrix(double a, double b, double c) {
  Eigen::Matrix4d v = Eigen::Matrix4d::Zero();
  v(0, 0) = v(1, 1) = a;
  v(2, 2) = v(3, 3) = b;
  v(0, 2) = v(2, 0) = c;
  v(1, 3) = v(3, 1) = -c;
  return v;
}

/// Moduli of the eigenvalues of Omega V, largest first; each appears twice.
inline std::array<double, 2> symplectic_spectrum(const Eigen::Matrix4d& v) {
  Eigen::Matrix4d omega = Eigen::Matrix4d::Zero();
  omega(0, 1) = omega(2, 3) = 1.0;
  omega(1, 0) = omega(3, 2) = -1.0;
  Eigen::EigenSolver<Eigen::Matrix4d> solver(omega * v, false);
  std::array<double, 4> mod{};
  for (int i = 0; i < 4; ++i) mod[i] = std::abs(solver.eigenvalues()[i]);
  std::sort(mod.begin(), mod.end(), [](double x, double y) { return x > y; });
  return {0.5 * (mod[0] + mod[1]), 0.5 * (mod[2] + mod[3])};
}

/// Transmitter block conditioned on the receiver measurement: homodyne of
/// the first quadrature or heterodyne.
inline Eigen::Matrix2d conditional_block(const Eigen::Matrix4d& v, bool heterodyne) {
  const Eigen::Matrix2d va = v.topLeftCorner<2, 2>();
  const Eigen::Matrix2d vb = v.bottomRightCorner<2, 2>();
  const Eigen::Matrix2d cab = v.topRightCorner<2, 2>();
  if (heterodyne) return va - cab * (vb + Eigen::Matrix2d::Identity()).inverse() * cab.transpose();
  Eigen::Matrix2d proj = Eigen::Matrix2d::Zero();
  proj(0, 0) = 1.0 / vb(0, 0);
  return va - cab * proj * cab.transpose();
}

}  // namespace fso::reference
