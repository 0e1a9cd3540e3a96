#include "lazywalk/su3.hpp"

#include <cmath>
#include <stdexcept>

namespace lazywalk {

namespace {

constexpr Complex kI{0.0, 1.0};

std::array<Matrix3, 8> make_gellmann() {
  std::array<Matrix3, 8> l;
  for (Matrix3& m : l) m.setZero();
  l[0](0, 1) = 1.0;
  l[0](1, 0) = 1.0;
  l[1](0, 1) = -kI;
  l[1](1, 0) = kI;
  l[2](0, 0) = 1.0;
  l[2](1, 1) = -1.0;
  l[3](0, 2) = 1.0;
  l[3](2, 0) = 1.0;
  l[4](0, 2) = -kI;
  l[4](2, 0) = kI;
  l[5](1, 2) = 1.0;
  l[5](2, 1) = 1.0;
  l[6](1, 2) = -kI;
  l[6](2, 1) = kI;
  const double s3 = 1.0 / std::sqrt(3.0);
  l[7](0, 0) = s3;
  l[7](1, 1) = s3;
  l[7](2, 2) = -2.0 * s3;
  return l;
}

}  // namespace

const Matrix3& gellmann(int i) {
  static const std::array<Matrix3, 8> table = make_gellmann();
  if (i < 1 || i > 8) throw std::invalid_argument("gellmann: index must be in 1..8");
  return table[i - 1];
}

GellMannCoefficients decompose(const Matrix3& a) {
  GellMannCoefficients gm;
  gm.trace_part = a.trace() / 3.0;
  for (int i = 1; i <= 8; ++i) gm.c[i - 1] = (a * gellmann(i)).trace();
  return gm;
}

Matrix3 reconstruct(const GellMannCoefficients& gm) {
  Matrix3 a = gm.trace_part * Matrix3::Identity();
  for (int i = 1; i <= 8; ++i) a += 0.5 * gm.c[i - 1] * gellmann(i);
  return a;
}

Matrix3 projector_u() { return Matrix3::Constant(1.0 / 3.0); }

Matrix3 projector_perp() { return Matrix3::Identity() - projector_u(); }

Matrix3 generator_g() { return projector_perp(); }

Matrix3 grover_coin() {
  Matrix3 c = Matrix3::Constant(2.0 / 3.0);
  c.diagonal().setConstant(-1.0 / 3.0);
  return c;
}

Matrix3 coin(double theta) {
  if (!std::isfinite(theta)) throw std::invalid_argument("coin: theta must be finite");
  // P_u + e^{-i theta} P_perp, written entrywise so coin(0) == I exactly.
  const Complex z = std::exp(-kI * theta);
  Matrix3 c = Matrix3::Constant(1.0 / 3.0 - z / 3.0);
  c.diagonal().setConstant(1.0 / 3.0 + z * (2.0 / 3.0));
  return c;
}

Matrix3 jz3() {
  Matrix3 j = Matrix3::Zero();
  j(kCoinL, kCoinL) = 1.0;
  j(kCoinR, kCoinR) = -1.0;
  return j;
}

Matrix3 h_phys(double k, double theta) { return k * jz3() + theta * generator_g(); }

Eigen::Vector3d h_phys_eigenvalues(double k, double theta) {
  if (theta == 0.0) {
    // Exactly diagonal: spectrum is {k, 0, -k}, sorted.
    Eigen::Vector3d e;
    e << -std::abs(k), 0.0, std::abs(k);
    return e;
  }
  Eigen::SelfAdjointEigenSolver<Matrix3> es(h_phys(k, theta));
  return es.eigenvalues();
}

}  // namespace lazywalk
