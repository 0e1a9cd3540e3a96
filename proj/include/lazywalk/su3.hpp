#pragma once
// SU(3) coin algebra for the three-state lazy walk: Gell-Mann basis,
// Grover-family coins C(theta) = exp(-i theta G), and the walk generators
// J_z, G that enter the continuum Hamiltonian H(k) = k J_z + theta G.
//
// Conventions (fixed project-wide):
//   * coin basis ordering (L, S, R)
//   * J_z = diag(+1, 0, -1), i.e. the +1 eigenvector is |L>, so that
//     S(k) = exp(-i dx k J_z) = diag(e^{-ik dx}, 1, e^{+ik dx})
//   * forward Fourier transform uses e^{+ikx}; with that convention |R>
//     wave packets propagate toward +x.

#include <Eigen/Dense>

#include <array>
#include <complex>

namespace lazywalk {

using Complex = std::complex<double>;
using Matrix3 = Eigen::Matrix3cd;
using Vector3 = Eigen::Vector3cd;

inline constexpr int kCoinL = 0;
inline constexpr int kCoinS = 1;
inline constexpr int kCoinR = 2;

// Signed shift velocity per coin component, in units of dx per step.
inline constexpr std::array<int, 3> kCoinVelocity{-1, 0, +1};

// Standard Gell-Mann matrices lambda_1..lambda_8, Tr(l_i l_j) = 2 delta_ij.
const Matrix3& gellmann(int i);  // i in 1..8; throws std::invalid_argument otherwise

// A = trace_part * I + (1/2) sum_i c[i-1] lambda_i with c_i = Tr(A lambda_i).
// Both fields are real (up to rounding) for Hermitian input; complex otherwise.
struct GellMannCoefficients {
  Complex trace_part{};
  std::array<Complex, 8> c{};
};

GellMannCoefficients decompose(const Matrix3& a);
Matrix3 reconstruct(const GellMannCoefficients& gm);

Matrix3 projector_u();     // |u><u| with u = (1,1,1)/sqrt(3)
Matrix3 projector_perp();  // I - |u><u|
Matrix3 generator_g();     // G = projector_perp(); G^2 = G
Matrix3 grover_coin();     // 2|u><u| - I, exact rational entries
Matrix3 coin(double theta);  // P_u + e^{-i theta} P_perp; theta is 2pi-periodic

Matrix3 jz3();  // diag(+1, 0, -1) = lambda_3 / 2 + sqrt(3)/2 lambda_8
Matrix3 h_phys(double k, double theta);  // k * J_z + theta * G

// Eigenvalues of h_phys ascending; theta == 0 is an exact diagonal read-off.
Eigen::Vector3d h_phys_eigenvalues(double k, double theta);

}  // namespace lazywalk
