#pragma once
// Continuum limit solvers.  State is the two-point kernel rho(x, x') of 3x3
// coin blocks on a periodic grid.  Master equation (both channels):
//
//   d/dt rho(x,x') = + J_z d_x rho + (d_x' rho) J_z - i th [G, rho] - gm D[rho]
//
// with D = D_c (coin): every block loses its coin-off-diagonal part, or
// D = D_x (spatial): blocks with x != x' are damped, diagonal blocks are
// untouched.  The advection sign follows from the shift convention
// (|R> moves toward +x, J_z = diag(+1,0,-1) on (L,S,R)) together with the
// e^{+ikx} Fourier convention: in momentum space the generator per mode pair
// is -i (H(k) B - B H(k')) with H(k) = k J_z + th G, which is the transform
// of the equation above.  Probability obeys the continuity law
// d/dt Tr rho(x,x) = + d_x Tr(J_z rho(x,x)), current j = Tr(V rho), V = -J_z.
//
// kernel_step integrates with explicit RK4 and spectral (DFT) derivatives;
// dirac_solve evolves pure states exactly per momentum mode.

#include <Eigen/Dense>

#include <array>
#include <functional>

#include "lazywalk/lindblad.hpp"

namespace lazywalk {

struct ContinuumParams {
  double theta_bar = 0.0;  // coin rate, >= 0
  double gamma_bar = 0.0;  // dephasing rate, >= 0
  ChannelKind channel = ChannelKind::none;
};

// comp[3*a + b](x, x') = <x,a| rho |x',b>; row index = x, column = x'.
struct TwoPointKernel {
  LatticeGrid grid;
  std::array<Eigen::MatrixXcd, 9> comp;

  double spacing() const { return grid.spacing; }
  Matrix3 block(int x, int xp) const;
  double integrated_trace() const;  // h * sum_x Tr rho(x,x)
  double conjugate_defect() const;  // max |rho(x,x') - rho(x',x)^dag|
  double purity() const;            // h^2 sum_{x,x'} ||rho(x,x')||_F^2
};

using MatrixField = std::vector<Matrix3>;  // F(x) = rho(x,x)

// Pure product kernel psi(x) psi(x')^dag / h from a lattice-normalized state.
TwoPointKernel kernel_from_pure(const PureState& psi);
// Gaussian bell of width sigma (>= 4h, else std::invalid_argument) times a
// normalized coin vector.
TwoPointKernel kernel_init_gaussian(const LatticeGrid& grid, double sigma,
                                    const Vector3& coin_amplitudes);

// RK4 stability bound: dt <= min(h/2, 1 / (4 (gm + th + pi/h))).
double stability_dt(const LatticeGrid& grid, const ContinuumParams& p);

void kernel_step(TwoPointKernel& k, const ContinuumParams& p, double dt);

// D[rho] for the given channel (unit rate); exposed for fixed-point tests.
TwoPointKernel dissipator(const TwoPointKernel& k, ChannelKind channel);

struct KernelSolveOptions {
  double dt = 0.0;      // 0 = stability bound; else clamped to it unless force_dt
  bool force_dt = false;
  int observe_every = 0;  // in steps; observer also sees t=0 and t=t_final
  std::function<void(double, const TwoPointKernel&)> observer;
};

struct KernelRunInfo {
  int steps = 0;
  double dt = 0.0;
  double trace_drift = 0.0;      // |integrated trace - initial|
  double conjugate_defect = 0.0; // at t_final
};

KernelRunInfo kernel_solve(TwoPointKernel& k, const ContinuumParams& p, double t_final,
                           const KernelSolveOptions& opts = {});

// Exact spectral evolution of d/dt psi = -i H psi, H(k) = k J_z + th G.
PureState dirac_solve(const PureState& psi0, double theta_bar, double t_final);

// Exact single-mode solution of dB/dt = -i (H(k) B - B H(k')) - gm (B - diag B)
// via the 9x9 superoperator exponential.
Matrix3 mode_solve_coin(const Matrix3& b0, double k, double kp, double theta_bar,
                        double gamma_bar, double t);

MatrixField diagonal_field(const TwoPointKernel& k);
// P(x) = h Tr rho(x,x), normalized to unit total mass.
ProbabilityDistribution field_probability(const TwoPointKernel& k);

}  // namespace lazywalk
