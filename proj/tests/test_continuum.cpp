#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "lazywalk/continuum.hpp"

using namespace lazywalk;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;

namespace {

constexpr Complex kI{0.0, 1.0};

// Independent oracle: dense matrix exponential by scaling-and-squaring plus a
// truncated Taylor series.  Good to ~1e-14 for the sizes used here.
MatrixXcd expm_dense(MatrixXcd a) {
  int squarings = 0;
  while (a.norm() > 0.25) {
    a *= 0.5;
    ++squarings;
  }
  MatrixXcd result = MatrixXcd::Identity(a.rows(), a.cols());
  MatrixXcd term = result;
  for (int k = 1; k <= 30; ++k) {
    term = (term * a / static_cast<double>(k)).eval();
    result += term;
  }
  for (int s = 0; s < squarings; ++s) result = (result * result).eval();
  return result;
}

MatrixXcd kron(const MatrixXcd& a, const MatrixXcd& b) {
  MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Test-side Hamiltonian, built from scratch rather than via h_phys.
Matrix3 h_oracle(double k, double th) {
  Matrix3 jz = Matrix3::Zero();
  jz(0, 0) = 1.0;
  jz(2, 2) = -1.0;
  const Matrix3 g = Matrix3::Identity() - Matrix3::Constant(1.0 / 3.0);
  return k * jz + th * g;
}

Matrix3 random_block(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix3 b;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) b(i, j) = Complex(u(rng), u(rng));
  return b;
}

double max_plane_abs(const TwoPointKernel& k) {
  double m = 0.0;
  for (const auto& plane : k.comp) m = std::max(m, plane.cwiseAbs().maxCoeff());
  return m;
}

// Forward DFT matching the library convention: tilde(m) = sum_j e^{+2pi i mj/n} f_j.
std::vector<Complex> dft_forward(const std::vector<Complex>& f) {
  const int n = static_cast<int>(f.size());
  std::vector<Complex> out(n);
  for (int m = 0; m < n; ++m) {
    Complex acc = 0.0;
    for (int j = 0; j < n; ++j)
      acc += std::exp(kI * (2.0 * std::numbers::pi * m * j / n)) * f[j];
    out[m] = acc;
  }
  return out;
}

std::vector<Complex> dft_inverse(const std::vector<Complex>& f) {
  const int n = static_cast<int>(f.size());
  std::vector<Complex> out(n);
  for (int j = 0; j < n; ++j) {
    Complex acc = 0.0;
    for (int m = 0; m < n; ++m)
      acc += std::exp(-kI * (2.0 * std::numbers::pi * m * j / n)) * f[m];
    out[j] = acc / static_cast<double>(n);
  }
  return out;
}

// Kernel whose planes are a single Fourier mode pair plus its conjugate:
// rho(x,x') = e^{-i k1 x} B e^{+i k2 x'} + e^{-i k2 x} B^dag e^{+i k1 x'}.
TwoPointKernel mode_pair_kernel(const LatticeGrid& grid, double k1, double k2,
                                const Matrix3& b) {
  const int n = grid.n_sites;
  TwoPointKernel k;
  k.grid = grid;
  const Matrix3 bd = b.adjoint();
  VectorXcd e1(n), e2(n);
  for (int j = 0; j < n; ++j) {
    e1(j) = std::exp(-kI * (k1 * grid.position(j)));
    e2(j) = std::exp(-kI * (k2 * grid.position(j)));
  }
  const MatrixXcd m12 = e1 * e2.adjoint();  // (j,j') -> e^{-i k1 x} e^{+i k2 x'}
  const MatrixXcd m21 = e2 * e1.adjoint();
  for (int a = 0; a < 3; ++a)
    for (int c = 0; c < 3; ++c) k.comp[3 * a + c] = b(a, c) * m12 + bd(a, c) * m21;
  return k;
}

}  // namespace

TEST_CASE("continuum grid factory admits even sizes, walk evolution does not") {
  const LatticeGrid g = LatticeGrid::continuum(64, 0.05);
  CHECK(g.n_sites == 64);
  CHECK(g.spacing == 0.05);
  CHECK_THROWS_AS(LatticeGrid(64, 0.05), std::invalid_argument);
  CHECK_THROWS_AS(LatticeGrid::continuum(2, 0.05), std::invalid_argument);
  CHECK_THROWS_AS(LatticeGrid::continuum(9, -1.0), std::invalid_argument);

  PureState psi = gaussian_state(g, 0.4, Vector3(0, 0, 1));
  CHECK_THROWS_AS(evolve_unitary(psi, CoinSpec::grover(), 1), std::invalid_argument);
}

TEST_CASE("gaussian kernel: trace, purity, hermiticity, resolution guard") {
  const LatticeGrid grid(129, 1.0 / 32.0);
  const TwoPointKernel k = kernel_init_gaussian(grid, 0.25, fourier_symmetric_coin());

  CHECK(std::abs(k.integrated_trace() - 1.0) < 1e-12);
  CHECK(std::abs(k.purity() - 1.0) < 1e-12);
  CHECK(k.conjugate_defect() < 1e-15);

  const int c = grid.center();
  const Matrix3 blk = k.block(c, c);
  CHECK((blk - blk.adjoint()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(std::abs(std::imag(blk.trace())) < 1e-16);

  // sigma < 4h is under-resolved
  CHECK_THROWS_AS(kernel_init_gaussian(grid, 0.1, fourier_symmetric_coin()),
                  std::invalid_argument);

  const ProbabilityDistribution p = field_probability(k);
  double total = 0.0;
  for (double v : p.p) total += v;
  CHECK(std::abs(total - 1.0) < 1e-14);
  CHECK(p.spacing == grid.spacing);
}

TEST_CASE("kernel_from_pure matches the direct outer product") {
  const LatticeGrid grid(5, 0.5);
  const PureState psi = gaussian_state(grid, 2.0, fourier_symmetric_coin());
  const TwoPointKernel k = kernel_from_pure(psi);
  double worst = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int x = 0; x < 5; ++x)
        for (int xp = 0; xp < 5; ++xp) {
          const Complex want = psi.amp(a, x) * std::conj(psi.amp(b, xp)) / grid.spacing;
          worst = std::max(worst, std::abs(k.comp[3 * a + b](x, xp) - want));
        }
  CHECK(worst < 1e-16);
}

TEST_CASE("stability bound follows the documented formula") {
  const LatticeGrid grid(65, 1.0 / 16.0);
  ContinuumParams p;
  p.theta_bar = 1.0;
  p.gamma_bar = 0.5;
  const double h = grid.spacing;
  const double want =
      std::min(0.5 * h, 1.0 / (4.0 * (p.gamma_bar + p.theta_bar + std::numbers::pi / h)));
  CHECK(stability_dt(grid, p) == doctest::Approx(want).epsilon(1e-15));
}

TEST_CASE("dirac evolution with theta=0 is an exact translation") {
  const LatticeGrid grid(129, 1.0 / 32.0);
  const double t = 1.0;  // exactly 32 cells
  const int cells = 32;
  const int n = grid.n_sites;

  SUBCASE("right-mover") {
    const PureState psi0 = gaussian_state(grid, 0.25, Vector3(0, 0, 1));
    const PureState out = dirac_solve(psi0, 0.0, t);
    double worst = 0.0;
    for (int j = 0; j < n; ++j) {
      const int src = (j - cells + n) % n;
      worst = std::max(worst, std::abs(out.amp(kCoinR, j) - psi0.amp(kCoinR, src)));
    }
    CHECK(worst < 1e-12);
    CHECK(out.amp.row(kCoinL).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(out.amp.row(kCoinS).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(std::abs(out.norm() - 1.0) < 1e-12);
  }

  SUBCASE("left-mover") {
    const PureState psi0 = gaussian_state(grid, 0.25, Vector3(1, 0, 0));
    const PureState out = dirac_solve(psi0, 0.0, t);
    double worst = 0.0;
    for (int j = 0; j < n; ++j) {
      const int src = (j + cells) % n;
      worst = std::max(worst, std::abs(out.amp(kCoinL, j) - psi0.amp(kCoinL, src)));
    }
    CHECK(worst < 1e-12);
  }

  SUBCASE("stationary component") {
    const PureState psi0 = gaussian_state(grid, 0.25, Vector3(0, 1, 0));
    const PureState out = dirac_solve(psi0, 0.0, t);
    CHECK((out.amp - psi0.amp).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("dirac evolution matches a per-mode matrix exponential oracle") {
  const LatticeGrid grid(65, 0.1);
  const int n = grid.n_sites;
  const double th = 1.3;
  const double t = 0.7;
  const PureState psi0 = gaussian_state(grid, 0.4, fourier_symmetric_coin());
  const PureState got = dirac_solve(psi0, th, t);

  // Oracle: hand DFT of each coin row, exact expm per mode, hand inverse DFT.
  std::array<std::vector<Complex>, 3> tilde;
  for (int c = 0; c < 3; ++c) {
    std::vector<Complex> row(n);
    for (int j = 0; j < n; ++j) row[j] = psi0.amp(c, j);
    tilde[c] = dft_forward(row);
  }
  for (int m = 0; m < n; ++m) {
    const MatrixXcd prop = expm_dense(-kI * t * h_oracle(grid.momentum(m), th));
    Vector3 v(tilde[0][m], tilde[1][m], tilde[2][m]);
    v = (prop * v).eval();
    for (int c = 0; c < 3; ++c) tilde[c][m] = v(c);
  }
  double worst = 0.0;
  for (int c = 0; c < 3; ++c) {
    const std::vector<Complex> row = dft_inverse(tilde[c]);
    for (int j = 0; j < n; ++j) worst = std::max(worst, std::abs(got.amp(c, j) - row[j]));
  }
  CHECK(worst < 1e-10);
  CHECK(std::abs(got.norm() - 1.0) < 1e-12);
}

TEST_CASE("mode_solve_coin matches a directly exponentiated superoperator") {
  std::mt19937 rng(7001u);
  const Matrix3 b0 = random_block(rng);

  struct Case {
    double k, kp, th, gm, t;
  };
  const Case cases[] = {
      {0.8, -1.7, 0.9, 0.6, 1.1},
      {0.0, 0.0, 2.0, 0.0, 0.35},
      {1.2, 1.2, 0.0, 1.0, 2.0},
      {-2.3, 0.4, 1.7, 0.25, 0.8},
  };
  for (const Case& c : cases) {
    CAPTURE(c.k);
    CAPTURE(c.kp);
    const MatrixXcd h1 = h_oracle(c.k, c.th);
    const MatrixXcd h2 = h_oracle(c.kp, c.th);
    const MatrixXcd i3 = MatrixXcd::Identity(3, 3);
    MatrixXcd sup = -kI * (kron(i3, h1) - kron(h2.transpose(), i3));
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        if (a != b) sup(a + 3 * b, a + 3 * b) -= c.gm;
    const MatrixXcd prop = expm_dense(sup * c.t);
    VectorXcd v(9);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) v(a + 3 * b) = b0(a, b);
    v = (prop * v).eval();
    Matrix3 want;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) want(a, b) = v(a + 3 * b);

    const Matrix3 got = mode_solve_coin(b0, c.k, c.kp, c.th, c.gm, c.t);
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
  }

  // Closed case k == k', gamma = 0 is a plain conjugation.
  const double k = 1.4, th = 0.6, t = 0.9;
  const MatrixXcd prop3 = expm_dense(-kI * t * h_oracle(k, th));
  const Matrix3 want = (prop3 * b0 * prop3.adjoint()).eval();
  const Matrix3 got = mode_solve_coin(b0, k, k, th, 0.0, t);
  CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dissipator fixed points and action") {
  const LatticeGrid grid(7, 0.5);
  std::mt19937 rng(42u);
  std::uniform_real_distribution<double> u(-1.0, 1.0);

  TwoPointKernel random_k;
  random_k.grid = grid;
  for (auto& plane : random_k.comp) {
    plane.resize(7, 7);
    for (int i = 0; i < 7; ++i)
      for (int j = 0; j < 7; ++j) plane(i, j) = Complex(u(rng), u(rng));
  }

  SUBCASE("none channel vanishes") {
    CHECK(max_plane_abs(dissipator(random_k, ChannelKind::none)) == 0.0);
  }

  SUBCASE("coin-diagonal kernels are fixed points of the coin channel") {
    TwoPointKernel k = random_k;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        if (a != b) k.comp[3 * a + b].setZero();
    CHECK(max_plane_abs(dissipator(k, ChannelKind::coin)) == 0.0);
  }

  SUBCASE("spatially diagonal kernels are fixed points of the spatial channel") {
    TwoPointKernel k = random_k;
    for (auto& plane : k.comp) {
      MatrixXcd d = plane.diagonal().asDiagonal();
      plane = d;
    }
    CHECK(max_plane_abs(dissipator(k, ChannelKind::spatial)) == 0.0);
  }

  SUBCASE("coin channel keeps off-diagonal planes verbatim, kills diagonal ones") {
    const TwoPointKernel d = dissipator(random_k, ChannelKind::coin);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        if (a == b) {
          CHECK(d.comp[3 * a + b].cwiseAbs().maxCoeff() == 0.0);
        } else {
          CHECK((d.comp[3 * a + b] - random_k.comp[3 * a + b]).cwiseAbs().maxCoeff() == 0.0);
        }
      }
  }

  SUBCASE("spatial channel zeroes exactly the matrix diagonals") {
    const TwoPointKernel d = dissipator(random_k, ChannelKind::spatial);
    for (int p = 0; p < 9; ++p) {
      CHECK(d.comp[p].diagonal().cwiseAbs().maxCoeff() == 0.0);
      MatrixXcd off = random_k.comp[p];
      off.diagonal().setZero();
      CHECK((d.comp[p] - off).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("RK4 kernel stepping converges at fourth order to the mode solution") {
  const LatticeGrid grid(31, 0.2);
  const double k1 = grid.momentum(3);
  const double k2 = grid.momentum(31 - 5);  // alias -5
  std::mt19937 rng(90210u);
  const Matrix3 b0 = random_block(rng);

  ContinuumParams p;
  p.theta_bar = 0.8;
  p.gamma_bar = 0.5;
  p.channel = ChannelKind::coin;
  const double t_final = 0.4;

  // Exact endpoint: each mode pair evolves independently.
  const Matrix3 bt = mode_solve_coin(b0, k1, k2, p.theta_bar, p.gamma_bar, t_final);
  const TwoPointKernel exact = mode_pair_kernel(grid, k1, k2, bt);
  {
    // Consistency of the conjugate pair: building from B^dag with swapped
    // momenta must reproduce the same kernel.
    const Matrix3 btd =
        mode_solve_coin(b0.adjoint(), k2, k1, p.theta_bar, p.gamma_bar, t_final);
    CHECK((btd - bt.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
  }

  std::vector<double> errs;
  for (const double dt : {0.04, 0.02, 0.01}) {
    TwoPointKernel k = mode_pair_kernel(grid, k1, k2, b0);
    KernelSolveOptions opts;
    opts.dt = dt;
    opts.force_dt = true;
    const KernelRunInfo info = kernel_solve(k, p, t_final, opts);
    CHECK(info.steps == static_cast<int>(std::lround(t_final / dt)));
    double err = 0.0;
    for (int plane = 0; plane < 9; ++plane)
      err = std::max(err, (k.comp[plane] - exact.comp[plane]).cwiseAbs().maxCoeff());
    errs.push_back(err);
  }
  const double order21 = std::log2(errs[0] / errs[1]);
  const double order32 = std::log2(errs[1] / errs[2]);
  CAPTURE(errs[0]);
  CAPTURE(errs[1]);
  CAPTURE(errs[2]);
  CHECK(order21 > 3.7);
  CHECK(order21 < 4.3);
  CHECK(order32 > 3.7);
  CHECK(order32 < 4.3);
  CHECK(errs[2] < 1e-5);
}

TEST_CASE("kernel_step twice equals kernel_solve over the same interval") {
  const LatticeGrid grid(31, 0.2);
  const double k1 = grid.momentum(2);
  const double k2 = grid.momentum(31 - 4);
  std::mt19937 rng(515u);
  const Matrix3 b0 = random_block(rng);
  ContinuumParams p;
  p.theta_bar = 0.3;
  p.gamma_bar = 0.7;
  p.channel = ChannelKind::coin;

  const double dt = 0.015625;  // 2^-6
  TwoPointKernel a = mode_pair_kernel(grid, k1, k2, b0);
  kernel_step(a, p, dt);
  kernel_step(a, p, dt);

  TwoPointKernel b = mode_pair_kernel(grid, k1, k2, b0);
  KernelSolveOptions opts;
  opts.dt = dt;
  opts.force_dt = true;
  kernel_solve(b, p, 2.0 * dt, opts);

  double worst = 0.0;
  for (int plane = 0; plane < 9; ++plane)
    worst = std::max(worst, (a.comp[plane] - b.comp[plane]).cwiseAbs().maxCoeff());
  CHECK(worst == 0.0);
}

TEST_CASE("closed kernel dynamics track the dirac solver") {
  const LatticeGrid grid(65, 1.0 / 16.0);
  const double sigma = 0.25;
  const double t = 0.25;
  const Vector3 coin = fourier_symmetric_coin();

  ContinuumParams p;
  p.theta_bar = 1.0;

  TwoPointKernel k = kernel_init_gaussian(grid, sigma, coin);
  KernelSolveOptions opts;
  opts.dt = 0.5 * stability_dt(grid, p);
  const KernelRunInfo info = kernel_solve(k, p, t, opts);
  CHECK(info.trace_drift < 1e-10);
  CHECK(info.conjugate_defect < 1e-10);
  CHECK(std::abs(k.purity() - 1.0) < 1e-6);

  const PureState psit = dirac_solve(gaussian_state(grid, sigma, coin), p.theta_bar, t);
  const TwoPointKernel exact = kernel_from_pure(psit);
  double worst = 0.0;
  for (int plane = 0; plane < 9; ++plane)
    worst = std::max(worst, (k.comp[plane] - exact.comp[plane]).cwiseAbs().maxCoeff());
  CHECK(worst < 1e-6);

  const ProbabilityDistribution pk = field_probability(k);
  const ProbabilityDistribution pe = field_probability(exact);
  double l2 = 0.0;
  for (int j = 0; j < grid.n_sites; ++j) l2 += (pk.p[j] - pe.p[j]) * (pk.p[j] - pe.p[j]);
  CHECK(std::sqrt(l2) < 1e-6);
}

TEST_CASE("coin dephasing damps block coherences at rate gamma, diagonals frozen") {
  const LatticeGrid grid(33, 0.25);
  const int n = grid.n_sites;
  const double h = grid.spacing;
  const Vector3 v = fourier_symmetric_coin();
  const Matrix3 b0 = (v * v.adjoint()) / (h * n);

  TwoPointKernel k;
  k.grid = grid;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) k.comp[3 * a + b] = MatrixXcd::Constant(n, n, b0(a, b));
  CHECK(std::abs(k.integrated_trace() - 1.0) < 1e-13);

  ContinuumParams p;
  p.theta_bar = 0.0;
  p.gamma_bar = 0.8;
  p.channel = ChannelKind::coin;
  const double t = 1.0;
  const KernelRunInfo info = kernel_solve(k, p, t);
  CHECK(info.trace_drift < 1e-12);

  const double decay = std::exp(-p.gamma_bar * t);
  const Matrix3 blk = k.block(5, 29);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      if (a == b) {
        CHECK(std::abs(blk(a, b) - b0(a, b)) < 1e-12);
      } else {
        CHECK(std::abs(blk(a, b) - decay * b0(a, b)) < 1e-8 * std::abs(decay * b0(a, b)));
      }
    }
}

TEST_CASE("spatial dephasing freezes diagonal blocks, damps separated ones") {
  // Coin-diagonal homogeneous kernel: every active plane has equal left and
  // right velocities, so the diagonal ridge that dephasing builds up is
  // translation-invariant along the diagonal and advection never touches it.
  // The solution is exactly c e^{-gm t} + c (1 - e^{-gm t}) delta_{xx'}.
  const LatticeGrid grid(33, 0.25);
  const int n = grid.n_sites;
  const double h = grid.spacing;
  Matrix3 b0 = Matrix3::Zero();
  b0(0, 0) = 0.5 / (h * n);
  b0(1, 1) = 0.3 / (h * n);
  b0(2, 2) = 0.2 / (h * n);

  TwoPointKernel k;
  k.grid = grid;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) k.comp[3 * a + b] = MatrixXcd::Constant(n, n, b0(a, b));
  CHECK(std::abs(k.integrated_trace() - 1.0) < 1e-13);

  ContinuumParams p;
  p.theta_bar = 0.0;
  p.gamma_bar = 0.7;
  p.channel = ChannelKind::spatial;
  const double t = 1.0;
  const KernelRunInfo info = kernel_solve(k, p, t);
  CHECK(info.trace_drift < 1e-12);
  CHECK(info.conjugate_defect < 1e-12);

  const double decay = std::exp(-p.gamma_bar * t);
  const Matrix3 frozen = k.block(12, 12);
  CHECK((frozen - b0).cwiseAbs().maxCoeff() < 1e-10);

  const Matrix3 damped = k.block(3, 20);
  CHECK((damped - decay * b0).cwiseAbs().maxCoeff() < 1e-8 * decay * b0.cwiseAbs().maxCoeff());

  // Coin-off-diagonal planes start empty and stay empty.
  CHECK(k.comp[1].cwiseAbs().maxCoeff() < 1e-14);
  CHECK(k.comp[5].cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("probability obeys the continuity law with the advection sign") {
  const LatticeGrid grid(65, 1.0 / 16.0);
  const int n = grid.n_sites;
  const Vector3 coin = fourier_symmetric_coin();
  ContinuumParams p;
  p.theta_bar = 1.0;
  p.gamma_bar = 0.8;
  p.channel = ChannelKind::coin;

  const double t0 = 0.2;
  const double delta = 1e-3;

  auto run_to = [&](double t) {
    TwoPointKernel k = kernel_init_gaussian(grid, 0.25, coin);
    kernel_solve(k, p, t);
    return k;
  };
  const TwoPointKernel km = run_to(t0 - 0.5 * delta);
  const TwoPointKernel k0 = run_to(t0);
  const TwoPointKernel kp = run_to(t0 + 0.5 * delta);

  // flux(x) = Tr(J_z rho(x,x)); law: d/dt p(x) = + h d/dx flux(x)
  std::vector<Complex> flux(n);
  for (int j = 0; j < n; ++j) {
    const Matrix3 blk = k0.block(j, j);
    flux[j] = blk(0, 0) - blk(2, 2);
  }
  std::vector<Complex> tilde = dft_forward(flux);
  for (int m = 0; m < n; ++m) tilde[m] *= -kI * grid.momentum(m);
  const std::vector<Complex> dflux = dft_inverse(tilde);

  double worst = 0.0;
  double scale = 0.0;
  const double h = grid.spacing;
  for (int j = 0; j < n; ++j) {
    const double pm = h * km.block(j, j).trace().real();
    const double pp = h * kp.block(j, j).trace().real();
    const double fd = (pp - pm) / delta;
    const double law = h * std::real(dflux[j]);
    worst = std::max(worst, std::abs(fd - law));
    scale = std::max(scale, std::abs(law));
  }
  CHECK(scale > 1e-4);  // the law side must be non-trivial
  CHECK(worst < 1e-3 * scale);
}

TEST_CASE("kernel solver on an even grid conserves trace") {
  const LatticeGrid grid = LatticeGrid::continuum(64, 1.0 / 16.0);
  TwoPointKernel k = kernel_init_gaussian(grid, 0.25, fourier_symmetric_coin());
  ContinuumParams p;
  p.theta_bar = 1.0;
  const KernelRunInfo info = kernel_solve(k, p, 0.1);
  CHECK(info.trace_drift < 1e-10);
  CHECK(info.conjugate_defect < 1e-10);
}

TEST_CASE("solver guards and observer cadence") {
  const LatticeGrid grid(31, 0.2);
  const Vector3 coin = fourier_symmetric_coin();

  SUBCASE("negative time or parameters are rejected") {
    TwoPointKernel k = kernel_init_gaussian(grid, 0.8, coin);
    ContinuumParams p;
    CHECK_THROWS_AS(kernel_solve(k, p, -1.0), std::invalid_argument);
    p.theta_bar = -0.5;
    CHECK_THROWS_AS(kernel_solve(k, p, 1.0), std::invalid_argument);
    p.theta_bar = 0.0;
    p.gamma_bar = -2.0;
    CHECK_THROWS_AS(kernel_solve(k, p, 1.0), std::invalid_argument);
  }

  SUBCASE("mis-shaped planes are rejected") {
    TwoPointKernel k = kernel_init_gaussian(grid, 0.8, coin);
    k.comp[4].resize(3, 3);
    ContinuumParams p;
    CHECK_THROWS_AS(kernel_solve(k, p, 0.1), std::invalid_argument);
  }

  SUBCASE("forced unstable step size triggers the divergence guard") {
    TwoPointKernel k = kernel_init_gaussian(grid, 0.8, coin);
    ContinuumParams p;
    KernelSolveOptions opts;
    opts.dt = 1.0;
    opts.force_dt = true;
    CHECK_THROWS_AS(kernel_solve(k, p, 60.0, opts), std::runtime_error);
  }

  SUBCASE("unforced dt is clamped to the stability bound") {
    TwoPointKernel k = kernel_init_gaussian(grid, 0.8, coin);
    ContinuumParams p;
    KernelSolveOptions opts;
    opts.dt = 1.0;  // way above the bound; must be clamped, not diverge
    const KernelRunInfo info = kernel_solve(k, p, 0.5, opts);
    CHECK(info.dt <= stability_dt(grid, p) * (1.0 + 1e-12));
    CHECK(info.trace_drift < 1e-10);
  }

  SUBCASE("observer sees t=0, the cadence, and the final step") {
    TwoPointKernel k = kernel_init_gaussian(grid, 0.8, coin);
    ContinuumParams p;
    KernelSolveOptions opts;
    opts.dt = 0.01;
    opts.force_dt = true;
    opts.observe_every = 4;
    std::vector<double> seen;
    opts.observer = [&seen](double t, const TwoPointKernel&) { seen.push_back(t); };
    kernel_solve(k, p, 0.1, opts);
    REQUIRE(seen.size() == 4);
    CHECK(seen[0] == doctest::Approx(0.0));
    CHECK(seen[1] == doctest::Approx(0.04));
    CHECK(seen[2] == doctest::Approx(0.08));
    CHECK(seen[3] == doctest::Approx(0.1));
  }
}
