#include "lazywalk/lindblad.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace lazywalk {

namespace {

// Multiply every coin-off-diagonal entry (i % 3 != j % 3) by factor.
void scale_coin_offdiagonal(Eigen::MatrixXcd& m, double factor) {
  const Eigen::Index d = m.rows();
  for (Eigen::Index j = 0; j < d; ++j) {
    Complex* col = m.col(j).data();
    const int bj = static_cast<int>(j % 3);
    int bi = 0;
    for (Eigen::Index i = 0; i < d; ++i) {
      if (bi != bj) col[i] *= factor;
      bi = (bi == 2) ? 0 : bi + 1;
    }
  }
}

// Multiply everything outside the 3x3 site-diagonal blocks by factor.
void scale_spatial_offdiagonal(Eigen::MatrixXcd& m, double factor) {
  const Eigen::Index n = m.rows() / 3;
  std::vector<Matrix3> diag(static_cast<size_t>(n));
  for (Eigen::Index s = 0; s < n; ++s) diag[s] = m.block<3, 3>(3 * s, 3 * s);
  m *= factor;
  for (Eigen::Index s = 0; s < n; ++s) m.block<3, 3>(3 * s, 3 * s) = diag[s];
}

void check_steps(const LatticeGrid& grid, int steps, bool enforce) {
  if (steps < 0) throw std::invalid_argument("steps must be non-negative");
  if (grid.n_sites % 2 == 0)
    throw std::invalid_argument("walk evolution requires an odd lattice");
  if (enforce && grid.n_sites < 2 * steps + 3)
    throw std::invalid_argument("light-cone guard: need n_sites >= 2*steps + 3");
}

}  // namespace

NoiseChannel::NoiseChannel(ChannelKind k, double g, MapForm f) : kind(k), gamma(g), form(f) {
  if (!std::isfinite(g) || g < 0.0 || g > 1.0)
    throw std::invalid_argument("NoiseChannel: gamma must be in [0, 1]");
}

double DensityOperator::hermiticity_defect() const {
  return (rho - rho.adjoint()).cwiseAbs().maxCoeff();
}

double DensityOperator::min_eigenvalue() const {
  const Eigen::MatrixXcd herm = ((rho + rho.adjoint()) / 2.0).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

DensityOperator from_pure(const PureState& psi) {
  const int n = psi.grid.n_sites;
  Eigen::VectorXcd v(3 * n);
  for (int s = 0; s < n; ++s)
    for (int c = 0; c < 3; ++c) v(3 * s + c) = psi.amp(c, s);
  return DensityOperator{psi.grid, v * v.adjoint()};
}

DensityOperator maximally_mixed(const LatticeGrid& grid) {
  const int d = 3 * grid.n_sites;
  return DensityOperator{grid, Eigen::MatrixXcd::Identity(d, d) / static_cast<double>(d)};
}

Matrix3 coin_projector(int j) {
  if (j < 0 || j > 2) throw std::invalid_argument("coin_projector: index in 0..2");
  Matrix3 p = Matrix3::Zero();
  p(j, j) = 1.0;
  return p;
}

Eigen::MatrixXcd spatial_projector(const LatticeGrid& grid, int site) {
  if (site < 0 || site >= grid.n_sites)
    throw std::invalid_argument("spatial_projector: site out of range");
  const int d = 3 * grid.n_sites;
  Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(d, d);
  for (int c = 0; c < 3; ++c) p(3 * site + c, 3 * site + c) = 1.0;
  return p;
}

Eigen::MatrixXcd dense_walk_unitary(const LatticeGrid& grid, const Matrix3& coin) {
  const int n = grid.n_sites;
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(3 * n, 3 * n);
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < 3; ++a) {
      const int sp = (s + kCoinVelocity[a] + n) % n;
      for (int b = 0; b < 3; ++b) u(3 * sp + a, 3 * s + b) = coin(a, b);
    }
  return u;
}

void conjugate_by_walk(DensityOperator& rho, const Matrix3& coin) {
  const int n = rho.grid.n_sites;
  const int d = 3 * n;
  Eigen::MatrixXcd& m = rho.rho;
  for (int s = 0; s < n; ++s)
    m.middleRows(3 * s, 3) = (coin * m.middleRows(3 * s, 3)).eval();
  const Matrix3 cdag = coin.adjoint();
  for (int s = 0; s < n; ++s)
    m.middleCols(3 * s, 3) = (m.middleCols(3 * s, 3) * cdag).eval();

  // Shift permutation: flat index 3s + c goes to 3(s + v_c) + c.
  std::vector<int> to(static_cast<size_t>(d));
  for (int s = 0; s < n; ++s)
    for (int c = 0; c < 3; ++c)
      to[3 * s + c] = 3 * ((s + kCoinVelocity[c] + n) % n) + c;
  Eigen::MatrixXcd tmp(d, d);
  for (int i = 0; i < d; ++i) tmp.row(to[i]) = m.row(i);
  for (int j = 0; j < d; ++j) m.col(to[j]) = tmp.col(j);
}

void project_coin_diagonal(Eigen::MatrixXcd& m) { scale_coin_offdiagonal(m, 0.0); }

void project_spatial_diagonal(Eigen::MatrixXcd& m) { scale_spatial_offdiagonal(m, 0.0); }

void lindblad_step(DensityOperator& rho, const Matrix3& coin, const NoiseChannel& channel) {
  if (channel.kind == ChannelKind::none || channel.gamma == 0.0) {
    conjugate_by_walk(rho, coin);
    return;
  }
  if (channel.form == MapForm::kraus) {
    // rho' = (1-g) U rho U+ + g sum_j P_j U rho U+ P_j: conjugate, then scale
    // the projector-off-diagonal part by (1-g).
    conjugate_by_walk(rho, coin);
    if (channel.kind == ChannelKind::coin)
      scale_coin_offdiagonal(rho.rho, 1.0 - channel.gamma);
    else
      scale_spatial_offdiagonal(rho.rho, 1.0 - channel.gamma);
  } else {
    // rho' = U rho U+ + g (Pi[U rho U+] - rho); sum_j L_j+ L_j = I collapses
    // the anticommutator to rho itself.
    const Eigen::MatrixXcd old = rho.rho;
    conjugate_by_walk(rho, coin);
    Eigen::MatrixXcd projected = rho.rho;
    if (channel.kind == ChannelKind::coin)
      project_coin_diagonal(projected);
    else
      project_spatial_diagonal(projected);
    rho.rho += channel.gamma * (projected - old);
  }
}

void evolve_open(DensityOperator& rho, const CoinSpec& coin, const NoiseChannel& channel,
                 int steps, const OpenEvolveOptions& opts) {
  check_steps(rho.grid, steps, opts.enforce_light_cone);
  const Matrix3 c = coin_matrix(coin);
  if (opts.observer && opts.observe_every > 0) opts.observer(0, rho);
  for (int s = 1; s <= steps; ++s) {
    lindblad_step(rho, c, channel);
    if (opts.monitor_positivity) {
      const double lo = rho.min_eigenvalue();
      if (lo < -1e-8)
        throw std::runtime_error("evolve_open: positivity violated (min eigenvalue " +
                                 std::to_string(lo) + ")");
    }
    if (opts.observer && opts.observe_every > 0 &&
        (s % opts.observe_every == 0 || s == steps))
      opts.observer(s, rho);
  }
}

Matrix3 reduced_coin_state(const DensityOperator& rho) {
  Matrix3 red = Matrix3::Zero();
  for (int s = 0; s < rho.grid.n_sites; ++s) red += rho.site_block(s, s);
  return red;
}

ProbabilityDistribution probability(const DensityOperator& rho) {
  const int n = rho.grid.n_sites;
  ProbabilityDistribution p;
  p.spacing = rho.grid.spacing;
  p.x.resize(n);
  p.p.resize(n);
  for (int s = 0; s < n; ++s) {
    p.x[s] = rho.grid.position(s);
    p.p[s] = rho.rho(3 * s, 3 * s).real() + rho.rho(3 * s + 1, 3 * s + 1).real() +
             rho.rho(3 * s + 2, 3 * s + 2).real();
  }
  return p;
}

}  // namespace lazywalk
