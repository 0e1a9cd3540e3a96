#pragma once
// Closed-system lazy walk: pure states on an odd periodic lattice,
// one step = coin on every site followed by the conditional shift
// (L -> x-dx, S -> x, R -> x+dx).  Lattice time unit dt == dx.

#include <Eigen/Dense>

#include <functional>

#include "lazywalk/distribution.hpp"
#include "lazywalk/su3.hpp"

namespace lazywalk {

struct LatticeGrid {
  int n_sites = 3;
  double spacing = 1.0;

  LatticeGrid() = default;
  LatticeGrid(int n, double dx);  // n odd and >= 3, dx > 0
  // Continuum grids carry no parity contract (walk lattices are odd so the
  // origin is an exact center; a kernel grid may be any size >= 3).
  static LatticeGrid continuum(int n, double dx);

  int center() const { return (n_sites - 1) / 2; }
  double position(int i) const { return (i - center()) * spacing; }
  double length() const { return n_sites * spacing; }
  // Signed momentum of DFT bin m in [0, n_sites): k_m = 2 pi m~ / (n dx)
  // with m~ the alias of m in (-n/2, n/2).
  double momentum(int m) const;
};

enum class CoinKind { grover, theta };

struct CoinSpec {
  CoinKind kind = CoinKind::grover;
  double theta = 0.0;

  static CoinSpec grover() { return {CoinKind::grover, 0.0}; }
  static CoinSpec angle(double theta) { return {CoinKind::theta, theta}; }
};

// Exact rational Grover matrix for kind==grover, closed-form coin(theta) otherwise.
Matrix3 coin_matrix(const CoinSpec& spec);

struct PureState {
  LatticeGrid grid;
  Eigen::Matrix3Xcd amp;  // row = coin (L,S,R), column = site

  double norm() const { return amp.norm(); }
};

Vector3 fourier_symmetric_coin();  // (1, w, w^2)/sqrt(3), w = exp(2 pi i / 3)

// coin_amplitudes must be normalized to 1e-12.
PureState localized_state(const LatticeGrid& grid, const Vector3& coin_amplitudes);
// Gaussian envelope exp(-x^2 / (4 sigma^2)) (position variance sigma^2),
// renormalized on the grid; sigma > 0.
PureState gaussian_state(const LatticeGrid& grid, double sigma,
                         const Vector3& coin_amplitudes);

void step_unitary(PureState& state, const Matrix3& coin);

// Enforces the light-cone guard n_sites >= 2*steps + 3.  The observer (if set)
// is called with (step, state) at step 0 and after every observe_every-th step.
void evolve_unitary(PureState& state, const CoinSpec& coin, int steps,
                    const std::function<void(int, const PureState&)>& observer = {},
                    int observe_every = 1);

// U(k) = S(k) C = diag(e^{-ik dx}, 1, e^{+ik dx}) C.
Matrix3 momentum_operator(double k, const CoinSpec& coin, double dx);

ProbabilityDistribution probability(const PureState& state);

// --- two-state Hadamard reference walk (coin rows: 0 = L, 1 = R) ---

struct PureState2 {
  LatticeGrid grid;
  Eigen::Matrix2Xcd amp;
};

PureState2 localized_state2(const LatticeGrid& grid, const Eigen::Vector2cd& coin);
void step_hadamard2(PureState2& state);
void evolve_hadamard2(PureState2& state, int steps);
ProbabilityDistribution probability(const PureState2& state);

}  // namespace lazywalk
