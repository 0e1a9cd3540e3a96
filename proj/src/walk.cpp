#include "lazywalk/walk.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lazywalk {

namespace {

constexpr Complex kI{0.0, 1.0};

void check_coin_vector(const Eigen::Ref<const Eigen::VectorXcd>& v) {
  if (std::abs(v.norm() - 1.0) > 1e-12)
    throw std::invalid_argument("initial coin vector must be normalized");
}

void check_light_cone(const LatticeGrid& grid, int steps) {
  if (steps < 0) throw std::invalid_argument("steps must be non-negative");
  if (grid.n_sites % 2 == 0)
    throw std::invalid_argument("walk evolution requires an odd lattice");
  if (grid.n_sites < 2 * steps + 3)
    throw std::invalid_argument("light-cone guard: need n_sites >= 2*steps + 3");
}

// Cyclic row shift; offset +1 moves content toward larger site index.
template <typename Row>
void shift_row(Row row, int offset) {
  const int n = static_cast<int>(row.cols());
  Eigen::RowVectorXcd tmp(n);
  if (offset == +1) {
    tmp << row.segment(n - 1, 1), row.segment(0, n - 1);
  } else {
    tmp << row.segment(1, n - 1), row.segment(0, 1);
  }
  row = tmp;
}

}  // namespace

LatticeGrid::LatticeGrid(int n, double dx) : n_sites(n), spacing(dx) {
  if (n < 3 || n % 2 == 0)
    throw std::invalid_argument("LatticeGrid: n_sites must be odd and >= 3");
  if (!std::isfinite(dx) || dx <= 0.0)
    throw std::invalid_argument("LatticeGrid: spacing must be positive and finite");
}

LatticeGrid LatticeGrid::continuum(int n, double dx) {
  if (n < 3)
    throw std::invalid_argument("LatticeGrid::continuum: n_sites must be >= 3");
  if (!std::isfinite(dx) || dx <= 0.0)
    throw std::invalid_argument("LatticeGrid::continuum: spacing must be positive and finite");
  LatticeGrid g;
  g.n_sites = n;
  g.spacing = dx;
  return g;
}

double LatticeGrid::momentum(int m) const {
  const int alias = (m <= n_sites / 2) ? m : m - n_sites;
  return 2.0 * std::numbers::pi * alias / (n_sites * spacing);
}

Matrix3 coin_matrix(const CoinSpec& spec) {
  return spec.kind == CoinKind::grover ? grover_coin() : coin(spec.theta);
}

Vector3 fourier_symmetric_coin() {
  const Complex w = std::exp(2.0 * std::numbers::pi * kI / 3.0);
  Vector3 v;
  v << 1.0, w, w * w;
  return v / std::sqrt(3.0);
}

PureState localized_state(const LatticeGrid& grid, const Vector3& coin_amplitudes) {
  check_coin_vector(coin_amplitudes);
  PureState st{grid, Eigen::Matrix3Xcd::Zero(3, grid.n_sites)};
  st.amp.col(grid.center()) = coin_amplitudes;
  return st;
}

PureState gaussian_state(const LatticeGrid& grid, double sigma,
                         const Vector3& coin_amplitudes) {
  check_coin_vector(coin_amplitudes);
  if (!std::isfinite(sigma) || sigma <= 0.0)
    throw std::invalid_argument("gaussian_state: sigma must be positive");
  PureState st{grid, Eigen::Matrix3Xcd(3, grid.n_sites)};
  for (int j = 0; j < grid.n_sites; ++j) {
    const double x = grid.position(j);
    st.amp.col(j) = std::exp(-x * x / (4.0 * sigma * sigma)) * coin_amplitudes;
  }
  st.amp /= st.amp.norm();
  return st;
}

void step_unitary(PureState& state, const Matrix3& coin) {
  state.amp = (coin * state.amp).eval();
  shift_row(state.amp.row(kCoinL), -1);
  shift_row(state.amp.row(kCoinR), +1);
}

void evolve_unitary(PureState& state, const CoinSpec& coin, int steps,
                    const std::function<void(int, const PureState&)>& observer,
                    int observe_every) {
  check_light_cone(state.grid, steps);
  if (observe_every < 1) throw std::invalid_argument("observe_every must be >= 1");
  const Matrix3 c = coin_matrix(coin);
  if (observer) observer(0, state);
  for (int s = 1; s <= steps; ++s) {
    step_unitary(state, c);
    if (observer && (s % observe_every == 0 || s == steps)) observer(s, state);
  }
}

Matrix3 momentum_operator(double k, const CoinSpec& coin, double dx) {
  if (!std::isfinite(k) || !std::isfinite(dx) || dx <= 0.0)
    throw std::invalid_argument("momentum_operator: bad k or dx");
  Matrix3 sk = Matrix3::Zero();
  sk(kCoinL, kCoinL) = std::exp(-kI * (k * dx));
  sk(kCoinS, kCoinS) = 1.0;
  sk(kCoinR, kCoinR) = std::exp(kI * (k * dx));
  return sk * coin_matrix(coin);
}

ProbabilityDistribution probability(const PureState& state) {
  ProbabilityDistribution p;
  p.spacing = state.grid.spacing;
  p.x.resize(state.grid.n_sites);
  p.p.resize(state.grid.n_sites);
  for (int j = 0; j < state.grid.n_sites; ++j) {
    p.x[j] = state.grid.position(j);
    p.p[j] = state.amp.col(j).squaredNorm();
  }
  return p;
}

PureState2 localized_state2(const LatticeGrid& grid, const Eigen::Vector2cd& coin) {
  check_coin_vector(coin);
  PureState2 st{grid, Eigen::Matrix2Xcd::Zero(2, grid.n_sites)};
  st.amp.col(grid.center()) = coin;
  return st;
}

void step_hadamard2(PureState2& state) {
  const double s2 = 1.0 / std::sqrt(2.0);
  Eigen::Matrix2cd h;
  h << s2, s2, s2, -s2;
  state.amp = (h * state.amp).eval();
  shift_row(state.amp.row(0), -1);  // L
  shift_row(state.amp.row(1), +1);  // R
}

void evolve_hadamard2(PureState2& state, int steps) {
  check_light_cone(state.grid, steps);
  for (int s = 0; s < steps; ++s) step_hadamard2(state);
}

ProbabilityDistribution probability(const PureState2& state) {
  ProbabilityDistribution p;
  p.spacing = state.grid.spacing;
  p.x.resize(state.grid.n_sites);
  p.p.resize(state.grid.n_sites);
  for (int j = 0; j < state.grid.n_sites; ++j) {
    p.x[j] = state.grid.position(j);
    p.p[j] = state.amp.col(j).squaredNorm();
  }
  return p;
}

}  // namespace lazywalk
