#pragma once
// Open-system engine: density operators on the lattice evolving under the
// unitary walk step composed with a dephasing channel.
//
// Default map (kraus):    rho' = (1-g) U rho U+  +  g sum_j P_j U rho U+ P_j
// Alternate (lindblad_euler), discrete Lindblad form with L_j = P_j U:
//                         rho' = U rho U+ + g sum_j (L_j rho L_j+ - {L_j+ L_j, rho}/2)
//                              = U rho U+ + g (Pi[U rho U+] - rho)
// The two maps agree to O(g * dx) under the continuum scaling; kraus is CPTP
// for every g in [0,1], lindblad_euler is not guaranteed positive.
//
// P_j are either the three coin projectors |j><j| (x identity on positions)
// or the site projectors |x><x| (x identity on the coin).

#include <Eigen/Dense>

#include <functional>

#include "lazywalk/walk.hpp"

namespace lazywalk {

enum class ChannelKind { none, coin, spatial };
enum class MapForm { kraus, lindblad_euler };

struct NoiseChannel {
  ChannelKind kind = ChannelKind::none;
  double gamma = 0.0;  // in [0, 1]
  MapForm form = MapForm::kraus;

  NoiseChannel() = default;
  NoiseChannel(ChannelKind k, double g, MapForm f = MapForm::kraus);
};

struct DensityOperator {
  LatticeGrid grid;
  Eigen::MatrixXcd rho;  // (3n) x (3n), flat index = 3*site + coin

  int dim() const { return static_cast<int>(rho.rows()); }
  double trace_real() const { return rho.trace().real(); }
  double hermiticity_defect() const;  // max |rho - rho^dag|
  double min_eigenvalue() const;      // smallest eigenvalue of (rho + rho^dag)/2
  Matrix3 site_block(int x, int xp) const { return rho.block<3, 3>(3 * x, 3 * xp); }
};

DensityOperator from_pure(const PureState& psi);
DensityOperator maximally_mixed(const LatticeGrid& grid);

Matrix3 coin_projector(int j);  // |j><j| on the coin factor
// Dense projectors / unitary for small-instance oracles and tests.
Eigen::MatrixXcd spatial_projector(const LatticeGrid& grid, int site);
Eigen::MatrixXcd dense_walk_unitary(const LatticeGrid& grid, const Matrix3& coin);

// rho <- U rho U+ applied structurally (per-site coin blocks + shift permutation).
void conjugate_by_walk(DensityOperator& rho, const Matrix3& coin);

// M <- sum_j P_j M P_j for either projector family (zeroes the complement).
void project_coin_diagonal(Eigen::MatrixXcd& m);
void project_spatial_diagonal(Eigen::MatrixXcd& m);

void lindblad_step(DensityOperator& rho, const Matrix3& coin, const NoiseChannel& channel);

struct OpenEvolveOptions {
  bool enforce_light_cone = true;   // distribution-fidelity guard n >= 2*steps+3
  bool monitor_positivity = false;  // O(d^3) spectral check each step
  int observe_every = 0;            // 0 = never; observer also sees step 0
  std::function<void(int, const DensityOperator&)> observer;
};

void evolve_open(DensityOperator& rho, const CoinSpec& coin, const NoiseChannel& channel,
                 int steps, const OpenEvolveOptions& opts = {});

Matrix3 reduced_coin_state(const DensityOperator& rho);  // sum_x rho(x,x)
ProbabilityDistribution probability(const DensityOperator& rho);

}  // namespace lazywalk
