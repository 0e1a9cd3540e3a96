#pragma once
// Observables and the discrete -> continuum convergence harness.

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <vector>

#include "lazywalk/continuum.hpp"

namespace lazywalk {

struct MomentSummary {
  double mean = 0.0;
  double variance = 0.0;
  double excess_kurtosis = 0.0;  // mu4 / mu2^2 - 3
};

MomentSummary moments(const ProbabilityDistribution& p);

// Fraction of mass with |x| > x_threshold (callers use v*t/2, v = dx/dt).
double side_mass_ratio(const ProbabilityDistribution& p, double x_threshold);

// Distributions must share the same grid.
double total_variation(const ProbabilityDistribution& a, const ProbabilityDistribution& b);
// (1/2) ||r1 - r2||_1 via singular values.
double trace_distance(const Eigen::MatrixXcd& r1, const Eigen::MatrixXcd& r2);
double coherence_l1(const Matrix3& rho);  // sum of |off-diagonal| moduli

struct VarianceSeries {
  std::vector<double> t;
  std::vector<double> var;
};
// Least-squares slope of log(var) against log(t) over t in [t_min, t_max].
double variance_exponent(const VarianceSeries& s, double t_min, double t_max);

struct DispersionRow {
  double k = 0.0;
  std::array<double, 3> phase{};  // eigenphases of U(k) / dt, ascending
  std::array<double, 3> h{};      // eigenvalues of H(k, theta/dt), ascending
};

struct DispersionTable {
  std::vector<DispersionRow> rows;
  // Worst-case circular distance (period 2*pi/dt) between the eigenphase
  // triple and the H eigenvalue triple under the best branch pairing.
  double max_deviation = 0.0;
  double k0_gap = 0.0;  // eigenphase gap of U(0) (in phase units)
};

// k_samples points across the Brillouin zone (-pi/dx, pi/dx].
DispersionTable dispersion(double theta, double dx, double dt, int k_samples);

struct ScalingParams {
  double theta_bar = 1.0;
  double gamma_bar = 0.0;
  double t_phys = 1.0;
  double sigma = 0.25;  // physical width of the Gaussian initial packet
};

struct ConvergencePoint {
  double epsilon = 0.0;
  int steps = 0;
  int n_sites = 0;          // discrete lattice (continuum grid = n_sites * refine)
  int refine = 1;           // odd sub-cells per lattice cell, chosen so sigma >= 4h
  int continuum_steps = 0;
  double continuum_dt = 0.0;
  double tv = 0.0;          // TV(discrete, continuum) on the epsilon lattice
  ProbabilityDistribution discrete_p;
  ProbabilityDistribution continuum_p;
};

struct ConvergenceReport {
  std::vector<ConvergencePoint> points;           // in the order epsilons were given
  std::optional<double> fitted_order;             // log-log slope when >= 2 points
};

// For each eps: walk with dt=dx=eps, theta=eps*th, gamma=eps*gm for t/eps steps
// (kraus map), against kernel_solve with (th, gm, t) on a commensurate grid;
// continuum cell masses are aggregated exactly onto the eps lattice for TV.
ConvergenceReport converge(const ScalingParams& sp, ChannelKind channel,
                           const std::vector<double>& epsilons);

}  // namespace lazywalk
