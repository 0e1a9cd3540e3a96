#include "lazywalk/continuum.hpp"

#include <fftw3.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <cstring>
#include <numbers>
#include <stdexcept>
#include <string>

#include "lazywalk/su3.hpp"

namespace lazywalk {
namespace {

constexpr Complex kImag{0.0, 1.0};

void check_params(const ContinuumParams& p) {
  if (!std::isfinite(p.theta_bar) || p.theta_bar < 0.0)
    throw std::invalid_argument("continuum: theta_bar must be finite and >= 0");
  if (!std::isfinite(p.gamma_bar) || p.gamma_bar < 0.0)
    throw std::invalid_argument("continuum: gamma_bar must be finite and >= 0");
}

void check_kernel(const TwoPointKernel& k) {
  const int n = k.grid.n_sites;
  for (const auto& plane : k.comp)
    if (plane.rows() != n || plane.cols() != n)
      throw std::invalid_argument("kernel planes must be n_sites x n_sites");
}

// Spectral d/dx along either kernel argument.  Forward transform uses the
// e^{+ikx} convention (FFTW_BACKWARD), so the derivative multiplier is -i k_m;
// the 1/n normalization of the inverse is folded into the multiplier.  Plans
// use FFTW_ESTIMATE: planning is then deterministic, which keeps outputs
// byte-identical across runs (FFTW_MEASURE picks algorithms by timing).
class SpectralDerivative {
 public:
  explicit SpectralDerivative(const LatticeGrid& grid) : n_(grid.n_sites) {
    buf_ = fftw_alloc_complex(static_cast<size_t>(n_) * n_);
    if (buf_ == nullptr) throw std::bad_alloc();
    int dims[1] = {n_};
    col_fwd_ = fftw_plan_many_dft(1, dims, n_, buf_, nullptr, 1, n_, buf_, nullptr, 1,
                                  n_, FFTW_BACKWARD, FFTW_ESTIMATE);
    col_inv_ = fftw_plan_many_dft(1, dims, n_, buf_, nullptr, 1, n_, buf_, nullptr, 1,
                                  n_, FFTW_FORWARD, FFTW_ESTIMATE);
    row_fwd_ = fftw_plan_many_dft(1, dims, n_, buf_, nullptr, n_, 1, buf_, nullptr, n_,
                                  1, FFTW_BACKWARD, FFTW_ESTIMATE);
    row_inv_ = fftw_plan_many_dft(1, dims, n_, buf_, nullptr, n_, 1, buf_, nullptr, n_,
                                  1, FFTW_FORWARD, FFTW_ESTIMATE);
    if (col_fwd_ == nullptr || col_inv_ == nullptr || row_fwd_ == nullptr ||
        row_inv_ == nullptr) {
      release();
      throw std::runtime_error("fftw plan creation failed");
    }
    mult_.resize(n_);
    for (int m = 0; m < n_; ++m) {
      const bool nyquist = (n_ % 2 == 0 && m == n_ / 2);
      mult_[m] = nyquist ? Complex(0.0, 0.0)
                         : -kImag * grid.momentum(m) / static_cast<double>(n_);
    }
  }
  ~SpectralDerivative() { release(); }
  SpectralDerivative(const SpectralDerivative&) = delete;
  SpectralDerivative& operator=(const SpectralDerivative&) = delete;

  // out = d(in)/dx, x = row index (transforms run down the columns).
  void d_first(const Eigen::MatrixXcd& in, Eigen::MatrixXcd& out) {
    load(in);
    fftw_execute(col_fwd_);
    auto* b = reinterpret_cast<Complex*>(buf_);
    for (int j = 0; j < n_; ++j) {
      Complex* col = b + static_cast<size_t>(j) * n_;
      for (int m = 0; m < n_; ++m) col[m] *= mult_[m];
    }
    fftw_execute(col_inv_);
    store(out);
  }

  // out = d(in)/dx', x' = column index (transforms run along the rows).
  void d_second(const Eigen::MatrixXcd& in, Eigen::MatrixXcd& out) {
    load(in);
    fftw_execute(row_fwd_);
    auto* b = reinterpret_cast<Complex*>(buf_);
    for (int m = 0; m < n_; ++m) {
      Complex* col = b + static_cast<size_t>(m) * n_;
      const Complex f = mult_[m];
      for (int i = 0; i < n_; ++i) col[i] *= f;
    }
    fftw_execute(row_inv_);
    store(out);
  }

 private:
  void release() {
    if (col_fwd_ != nullptr) fftw_destroy_plan(col_fwd_);
    if (col_inv_ != nullptr) fftw_destroy_plan(col_inv_);
    if (row_fwd_ != nullptr) fftw_destroy_plan(row_fwd_);
    if (row_inv_ != nullptr) fftw_destroy_plan(row_inv_);
    col_fwd_ = col_inv_ = row_fwd_ = row_inv_ = nullptr;
    if (buf_ != nullptr) fftw_free(buf_);
    buf_ = nullptr;
  }
  // fftw_complex and std::complex<double> are layout-compatible; copy through
  // void* to keep the bitwise transfer warning-free.
  void load(const Eigen::MatrixXcd& in) {
    std::memcpy(static_cast<void*>(buf_), static_cast<const void*>(in.data()),
                sizeof(Complex) * static_cast<size_t>(n_) * n_);
  }
  void store(Eigen::MatrixXcd& out) {
    out.resize(n_, n_);
    std::memcpy(static_cast<void*>(out.data()), static_cast<const void*>(buf_),
                sizeof(Complex) * static_cast<size_t>(n_) * n_);
  }

  int n_;
  fftw_complex* buf_ = nullptr;
  fftw_plan col_fwd_ = nullptr, col_inv_ = nullptr, row_fwd_ = nullptr,
            row_inv_ = nullptr;
  std::vector<Complex> mult_;
};

constexpr std::array<double, 3> kJzDiag{1.0, 0.0, -1.0};

struct Rk4Workspace {
  SpectralDerivative sd;
  std::array<Eigen::MatrixXcd, 9> k1, k2, k3, k4, stage;
  std::array<Eigen::MatrixXcd, 3> s1, s2;
  Eigen::MatrixXcd scratch;

  explicit Rk4Workspace(const LatticeGrid& g) : sd(g) {
    const int n = g.n_sites;
    for (auto* set : {&k1, &k2, &k3, &k4, &stage})
      for (auto& m : *set) m.setZero(n, n);
    for (auto& m : s1) m.setZero(n, n);
    for (auto& m : s2) m.setZero(n, n);
    scratch.setZero(n, n);
  }
};

// Right-hand side of the master equation, plane by plane.  The coin commutator
// -i th [G, rho] reduces to entrywise +i th/3 (S1_b - S2_a) with the row/column
// plane sums S1_b = sum_a rho_{ab}, S2_a = sum_b rho_{ab} (G = I - |u><u|, and
// the identity part commutes away).
void rhs(const std::array<Eigen::MatrixXcd, 9>& in, std::array<Eigen::MatrixXcd, 9>& out,
         const ContinuumParams& p, Rk4Workspace& ws) {
  const double th = p.theta_bar;
  const double gm = p.gamma_bar;
  if (th != 0.0) {
    for (int b = 0; b < 3; ++b) ws.s1[b] = in[b] + in[3 + b] + in[6 + b];
    for (int a = 0; a < 3; ++a) ws.s2[a] = in[3 * a] + in[3 * a + 1] + in[3 * a + 2];
  }
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      auto& o = out[3 * a + b];
      const auto& f = in[3 * a + b];
      if (th != 0.0) {
        o = (kImag * th / 3.0) * (ws.s1[b] - ws.s2[a]);
      } else {
        o.setZero();
      }
      if (kJzDiag[a] != 0.0) {
        ws.sd.d_first(f, ws.scratch);
        o += kJzDiag[a] * ws.scratch;
      }
      if (kJzDiag[b] != 0.0) {
        ws.sd.d_second(f, ws.scratch);
        o += kJzDiag[b] * ws.scratch;
      }
      if (gm != 0.0) {
        if (p.channel == ChannelKind::coin) {
          if (a != b) o -= gm * f;
        } else if (p.channel == ChannelKind::spatial) {
          o -= gm * f;
          o.diagonal() += gm * f.diagonal();
        }
      }
    }
  }
}

void rk4_step(std::array<Eigen::MatrixXcd, 9>& y, const ContinuumParams& p, double dt,
              Rk4Workspace& ws) {
  rhs(y, ws.k1, p, ws);
  for (int i = 0; i < 9; ++i) ws.stage[i] = y[i] + (0.5 * dt) * ws.k1[i];
  rhs(ws.stage, ws.k2, p, ws);
  for (int i = 0; i < 9; ++i) ws.stage[i] = y[i] + (0.5 * dt) * ws.k2[i];
  rhs(ws.stage, ws.k3, p, ws);
  for (int i = 0; i < 9; ++i) ws.stage[i] = y[i] + dt * ws.k3[i];
  rhs(ws.stage, ws.k4, p, ws);
  for (int i = 0; i < 9; ++i)
    y[i] += (dt / 6.0) * (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]);
}

}  // namespace

Matrix3 TwoPointKernel::block(int x, int xp) const {
  Matrix3 m;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) m(a, b) = comp[3 * a + b](x, xp);
  return m;
}

double TwoPointKernel::integrated_trace() const {
  double s = 0.0;
  for (int a = 0; a < 3; ++a) s += comp[3 * a + a].diagonal().real().sum();
  return grid.spacing * s;
}

double TwoPointKernel::conjugate_defect() const {
  double d = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      const double v = (comp[3 * a + b] - comp[3 * b + a].adjoint()).cwiseAbs().maxCoeff();
      d = std::max(d, v);
    }
  return d;
}

double TwoPointKernel::purity() const {
  double s = 0.0;
  for (const auto& plane : comp) s += plane.squaredNorm();
  return grid.spacing * grid.spacing * s;
}

TwoPointKernel kernel_from_pure(const PureState& psi) {
  TwoPointKernel k;
  k.grid = psi.grid;
  const double h = psi.grid.spacing;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      k.comp[3 * a + b] = (psi.amp.row(a).transpose() * psi.amp.row(b).conjugate()) / h;
  return k;
}

TwoPointKernel kernel_init_gaussian(const LatticeGrid& grid, double sigma,
                                    const Vector3& coin_amplitudes) {
  if (!std::isfinite(sigma) || sigma < 4.0 * grid.spacing)
    throw std::invalid_argument(
        "kernel_init_gaussian: sigma must be >= 4 h (under-resolved otherwise)");
  return kernel_from_pure(gaussian_state(grid, sigma, coin_amplitudes));
}

double stability_dt(const LatticeGrid& grid, const ContinuumParams& p) {
  check_params(p);
  const double h = grid.spacing;
  return std::min(0.5 * h,
                  1.0 / (4.0 * (p.gamma_bar + p.theta_bar + std::numbers::pi / h)));
}

void kernel_step(TwoPointKernel& k, const ContinuumParams& p, double dt) {
  check_params(p);
  check_kernel(k);
  if (!std::isfinite(dt) || dt <= 0.0)
    throw std::invalid_argument("kernel_step: dt must be positive and finite");
  Rk4Workspace ws(k.grid);
  rk4_step(k.comp, p, dt, ws);
}

TwoPointKernel dissipator(const TwoPointKernel& k, ChannelKind channel) {
  check_kernel(k);
  const int n = k.grid.n_sites;
  TwoPointKernel out;
  out.grid = k.grid;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      const int p = 3 * a + b;
      switch (channel) {
        case ChannelKind::none:
          out.comp[p] = Eigen::MatrixXcd::Zero(n, n);
          break;
        case ChannelKind::coin:
          out.comp[p] = (a != b) ? k.comp[p] : Eigen::MatrixXcd::Zero(n, n);
          break;
        case ChannelKind::spatial:
          out.comp[p] = k.comp[p];
          out.comp[p].diagonal().setZero();
          break;
      }
    }
  return out;
}

KernelRunInfo kernel_solve(TwoPointKernel& k, const ContinuumParams& p, double t_final,
                           const KernelSolveOptions& opts) {
  check_params(p);
  check_kernel(k);
  if (!std::isfinite(t_final) || t_final < 0.0)
    throw std::invalid_argument("kernel_solve: t_final must be >= 0");

  KernelRunInfo info;
  const double tr0 = k.integrated_trace();
  const bool observing = static_cast<bool>(opts.observer) && opts.observe_every > 0;
  if (observing) opts.observer(0.0, k);
  if (t_final == 0.0) {
    info.conjugate_defect = k.conjugate_defect();
    return info;
  }

  const double bound = stability_dt(k.grid, p);
  double dt0 = bound;
  if (opts.dt > 0.0) dt0 = opts.force_dt ? opts.dt : std::min(opts.dt, bound);
  const int steps =
      std::max(1, static_cast<int>(std::ceil(t_final / dt0 - 1e-9)));
  const double dt = t_final / steps;

  Rk4Workspace ws(k.grid);
  for (int s = 1; s <= steps; ++s) {
    rk4_step(k.comp, p, dt, ws);
    double mass = 0.0;
    for (const auto& plane : k.comp) mass += plane.cwiseAbs().sum();
    if (!std::isfinite(mass) || mass > 1e100)
      throw std::runtime_error("kernel_solve: numerical divergence at step " +
                               std::to_string(s));
    if (observing && (s % opts.observe_every == 0 || s == steps))
      opts.observer(s * dt, k);
  }

  info.steps = steps;
  info.dt = dt;
  info.trace_drift = std::abs(k.integrated_trace() - tr0);
  info.conjugate_defect = k.conjugate_defect();
  return info;
}

PureState dirac_solve(const PureState& psi0, double theta_bar, double t_final) {
  if (!std::isfinite(theta_bar) || theta_bar < 0.0)
    throw std::invalid_argument("dirac_solve: theta_bar must be finite and >= 0");
  if (!std::isfinite(t_final) || t_final < 0.0)
    throw std::invalid_argument("dirac_solve: t_final must be >= 0");

  const int n = psi0.grid.n_sites;
  PureState out = psi0;

  fftw_complex* buf = fftw_alloc_complex(static_cast<size_t>(3) * n);
  if (buf == nullptr) throw std::bad_alloc();
  int dims[1] = {n};
  fftw_plan fwd = fftw_plan_many_dft(1, dims, 3, buf, nullptr, 3, 1, buf, nullptr, 3, 1,
                                     FFTW_BACKWARD, FFTW_ESTIMATE);
  fftw_plan inv = fftw_plan_many_dft(1, dims, 3, buf, nullptr, 3, 1, buf, nullptr, 3, 1,
                                     FFTW_FORWARD, FFTW_ESTIMATE);
  if (fwd == nullptr || inv == nullptr) {
    if (fwd != nullptr) fftw_destroy_plan(fwd);
    if (inv != nullptr) fftw_destroy_plan(inv);
    fftw_free(buf);
    throw std::runtime_error("fftw plan creation failed");
  }

  std::memcpy(static_cast<void*>(buf), static_cast<const void*>(out.amp.data()),
              sizeof(Complex) * static_cast<size_t>(3) * n);
  fftw_execute(fwd);

  auto* modes = reinterpret_cast<Complex*>(buf);
  for (int m = 0; m < n; ++m) {
    const double k = out.grid.momentum(m);
    Complex* v = modes + static_cast<size_t>(3) * m;
    if (theta_bar == 0.0) {
      // H = k J_z exactly; L and R pick up opposite phases, S none.
      v[kCoinL] *= std::exp(-kImag * (k * t_final));
      v[kCoinR] *= std::exp(kImag * (k * t_final));
    } else {
      Eigen::SelfAdjointEigenSolver<Matrix3> es(h_phys(k, theta_bar));
      Vector3 w(v[0], v[1], v[2]);
      w = (es.eigenvectors().adjoint() * w).eval();
      for (int c = 0; c < 3; ++c) w(c) *= std::exp(-kImag * (es.eigenvalues()(c) * t_final));
      w = (es.eigenvectors() * w).eval();
      v[0] = w(0);
      v[1] = w(1);
      v[2] = w(2);
    }
  }

  fftw_execute(inv);
  std::memcpy(static_cast<void*>(out.amp.data()), static_cast<const void*>(buf),
              sizeof(Complex) * static_cast<size_t>(3) * n);
  out.amp /= static_cast<double>(n);

  fftw_destroy_plan(fwd);
  fftw_destroy_plan(inv);
  fftw_free(buf);
  return out;
}

Matrix3 mode_solve_coin(const Matrix3& b0, double k, double kp, double theta_bar,
                        double gamma_bar, double t) {
  if (!std::isfinite(k) || !std::isfinite(kp))
    throw std::invalid_argument("mode_solve_coin: momenta must be finite");
  if (!std::isfinite(theta_bar) || theta_bar < 0.0)
    throw std::invalid_argument("mode_solve_coin: theta_bar must be finite and >= 0");
  if (!std::isfinite(gamma_bar) || gamma_bar < 0.0)
    throw std::invalid_argument("mode_solve_coin: gamma_bar must be finite and >= 0");
  if (!std::isfinite(t) || t < 0.0)
    throw std::invalid_argument("mode_solve_coin: t must be >= 0");

  using Matrix9 = Eigen::Matrix<Complex, 9, 9>;
  const Matrix3 h1 = h_phys(k, theta_bar);
  const Matrix3 h2 = h_phys(kp, theta_bar);

  // Column-major vec: index(a, b) = a + 3b.  dB/dt = -i (H1 B - B H2) - gm D_c[B].
  Matrix9 sup = Matrix9::Zero();
  for (int b = 0; b < 3; ++b)
    for (int a = 0; a < 3; ++a)
      for (int c = 0; c < 3; ++c) sup(a + 3 * b, c + 3 * b) += -kImag * h1(a, c);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int d = 0; d < 3; ++d) sup(a + 3 * b, a + 3 * d) += kImag * h2(d, b);
  if (gamma_bar != 0.0)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        if (a != b) sup(a + 3 * b, a + 3 * b) -= gamma_bar;

  const Matrix9 prop = (sup * t).exp();
  Eigen::Matrix<Complex, 9, 1> v;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) v(a + 3 * b) = b0(a, b);
  v = (prop * v).eval();
  Matrix3 out;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) out(a, b) = v(a + 3 * b);
  return out;
}

MatrixField diagonal_field(const TwoPointKernel& k) {
  check_kernel(k);
  MatrixField f(static_cast<size_t>(k.grid.n_sites));
  for (int x = 0; x < k.grid.n_sites; ++x) f[static_cast<size_t>(x)] = k.block(x, x);
  return f;
}

ProbabilityDistribution field_probability(const TwoPointKernel& k) {
  check_kernel(k);
  const int n = k.grid.n_sites;
  ProbabilityDistribution p;
  p.spacing = k.grid.spacing;
  p.x.resize(static_cast<size_t>(n));
  p.p.resize(static_cast<size_t>(n));
  double total = 0.0;
  for (int x = 0; x < n; ++x) {
    double v = 0.0;
    for (int a = 0; a < 3; ++a) v += std::real(k.comp[3 * a + a](x, x));
    v *= k.grid.spacing;
    p.x[static_cast<size_t>(x)] = k.grid.position(x);
    p.p[static_cast<size_t>(x)] = v;
    total += v;
  }
  if (!std::isfinite(total) || total <= 0.0)
    throw std::runtime_error("field_probability: non-positive total mass");
  for (double& v : p.p) v /= total;
  return p;
}

}  // namespace lazywalk
