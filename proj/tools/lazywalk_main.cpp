// Command-line front end: walk / open / continuum / converge / dispersion /
// gellmann-check.  Every run writes CSV + summary.json into --out-dir with
// fixed formatting (17 significant digits, LF), so identical invocations
// produce byte-identical outputs.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
// 4 output I/O error.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include "json.hpp"
#include "lazywalk/analysis.hpp"
#include "lazywalk/continuum.hpp"
#include "lazywalk/io_util.hpp"
#include "lazywalk/lindblad.hpp"
#include "lazywalk/su3.hpp"
#include "lazywalk/walk.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lazywalk;

namespace {

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config file: " + path);
  json cfg;
  try {
    in >> cfg;
  } catch (const json::exception& e) {
    throw std::invalid_argument("config is not valid JSON: " + std::string(e.what()));
  }
  if (!cfg.is_object()) throw std::invalid_argument("config must be a JSON object");
  return cfg;
}

// Explicit command-line flags win over config values, which win over defaults.
template <typename T>
void cfg_override(const json& cfg, const CLI::App& cmd, const std::string& flag,
                  const std::string& key, T& var) {
  if (!cfg.contains(key) || cmd.count(flag) > 0) return;
  try {
    var = cfg.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument("config key '" + key + "' has the wrong type");
  }
}

fs::path prepare_out_dir(const std::string& out_dir) {
  const fs::path p(out_dir);
  fs::create_directories(p);
  return p;
}

std::string snapshot_name(int seq) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "snapshot_%06d.csv", seq);
  return buf;
}

CoinSpec make_coin(const std::string& kind, double theta) {
  if (kind == "grover") return CoinSpec::grover();
  if (kind == "angle") return CoinSpec::angle(theta);
  throw std::invalid_argument("coin must be 'grover' or 'angle'");
}

ChannelKind make_channel(const std::string& name) {
  if (name == "none") return ChannelKind::none;
  if (name == "coin") return ChannelKind::coin;
  if (name == "spatial") return ChannelKind::spatial;
  throw std::invalid_argument("channel must be one of none|coin|spatial");
}

PureState make_initial(const LatticeGrid& grid, const std::string& init, double sigma) {
  if (init == "symmetric") return localized_state(grid, fourier_symmetric_coin());
  if (init == "gaussian") return gaussian_state(grid, sigma, fourier_symmetric_coin());
  throw std::invalid_argument("init must be 'symmetric' or 'gaussian'");
}

json moments_json(const ProbabilityDistribution& p, double side_threshold) {
  const MomentSummary m = moments(p);
  json j;
  j["mean"] = m.mean;
  j["variance"] = m.variance;
  j["excess_kurtosis"] = m.excess_kurtosis;
  j["side_mass"] = side_mass_ratio(p, side_threshold);
  j["side_threshold"] = side_threshold;
  return j;
}

// ---------------------------------------------------------------- walk ----

struct WalkArgs {
  std::string config, out_dir = ".";
  int steps = 100;
  int sites = 0;  // 0 = auto: 2*steps + 3
  double dx = 1.0;
  std::string coin = "grover";
  double theta = std::numbers::pi;
  std::string init = "symmetric";
  double sigma = 2.0;
  int snapshot_every = 0;
};

int run_walk(const CLI::App& cmd, WalkArgs a) {
  if (!a.config.empty()) {
    const json cfg = load_config(a.config);
    cfg_override(cfg, cmd, "--steps", "steps", a.steps);
    cfg_override(cfg, cmd, "--sites", "sites", a.sites);
    cfg_override(cfg, cmd, "--dx", "dx", a.dx);
    cfg_override(cfg, cmd, "--coin", "coin", a.coin);
    cfg_override(cfg, cmd, "--theta", "theta", a.theta);
    cfg_override(cfg, cmd, "--init", "init", a.init);
    cfg_override(cfg, cmd, "--sigma", "sigma", a.sigma);
    cfg_override(cfg, cmd, "--snapshot-every", "snapshot_every", a.snapshot_every);
  }
  const int sites = a.sites > 0 ? a.sites : 2 * a.steps + 3;
  const LatticeGrid grid(sites, a.dx);
  PureState psi = make_initial(grid, a.init, a.sigma);
  const CoinSpec coin = make_coin(a.coin, a.theta);
  const fs::path out = prepare_out_dir(a.out_dir);

  std::function<void(int, const PureState&)> observer;
  int seq = 0;
  json snapshots = json::array();
  if (a.snapshot_every > 0) {
    observer = [&](int step, const PureState& s) {
      write_distribution_csv(out / snapshot_name(seq), probability(s));
      snapshots.push_back(step);
      ++seq;
    };
  }
  evolve_unitary(psi, coin, a.steps, observer, std::max(1, a.snapshot_every));

  const ProbabilityDistribution p = probability(psi);
  write_distribution_csv(out / "distribution.csv", p);

  json params;
  params["command"] = "walk";
  params["steps"] = a.steps;
  params["sites"] = sites;
  params["dx"] = a.dx;
  params["coin"] = a.coin;
  if (a.coin == "angle") params["theta"] = a.theta;
  params["init"] = a.init;
  if (a.init == "gaussian") params["sigma"] = a.sigma;
  params["snapshot_every"] = a.snapshot_every;

  json metrics = moments_json(p, a.dx * a.steps / 2.0);
  metrics["norm_defect"] = std::abs(psi.norm() - 1.0);
  if (a.snapshot_every > 0) metrics["snapshots"] = snapshots;
  write_json(out / "summary.json", summary_json(params, metrics));

  std::cout << "walk: " << a.steps << " steps on " << sites << " sites\n"
            << "  variance " << format_g17(metrics["variance"].get<double>())
            << ", side mass " << format_g17(metrics["side_mass"].get<double>()) << "\n"
            << "  wrote distribution.csv, summary.json\n";
  return 0;
}

// ---------------------------------------------------------------- open ----

struct OpenArgs {
  std::string config, out_dir = ".";
  int steps = 100;
  int sites = 0;
  double dx = 1.0;
  std::string coin = "grover";
  double theta = std::numbers::pi;
  std::string init = "symmetric";
  double sigma = 2.0;
  std::string channel;
  double gamma = 0.0;
  std::string map = "kraus";
  bool allow_wrap = false;
  bool check_positivity = false;
  int snapshot_every = 0;
};

int run_open(const CLI::App& cmd, OpenArgs a) {
  if (!a.config.empty()) {
    const json cfg = load_config(a.config);
    cfg_override(cfg, cmd, "--steps", "steps", a.steps);
    cfg_override(cfg, cmd, "--sites", "sites", a.sites);
    cfg_override(cfg, cmd, "--dx", "dx", a.dx);
    cfg_override(cfg, cmd, "--coin", "coin", a.coin);
    cfg_override(cfg, cmd, "--theta", "theta", a.theta);
    cfg_override(cfg, cmd, "--init", "init", a.init);
    cfg_override(cfg, cmd, "--sigma", "sigma", a.sigma);
    cfg_override(cfg, cmd, "--channel", "channel", a.channel);
    cfg_override(cfg, cmd, "--gamma", "gamma", a.gamma);
    cfg_override(cfg, cmd, "--map", "map", a.map);
    cfg_override(cfg, cmd, "--snapshot-every", "snapshot_every", a.snapshot_every);
  }
  const ChannelKind kind = make_channel(a.channel);
  if (kind == ChannelKind::none && a.gamma != 0.0)
    throw std::invalid_argument("channel 'none' requires gamma = 0");
  MapForm form;
  if (a.map == "kraus") {
    form = MapForm::kraus;
  } else if (a.map == "lindblad-euler") {
    form = MapForm::lindblad_euler;
  } else {
    throw std::invalid_argument("map must be 'kraus' or 'lindblad-euler'");
  }

  const int sites = a.sites > 0 ? a.sites : 2 * a.steps + 3;
  const LatticeGrid grid(sites, a.dx);
  DensityOperator rho = from_pure(make_initial(grid, a.init, a.sigma));
  const NoiseChannel channel(kind, a.gamma, form);
  const fs::path out = prepare_out_dir(a.out_dir);

  OpenEvolveOptions opts;
  opts.enforce_light_cone = !a.allow_wrap;
  opts.monitor_positivity = a.check_positivity;
  int seq = 0;
  json snapshots = json::array();
  if (a.snapshot_every > 0) {
    opts.observe_every = a.snapshot_every;
    opts.observer = [&](int step, const DensityOperator& r) {
      write_distribution_csv(out / snapshot_name(seq), probability(r));
      snapshots.push_back(step);
      ++seq;
    };
  }
  evolve_open(rho, make_coin(a.coin, a.theta), channel, a.steps, opts);

  const ProbabilityDistribution p = probability(rho);
  write_distribution_csv(out / "distribution.csv", p);

  json params;
  params["command"] = "open";
  params["steps"] = a.steps;
  params["sites"] = sites;
  params["dx"] = a.dx;
  params["coin"] = a.coin;
  if (a.coin == "angle") params["theta"] = a.theta;
  params["init"] = a.init;
  if (a.init == "gaussian") params["sigma"] = a.sigma;
  params["channel"] = a.channel;
  params["gamma"] = a.gamma;
  params["map"] = a.map;
  params["allow_wrap"] = a.allow_wrap;
  params["snapshot_every"] = a.snapshot_every;

  json metrics = moments_json(p, a.dx * a.steps / 2.0);
  metrics["trace_defect"] = std::abs(rho.trace_real() - 1.0);
  metrics["hermiticity_defect"] = rho.hermiticity_defect();
  metrics["coin_coherence_l1"] = coherence_l1(reduced_coin_state(rho));
  if (a.check_positivity) metrics["min_eigenvalue"] = rho.min_eigenvalue();
  if (a.snapshot_every > 0) metrics["snapshots"] = snapshots;
  write_json(out / "summary.json", summary_json(params, metrics));

  std::cout << "open: " << a.steps << " steps, channel " << a.channel << ", gamma "
            << format_g17(a.gamma) << "\n"
            << "  variance " << format_g17(metrics["variance"].get<double>())
            << ", trace defect " << format_g17(metrics["trace_defect"].get<double>())
            << "\n  wrote distribution.csv, summary.json\n";
  return 0;
}

// ----------------------------------------------------------- continuum ----

struct ContinuumArgs {
  std::string config, out_dir = ".";
  int n = 256;
  double length = 4.0;
  double sigma = 0.25;
  double theta_bar = 1.0;
  double gamma_bar = 0.0;
  std::string channel = "none";
  double t = 0.5;
  double dt = 0.0;
  bool force_dt = false;
  int snapshot_every = 0;
};

int run_continuum(const CLI::App& cmd, ContinuumArgs a) {
  if (!a.config.empty()) {
    const json cfg = load_config(a.config);
    cfg_override(cfg, cmd, "--n", "n", a.n);
    cfg_override(cfg, cmd, "--length", "length", a.length);
    cfg_override(cfg, cmd, "--sigma", "sigma", a.sigma);
    cfg_override(cfg, cmd, "--theta-bar", "theta_bar", a.theta_bar);
    cfg_override(cfg, cmd, "--gamma-bar", "gamma_bar", a.gamma_bar);
    cfg_override(cfg, cmd, "--channel", "channel", a.channel);
    cfg_override(cfg, cmd, "--t", "t", a.t);
    cfg_override(cfg, cmd, "--dt", "dt", a.dt);
    cfg_override(cfg, cmd, "--snapshot-every", "snapshot_every", a.snapshot_every);
  }
  if (!(a.length > 0.0)) throw std::invalid_argument("length must be positive");
  const ChannelKind kind = make_channel(a.channel);
  if (kind == ChannelKind::none && a.gamma_bar != 0.0)
    throw std::invalid_argument("channel 'none' requires gamma-bar = 0");

  const LatticeGrid grid = LatticeGrid::continuum(a.n, a.length / a.n);
  TwoPointKernel kern = kernel_init_gaussian(grid, a.sigma, fourier_symmetric_coin());
  ContinuumParams p;
  p.theta_bar = a.theta_bar;
  p.gamma_bar = a.gamma_bar;
  p.channel = kind;
  const fs::path out = prepare_out_dir(a.out_dir);

  KernelSolveOptions opts;
  opts.dt = a.dt;
  opts.force_dt = a.force_dt;
  int seq = 0;
  json snapshots = json::array();
  if (a.snapshot_every > 0) {
    opts.observe_every = a.snapshot_every;
    opts.observer = [&](double t, const TwoPointKernel& k) {
      write_distribution_csv(out / snapshot_name(seq), field_probability(k));
      snapshots.push_back(t);
      ++seq;
    };
  }
  const KernelRunInfo info = kernel_solve(kern, p, a.t, opts);

  const ProbabilityDistribution pd = field_probability(kern);
  write_distribution_csv(out / "distribution.csv", pd);

  json params;
  params["command"] = "continuum";
  params["n"] = a.n;
  params["length"] = a.length;
  params["sigma"] = a.sigma;
  params["theta_bar"] = a.theta_bar;
  params["gamma_bar"] = a.gamma_bar;
  params["channel"] = a.channel;
  params["t"] = a.t;
  params["requested_dt"] = a.dt;
  params["force_dt"] = a.force_dt;
  params["snapshot_every"] = a.snapshot_every;

  json metrics = moments_json(pd, 0.0);
  metrics.erase("side_mass");
  metrics.erase("side_threshold");
  metrics["steps"] = info.steps;
  metrics["dt"] = info.dt;
  metrics["trace_drift"] = info.trace_drift;
  metrics["conjugate_defect"] = info.conjugate_defect;
  metrics["purity"] = kern.purity();
  if (a.snapshot_every > 0) metrics["snapshots"] = snapshots;
  write_json(out / "summary.json", summary_json(params, metrics));

  std::cout << "continuum: " << info.steps << " RK4 steps, dt " << format_g17(info.dt)
            << "\n  trace drift " << format_g17(info.trace_drift) << ", purity "
            << format_g17(kern.purity()) << "\n  wrote distribution.csv, summary.json\n";
  return 0;
}

// ------------------------------------------------------------ converge ----

struct ConvergeArgs {
  std::string config, out_dir = ".";
  double theta_bar = 1.0;
  double gamma_bar = 0.0;
  std::string channel = "none";
  double t = 1.0;
  double sigma = 0.25;
  std::vector<double> epsilons = {0.125, 0.0625, 0.03125};
};

int run_converge(const CLI::App& cmd, ConvergeArgs a) {
  if (!a.config.empty()) {
    const json cfg = load_config(a.config);
    cfg_override(cfg, cmd, "--theta-bar", "theta_bar", a.theta_bar);
    cfg_override(cfg, cmd, "--gamma-bar", "gamma_bar", a.gamma_bar);
    cfg_override(cfg, cmd, "--channel", "channel", a.channel);
    cfg_override(cfg, cmd, "--t", "t", a.t);
    cfg_override(cfg, cmd, "--sigma", "sigma", a.sigma);
    cfg_override(cfg, cmd, "--eps", "epsilons", a.epsilons);
  }
  const ChannelKind kind = make_channel(a.channel);
  if (kind == ChannelKind::none && a.gamma_bar != 0.0)
    throw std::invalid_argument("channel 'none' requires gamma-bar = 0");
  if (a.epsilons.empty()) throw std::invalid_argument("need at least one epsilon");

  ScalingParams sp;
  sp.theta_bar = a.theta_bar;
  sp.gamma_bar = a.gamma_bar;
  sp.t_phys = a.t;
  sp.sigma = a.sigma;
  const ConvergenceReport rep = converge(sp, kind, a.epsilons);

  const fs::path out = prepare_out_dir(a.out_dir);
  std::string csv = "epsilon,steps,n_sites,refine,continuum_steps,continuum_dt,tv\n";
  for (const ConvergencePoint& pt : rep.points) {
    csv += format_g17(pt.epsilon) + ',' + std::to_string(pt.steps) + ',' +
           std::to_string(pt.n_sites) + ',' + std::to_string(pt.refine) + ',' +
           std::to_string(pt.continuum_steps) + ',' + format_g17(pt.continuum_dt) +
           ',' + format_g17(pt.tv) + '\n';
  }
  write_text_file(out / "convergence.csv", csv);
  for (size_t i = 0; i < rep.points.size(); ++i) {
    write_distribution_csv(out / ("discrete_" + std::to_string(i) + ".csv"),
                           rep.points[i].discrete_p);
    write_distribution_csv(out / ("continuum_" + std::to_string(i) + ".csv"),
                           rep.points[i].continuum_p);
  }

  json params;
  params["command"] = "converge";
  params["theta_bar"] = a.theta_bar;
  params["gamma_bar"] = a.gamma_bar;
  params["channel"] = a.channel;
  params["t"] = a.t;
  params["sigma"] = a.sigma;
  params["epsilons"] = a.epsilons;

  json metrics;
  metrics["tv"] = json::array();
  for (const ConvergencePoint& pt : rep.points) metrics["tv"].push_back(pt.tv);
  if (rep.fitted_order.has_value()) {
    metrics["fitted_order"] = *rep.fitted_order;
  } else {
    metrics["fitted_order"] = nullptr;
  }
  write_json(out / "summary.json", summary_json(params, metrics));

  std::cout << "converge: " << rep.points.size() << " epsilon points\n";
  for (const ConvergencePoint& pt : rep.points)
    std::cout << "  eps " << format_g17(pt.epsilon) << " -> tv " << format_g17(pt.tv)
              << "\n";
  if (rep.fitted_order.has_value())
    std::cout << "  fitted order " << format_g17(*rep.fitted_order) << "\n";
  std::cout << "  wrote convergence.csv, summary.json\n";
  return 0;
}

// ----------------------------------------------------------- dispersion ----

struct DispersionArgs {
  std::string config, out_dir = ".";
  double theta = 0.0;
  double dx = 1.0;
  double dt = 1.0;
  int samples = 128;
};

int run_dispersion(const CLI::App& cmd, DispersionArgs a) {
  if (!a.config.empty()) {
    const json cfg = load_config(a.config);
    cfg_override(cfg, cmd, "--theta", "theta", a.theta);
    cfg_override(cfg, cmd, "--dx", "dx", a.dx);
    cfg_override(cfg, cmd, "--dt", "dt", a.dt);
    cfg_override(cfg, cmd, "--samples", "samples", a.samples);
  }
  const DispersionTable t = dispersion(a.theta, a.dx, a.dt, a.samples);
  const fs::path out = prepare_out_dir(a.out_dir);
  write_dispersion_csv(out / "dispersion.csv", t);

  json params;
  params["command"] = "dispersion";
  params["theta"] = a.theta;
  params["dx"] = a.dx;
  params["dt"] = a.dt;
  params["samples"] = a.samples;
  json metrics;
  metrics["max_deviation"] = t.max_deviation;
  metrics["k0_gap"] = t.k0_gap;
  write_json(out / "summary.json", summary_json(params, metrics));

  std::cout << "dispersion: " << a.samples << " samples, max deviation "
            << format_g17(t.max_deviation) << ", k0 gap " << format_g17(t.k0_gap)
            << "\n  wrote dispersion.csv, summary.json\n";
  return 0;
}

// -------------------------------------------------------- gellmann-check ----

int run_gellmann_check(const std::string& out_dir) {
  double ortho = 0.0;
  for (int i = 1; i <= 8; ++i)
    for (int j = 1; j <= 8; ++j) {
      const Complex tr = (gellmann(i) * gellmann(j)).trace();
      ortho = std::max(ortho, std::abs(tr - (i == j ? Complex(2.0) : Complex(0.0))));
    }

  // Reconstruction residual over a deterministic matrix family.
  double recon = 0.0;
  for (int s = 0; s < 16; ++s) {
    Matrix3 m;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        m(r, c) = Complex(std::sin(0.7 * s + r + 2 * c), std::cos(1.3 * s - r + c));
    const GellMannCoefficients gc = decompose(m);
    recon = std::max(recon, (reconstruct(gc) - m).cwiseAbs().maxCoeff());
  }

  const GellMannCoefficients g = decompose(generator_g());
  double grover_dec = std::abs(g.trace_part - Complex(2.0 / 3.0));
  const double expect[8] = {-2.0 / 3.0, 0, 0, -2.0 / 3.0, 0, -2.0 / 3.0, 0, 0};
  for (int i = 0; i < 8; ++i) grover_dec = std::max(grover_dec, std::abs(g.c[i] - expect[i]));

  const bool coin_zero_exact = (coin(0.0) - Matrix3::Identity()).cwiseAbs().maxCoeff() == 0.0;

  const fs::path out = prepare_out_dir(out_dir);
  json params;
  params["command"] = "gellmann-check";
  json metrics;
  metrics["orthonormality_defect"] = ortho;
  metrics["reconstruction_defect"] = recon;
  metrics["generator_decomposition_defect"] = grover_dec;
  metrics["coin_zero_exact"] = coin_zero_exact;
  write_json(out / "summary.json", summary_json(params, metrics));

  const bool ok = ortho < 1e-14 && recon < 1e-13 && grover_dec < 1e-14 && coin_zero_exact;
  std::cout << "gellmann-check: orthonormality " << format_g17(ortho)
            << ", reconstruction " << format_g17(recon) << ", coin(0) exact "
            << (coin_zero_exact ? "yes" : "no") << "\n  " << (ok ? "OK" : "FAILED")
            << "; wrote summary.json\n";
  if (!ok) throw std::runtime_error("gellmann-check: residuals out of tolerance");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lazy three-state quantum walk simulator"};
  app.require_subcommand(1);

  WalkArgs wa;
  CLI::App* walk_cmd = app.add_subcommand("walk", "closed (unitary) walk");
  walk_cmd->add_option("--config", wa.config, "JSON config (flags override it)");
  walk_cmd->add_option("--out-dir", wa.out_dir, "output directory");
  walk_cmd->add_option("--steps", wa.steps, "number of steps")->check(CLI::PositiveNumber);
  walk_cmd->add_option("--sites", wa.sites, "lattice sites (odd; 0 = auto 2*steps+3)");
  walk_cmd->add_option("--dx", wa.dx, "lattice spacing");
  walk_cmd->add_option("--coin", wa.coin, "coin family: grover|angle");
  walk_cmd->add_option("--theta", wa.theta, "coin angle (with --coin angle)");
  walk_cmd->add_option("--init", wa.init, "initial state: symmetric|gaussian");
  walk_cmd->add_option("--sigma", wa.sigma, "gaussian width (with --init gaussian)");
  walk_cmd->add_option("--snapshot-every", wa.snapshot_every,
                       "write snapshot_NNNNNN.csv every k steps (0 = off)");

  OpenArgs oa;
  CLI::App* open_cmd = app.add_subcommand("open", "walk with decoherence");
  open_cmd->add_option("--config", oa.config, "JSON config (flags override it)");
  open_cmd->add_option("--out-dir", oa.out_dir, "output directory");
  open_cmd->add_option("--steps", oa.steps, "number of steps")->check(CLI::PositiveNumber);
  open_cmd->add_option("--sites", oa.sites, "lattice sites (odd; 0 = auto 2*steps+3)");
  open_cmd->add_option("--dx", oa.dx, "lattice spacing");
  open_cmd->add_option("--coin", oa.coin, "coin family: grover|angle");
  open_cmd->add_option("--theta", oa.theta, "coin angle (with --coin angle)");
  open_cmd->add_option("--init", oa.init, "initial state: symmetric|gaussian");
  open_cmd->add_option("--sigma", oa.sigma, "gaussian width (with --init gaussian)");
  open_cmd->add_option("--channel", oa.channel, "dephasing channel: coin|spatial")
      ->required();
  open_cmd->add_option("--gamma", oa.gamma, "dephasing strength in [0,1]")
      ->required()
      ->check(CLI::Range(0.0, 1.0));
  open_cmd->add_option("--map", oa.map, "update map: kraus|lindblad-euler");
  open_cmd->add_flag("--allow-wrap", oa.allow_wrap, "disable the light-cone guard");
  open_cmd->add_flag("--check-positivity", oa.check_positivity,
                     "monitor the spectrum every step (slow)");
  open_cmd->add_option("--snapshot-every", oa.snapshot_every,
                       "write snapshot_NNNNNN.csv every k steps (0 = off)");

  ContinuumArgs ca;
  CLI::App* cont_cmd = app.add_subcommand("continuum", "two-point kernel solver");
  cont_cmd->add_option("--config", ca.config, "JSON config (flags override it)");
  cont_cmd->add_option("--out-dir", ca.out_dir, "output directory");
  cont_cmd->add_option("--n", ca.n, "grid cells")->check(CLI::PositiveNumber);
  cont_cmd->add_option("--length", ca.length, "domain length");
  cont_cmd->add_option("--sigma", ca.sigma, "gaussian width (>= 4 h)");
  cont_cmd->add_option("--theta-bar", ca.theta_bar, "coin rate");
  cont_cmd->add_option("--gamma-bar", ca.gamma_bar, "dephasing rate");
  cont_cmd->add_option("--channel", ca.channel, "none|coin|spatial");
  cont_cmd->add_option("--t", ca.t, "final time");
  cont_cmd->add_option("--dt", ca.dt, "RK4 step (0 = stability bound)");
  cont_cmd->add_flag("--force-dt", ca.force_dt, "use --dt even above the bound");
  cont_cmd->add_option("--snapshot-every", ca.snapshot_every,
                       "write snapshot_NNNNNN.csv every k RK4 steps (0 = off)");

  ConvergeArgs va;
  CLI::App* conv_cmd = app.add_subcommand("converge", "discrete -> continuum sweep");
  conv_cmd->add_option("--config", va.config, "JSON config (flags override it)");
  conv_cmd->add_option("--out-dir", va.out_dir, "output directory");
  conv_cmd->add_option("--theta-bar", va.theta_bar, "coin rate");
  conv_cmd->add_option("--gamma-bar", va.gamma_bar, "dephasing rate");
  conv_cmd->add_option("--channel", va.channel, "none|coin|spatial");
  conv_cmd->add_option("--t", va.t, "physical time");
  conv_cmd->add_option("--sigma", va.sigma, "packet width");
  conv_cmd->add_option("--eps", va.epsilons, "epsilon values (repeatable)");

  DispersionArgs da;
  CLI::App* disp_cmd = app.add_subcommand("dispersion", "eigenphase table over the zone");
  disp_cmd->add_option("--config", da.config, "JSON config (flags override it)");
  disp_cmd->add_option("--out-dir", da.out_dir, "output directory");
  disp_cmd->add_option("--theta", da.theta, "coin angle");
  disp_cmd->add_option("--dx", da.dx, "lattice spacing");
  disp_cmd->add_option("--dt", da.dt, "time step");
  disp_cmd->add_option("--samples", da.samples, "k samples across the zone");

  std::string ga_out = ".";
  CLI::App* gm_cmd = app.add_subcommand("gellmann-check", "su(3) self-test");
  gm_cmd->add_option("--out-dir", ga_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*walk_cmd) return run_walk(*walk_cmd, wa);
    if (*open_cmd) return run_open(*open_cmd, oa);
    if (*cont_cmd) return run_continuum(*cont_cmd, ca);
    if (*conv_cmd) return run_converge(*conv_cmd, va);
    if (*disp_cmd) return run_dispersion(*disp_cmd, da);
    if (*gm_cmd) return run_gellmann_check(ga_out);
    std::cerr << "error: no subcommand selected\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "error: output I/O failed: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
