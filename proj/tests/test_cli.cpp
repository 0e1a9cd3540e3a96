// End-to-end checks of the command-line driver: exit codes, file outputs,
// config/flag precedence, and byte-level determinism of reruns.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#ifndef LAZYWALK_CLI_PATH
#error "LAZYWALK_CLI_PATH must point at the built CLI binary"
#endif

#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string("\"") + LAZYWALK_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::current_path() / "cli_scratch" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_summary(const fs::path& dir) {
  return json::parse(slurp(dir / "summary.json"));
}

}  // namespace

TEST_CASE("help exits cleanly") {
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("walk --help") == 0);
  CHECK(run_cli("continuum --help") == 0);
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(run_cli("") == 2);                       // missing subcommand
  CHECK(run_cli("walk --no-such-flag") == 2);    // unknown option
  CHECK(run_cli("open --channel coin") == 2);    // missing required --gamma
  CHECK(run_cli("frobnicate") == 2);             // unknown subcommand
}

TEST_CASE("walk writes distribution and summary") {
  const fs::path dir = fresh_dir("walk_basic");
  CHECK(run_cli("walk --steps 12 --out-dir \"" + dir.string() + "\"") == 0);

  const std::string csv = slurp(dir / "distribution.csv");
  CHECK(csv.rfind("x,probability\n", 0) == 0);

  const json s = read_summary(dir);
  CHECK(s.at("v").get<int>() == 1);
  CHECK(s.at("params").at("steps").get<int>() == 12);
  CHECK(s.at("params").at("sites").get<int>() == 27);  // auto 2*steps + 3
  CHECK(s.at("metrics").at("norm_defect").get<double>() < 1e-12);
  const double total_side = s.at("metrics").at("side_mass").get<double>();
  CHECK(total_side >= 0.0);
  CHECK(total_side <= 1.0);
}

TEST_CASE("reruns are byte-identical") {
  const fs::path a = fresh_dir("det_a");
  const fs::path b = fresh_dir("det_b");
  const std::string args = "walk --steps 20 --coin angle --theta 1.25 --init gaussian --sigma 3";
  CHECK(run_cli(args + " --out-dir \"" + a.string() + "\"") == 0);
  CHECK(run_cli(args + " --out-dir \"" + b.string() + "\"") == 0);
  CHECK(slurp(a / "distribution.csv") == slurp(b / "distribution.csv"));
  CHECK(slurp(a / "summary.json") == slurp(b / "summary.json"));
}

TEST_CASE("config supplies defaults, flags win") {
  const fs::path dir = fresh_dir("config_override");
  const fs::path cfg = dir / "cfg.json";
  {
    std::ofstream out(cfg);
    out << R"({"steps": 8, "dx": 0.5})";
  }
  CHECK(run_cli("walk --config \"" + cfg.string() + "\" --steps 4 --out-dir \"" +
                dir.string() + "\"") == 0);
  const json s = read_summary(dir);
  CHECK(s.at("params").at("steps").get<int>() == 4);            // flag beats config
  CHECK(s.at("params").at("dx").get<double>() == doctest::Approx(0.5));  // config beats default

  // Malformed config is a configuration error.
  const fs::path bad = dir / "bad.json";
  {
    std::ofstream out(bad);
    out << "{not json";
  }
  CHECK(run_cli("walk --config \"" + bad.string() + "\" --out-dir \"" + dir.string() +
                "\"") == 2);
  CHECK(run_cli("walk --config \"" + (dir / "missing.json").string() + "\"") == 2);
}

TEST_CASE("open channel runs and validates") {
  const fs::path dir = fresh_dir("open_basic");
  CHECK(run_cli("open --steps 10 --channel coin --gamma 0.4 --out-dir \"" +
                dir.string() + "\"") == 0);
  const json s = read_summary(dir);
  CHECK(s.at("metrics").at("trace_defect").get<double>() < 1e-10);
  CHECK(s.at("metrics").at("hermiticity_defect").get<double>() < 1e-12);
  CHECK(s.at("params").at("channel").get<std::string>() == "coin");

  CHECK(run_cli("open --steps 10 --channel coin --gamma 1.5") == 2);   // out of range
  CHECK(run_cli("open --steps 10 --channel bogus --gamma 0.2") == 2);  // bad channel
  // Light-cone guard: 11 sites cannot hold 10 steps.
  CHECK(run_cli("open --steps 10 --sites 11 --channel coin --gamma 0.2") == 2);
}

TEST_CASE("walk rejects geometry violations with code 2") {
  CHECK(run_cli("walk --steps 10 --sites 11") == 2);  // light cone
  CHECK(run_cli("walk --steps 10 --sites 24") == 2);  // even lattice
}

TEST_CASE("continuum runs; forced unstable step exits 3") {
  const fs::path dir = fresh_dir("continuum_basic");
  CHECK(run_cli("continuum --n 33 --length 8 --sigma 1 --theta-bar 1 --t 0.1 --out-dir \"" +
                dir.string() + "\"") == 0);
  const json s = read_summary(dir);
  CHECK(s.at("metrics").at("trace_drift").get<double>() < 1e-8);
  CHECK(s.at("metrics").at("steps").get<int>() >= 1);

  const fs::path dir2 = fresh_dir("continuum_diverge");
  CHECK(run_cli("continuum --n 32 --length 4 --sigma 0.5 --theta-bar 1 --t 60"
                " --dt 1.0 --force-dt --out-dir \"" +
                dir2.string() + "\"") == 3);
}

TEST_CASE("dispersion table lands on disk") {
  const fs::path dir = fresh_dir("dispersion_basic");
  CHECK(run_cli("dispersion --theta 0 --dx 0.5 --dt 0.5 --samples 16 --out-dir \"" +
                dir.string() + "\"") == 0);
  const std::string csv = slurp(dir / "dispersion.csv");
  CHECK(csv.rfind("k,phase1,phase2,phase3,h1,h2,h3\n", 0) == 0);
  const json s = read_summary(dir);
  CHECK(s.at("metrics").at("max_deviation").get<double>() < 1e-12);
}

TEST_CASE("gellmann self-check passes") {
  const fs::path dir = fresh_dir("gm_check");
  CHECK(run_cli("gellmann-check --out-dir \"" + dir.string() + "\"") == 0);
  const json s = read_summary(dir);
  CHECK(s.at("metrics").at("coin_zero_exact").get<bool>());
}

TEST_CASE("unwritable output directory exits 4") {
  const fs::path dir = fresh_dir("io_fail");
  const fs::path blocker = dir / "blocker";
  {
    std::ofstream out(blocker);
    out << "in the way\n";
  }
  // create_directories through a regular file must fail.
  CHECK(run_cli("walk --steps 4 --out-dir \"" + (blocker / "sub").string() + "\"") == 4);
}
