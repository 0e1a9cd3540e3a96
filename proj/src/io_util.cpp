#include "lazywalk/io_util.hpp"

#include <cstdio>
#include <fstream>
#include <string>

namespace lazywalk {
namespace {

std::ofstream open_for_write(const std::filesystem::path& file) {
  std::ofstream out;
  out.exceptions(std::ofstream::failbit | std::ofstream::badbit);
  out.open(file, std::ios::binary);  // binary: we control line endings (LF)
  return out;
}

}  // namespace

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_distribution_csv(const std::filesystem::path& file,
                            const ProbabilityDistribution& p) {
  std::ofstream out = open_for_write(file);
  out << "x,probability\n";
  for (size_t i = 0; i < p.x.size(); ++i)
    out << format_g17(p.x[i]) << ',' << format_g17(p.p[i]) << '\n';
}

void write_dispersion_csv(const std::filesystem::path& file, const DispersionTable& t) {
  std::ofstream out = open_for_write(file);
  out << "k,phase1,phase2,phase3,h1,h2,h3\n";
  for (const DispersionRow& row : t.rows) {
    out << format_g17(row.k);
    for (int i = 0; i < 3; ++i) out << ',' << format_g17(row.phase[i]);
    for (int i = 0; i < 3; ++i) out << ',' << format_g17(row.h[i]);
    out << '\n';
  }
}

void write_text_file(const std::filesystem::path& file, const std::string& content) {
  std::ofstream out = open_for_write(file);
  out << content;
}

nlohmann::json summary_json(const nlohmann::json& params, const nlohmann::json& metrics) {
  nlohmann::json j;
  j["v"] = 1;
  j["params"] = params;
  j["metrics"] = metrics;
  return j;
}

void write_json(const std::filesystem::path& file, const nlohmann::json& j) {
  write_text_file(file, j.dump(2) + "\n");
}

}  // namespace lazywalk
