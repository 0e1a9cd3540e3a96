#pragma once
// Deterministic CSV / JSON emission shared by the CLI and tests.
// Floating point goes out with 17 significant digits (round-trip exact),
// UTF-8, LF line endings.

#include <filesystem>
#include <string>

#include "json.hpp"
#include "lazywalk/analysis.hpp"
#include "lazywalk/distribution.hpp"

namespace lazywalk {

std::string format_g17(double v);

void write_distribution_csv(const std::filesystem::path& file,
                            const ProbabilityDistribution& p);
void write_dispersion_csv(const std::filesystem::path& file, const DispersionTable& t);
void write_text_file(const std::filesystem::path& file, const std::string& content);

// {"v": 1, "params": ..., "metrics": ...}
nlohmann::json summary_json(const nlohmann::json& params, const nlohmann::json& metrics);
void write_json(const std::filesystem::path& file, const nlohmann::json& j);

}  // namespace lazywalk
