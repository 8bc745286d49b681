#pragma once

#include <filesystem>
#include <string>

#include "mu/engine/stream.hpp"

namespace mu::bench {

/// Compiler, Eigen version, host and core count.
std::string environment_fingerprint_json();

/// Full report (rows + summary + config hash + environment) as JSON.
std::string report_json(const MetricsReport& report, const std::string& config_hash);

/// RFC-4180 CSV: one row per request, then `summary` rows carrying the
/// average time and accuracies in the wall_time_s column.
std::string report_csv(const MetricsReport& report);

/// Escapes one CSV field per RFC-4180.
std::string csv_field(const std::string& text);

void write_params(const std::filesystem::path& path, const ParameterVector& params, int slice);
ParameterVector read_params(const std::filesystem::path& path, const ModelLayout& layout);

}  // namespace mu::bench
