#include "mu/bench/reports.hpp"

#include <sys/utsname.h>

#include <cstdio>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "mu/store/binary_format.hpp"

namespace mu::bench {

using nlohmann::json;

namespace {

std::string format_real(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

json environment_json() {
  json env;
#if defined(__VERSION__)
  env["compiler"] = __VERSION__;
#endif
  env["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                 std::to_string(EIGEN_MINOR_VERSION);
  env["hardware_concurrency"] = std::thread::hardware_concurrency();
  utsname info{};
  if (uname(&info) == 0) {
    env["system"] = info.sysname;
    env["release"] = info.release;
    env["machine"] = info.machine;
  }
  return env;
}

}  // namespace

std::string environment_fingerprint_json() { return environment_json().dump(); }

std::string report_json(const MetricsReport& report, const std::string& config_hash) {
  json rows = json::array();
  for (const auto& row : report.rows)
    rows.push_back({{"index", row.index},
                    {"sample_id", row.sample_id},
                    {"strategy_executed", std::string(to_string(row.path))},
                    {"slice", row.slice},
                    {"batch", row.batch},
                    {"wall_time_s", row.wall_time_s}});
  json summary = {{"strategy", std::string(to_string(report.strategy))},
                  {"requests", report.rows.size()},
                  {"avg_unlearn_time_s", report.avg_unlearn_time_s},
                  {"pre_accuracy", report.pre_accuracy},
                  {"final_accuracy", report.final_accuracy},
                  {"S", report.num_slices},
                  {"phi", report.phi},
                  {"t", report.t},
                  {"r", report.r},
                  {"partial", report.partial}};
  if (report.partial) summary["error"] = report.error;
  json out = {{"config_hash", config_hash},
              {"request_stream", "one stream shared by every strategy run from this config"},
              {"rows", rows},
              {"summary", summary},
              {"environment", environment_json()}};
  return out.dump(2) + "\n";
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\r\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string report_csv(const MetricsReport& report) {
  std::ostringstream out;
  out << "index,sample_id,strategy_executed,slice,batch,wall_time_s\r\n";
  for (const auto& row : report.rows)
    out << row.index << ',' << row.sample_id << ',' << csv_field(std::string(to_string(row.path))) << ','
        << row.slice << ',' << row.batch << ',' << format_real(row.wall_time_s) << "\r\n";
  out << "summary,,avg_unlearn_time_s,,," << format_real(report.avg_unlearn_time_s) << "\r\n";
  out << "summary,,pre_accuracy,,," << format_real(report.pre_accuracy) << "\r\n";
  out << "summary,,final_accuracy,,," << format_real(report.final_accuracy) << "\r\n";
  return out.str();
}

void write_params(const std::filesystem::path& path, const ParameterVector& params, int slice) {
  write_vector_file(path, static_cast<std::uint32_t>(slice), kCheckpointBatch,
                    std::span<const float>(params.values.data(), static_cast<std::size_t>(params.size())));
}

ParameterVector read_params(const std::filesystem::path& path, const ModelLayout& layout) {
  const VectorFile file = read_vector_file(path);
  if (static_cast<Index>(file.values.size()) != layout.param_count())
    throw Error(ErrorKind::Shape, path.string() + ": parameter count does not match the model layout");
  return ParameterVector(layout, Eigen::Map<const Vector<float>>(file.values.data(), layout.param_count()));
}

}  // namespace mu::bench
