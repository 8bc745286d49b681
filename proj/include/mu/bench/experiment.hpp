#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mu/engine/engine.hpp"
#include "mu/mia/auditor.hpp"

namespace mu::bench {

/// Invalid or inconsistent experiment configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct SyntheticSource {
  std::int64_t n = 2000;
  Index dim = 20;
  std::uint64_t seed = 0;
  double noise = 0.1;
};

struct ExperimentConfig {
  // Data: a CSV path wins over the synthetic generator.
  std::optional<std::string> csv_path;
  std::string label_column = "label";
  SyntheticSource synthetic;
  double test_fraction = 0.2;
  std::uint64_t split_seed = 0;

  // Training.
  int num_slices = 4;
  std::int64_t batch_size = 128;
  double learning_rate = 0.005;
  int epochs_per_slice = 1;
  double phi = 0.0;
  std::vector<Index> hidden_dims{128, 128};
  std::optional<int> ohs_depth;
  int grid_bits = 20;
  std::uint64_t shuffle_seed = 0;
  std::uint64_t init_seed = 0;

  // Replay.
  Strategy strategy = Strategy::Hs;
  int request_count = 100;
  std::uint64_t request_seed = 0;
  std::vector<Strategy> compare_strategies{Strategy::Dpus, Strategy::Prs, Strategy::Hs, Strategy::Ohs};
  std::vector<int> compare_slices{4, 8};

  // Audit.
  int shadow_count = 4;
  std::optional<int> shadow_epochs;
  AttackConfig attack;
  std::uint64_t mia_seed = 0;

  std::string output_dir;

  /// Throws ConfigError naming the first offending field.
  void validate() const;

  /// Canonical JSON form; from_json accepts any subset of keys.
  std::string to_json() const;
  static ExperimentConfig from_json(const std::string& text);
  static ExperimentConfig from_file(const std::filesystem::path& path);

  /// CRC32 of the canonical JSON, excluding output_dir.
  std::string hash() const;

  TrainConfig train_config(std::optional<int> slices_override = std::nullopt) const;
};

struct PreparedData {
  Dataset train;
  Dataset test;
};

/// Loads or generates the dataset and applies the seeded train/test split.
PreparedData prepare_data(const ExperimentConfig& config);

/// Output directory: the config's, else $MU_OUTPUT_DIR, else ./mu-output.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config);

}  // namespace mu::bench
