#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mu/core/types.hpp"

namespace mu {

/// Binary-labelled numeric samples. Sample ids are the row indices 0..n-1.
struct Dataset {
  std::string name;
  Matrix<float> features;
  std::vector<int> labels;
  std::vector<std::string> feature_names;

  std::int64_t size() const { return static_cast<std::int64_t>(labels.size()); }
  Index feature_dim() const { return features.cols(); }

  Batch<float> gather(std::span<const std::int64_t> ids) const;

  /// Rows `ids` as a new dataset with dense ids in the given order.
  Dataset subset(std::span<const std::int64_t> ids, std::string subset_name) const;

  /// CRC32 over dimensions, feature bytes and labels, as 8 hex digits.
  std::string fingerprint() const;
};

/// Reads a headered numeric CSV. Every non-label column becomes a feature.
Dataset load_csv(const std::filesystem::path& path, const std::string& label_column);

/// Writes the dataset in the format load_csv reads back.
void write_csv(const Dataset& dataset, const std::filesystem::path& path, const std::string& label_column = "label");

/// Gaussian features and a seed-derived linear teacher:
/// label = [w . x + noise > 0] with noise ~ N(0, noise_stddev^2).
Dataset gen_synthetic(std::int64_t n, Index dim, std::uint64_t seed, double noise_stddev = 0.1);

/// Seeded shuffle, then the first round(n * test_fraction) rows go to the
/// test set. Both halves get dense ids.
std::pair<Dataset, Dataset> train_test_split(const Dataset& dataset, double test_fraction, std::uint64_t seed);

/// Accuracy of argmax predictions; ties resolve to the lower class.
double evaluate(const ParameterVector& params, const Dataset& dataset);

}  // namespace mu
