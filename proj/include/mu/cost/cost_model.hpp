#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace mu {

/// Inputs of the retraining-cost model. Costs are counted in samples read.
struct CostConfig {
  std::int64_t n = 0;
  int num_slices = 1;
  double phi = 0.0;

  void validate() const;
};

struct ThresholdResult {
  /// Dispatch threshold: slices with index < t take the parameter-update path.
  /// Equals num_slices + 1 when no retraining start is affordable.
  int t = 1;
  /// Trailing slices retrained by the optimized hybrid strategy.
  int r = 0;
  /// costs[k] = retrain_cost(k + 1).
  std::vector<double> costs;
};

/// Samples read when retraining resumes at slice i:
/// (n / S) * (i + (i + 1) + ... + S).
double retrain_cost(int i, const CostConfig& config);

/// t = min { i : retrain_cost(i) <= phi } (S + 1 if none), r = S - t + 1.
/// A configured depth replaces the default r (clamped to 0..S).
ThresholdResult threshold(const CostConfig& config, std::optional<int> depth_override = std::nullopt);

}  // namespace mu
