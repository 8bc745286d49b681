#include "mu/cost/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mu/error.hpp"

namespace mu {

void CostConfig::validate() const {
  if (num_slices < 1) throw Error(ErrorKind::InvalidArgument, "S must be >= 1");
  if (n < num_slices) throw Error(ErrorKind::InvalidArgument, "n must be >= S");
  if (!(phi >= 0.0) || !std::isfinite(phi)) throw Error(ErrorKind::InvalidArgument, "phi must be finite and >= 0");
}

double retrain_cost(int i, const CostConfig& config) {
  config.validate();
  if (i < 1 || i > config.num_slices)
    throw Error(ErrorKind::InvalidArgument,
                "slice index " + std::to_string(i) + " outside 1.." + std::to_string(config.num_slices));
  const auto s = static_cast<std::int64_t>(config.num_slices);
  const auto k = static_cast<std::int64_t>(i);
  // Sum of k..S as an exact integer before the single division.
  const std::int64_t index_sum = (s * (s + 1) - (k - 1) * k) / 2;
  return static_cast<double>(config.n) * static_cast<double>(index_sum) / static_cast<double>(s);
}

ThresholdResult threshold(const CostConfig& config, std::optional<int> depth_override) {
  config.validate();
  ThresholdResult result;
  const int s = config.num_slices;
  result.costs.reserve(static_cast<std::size_t>(s));
  for (int i = 1; i <= s; ++i) result.costs.push_back(retrain_cost(i, config));

  // Costs decrease strictly in i, so the affordable set is a suffix.
  result.t = s + 1;
  for (int i = s; i >= 1 && result.costs[static_cast<std::size_t>(i - 1)] <= config.phi; --i) result.t = i;
  result.r = result.t <= s ? s - result.t + 1 : 0;
  if (depth_override) result.r = std::clamp(*depth_override, 0, s);
  return result;
}

}  // namespace mu
