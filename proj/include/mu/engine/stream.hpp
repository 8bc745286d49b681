#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mu/engine/engine.hpp"

namespace mu {

struct RequestRow {
  int index = 0;
  std::int64_t sample_id = -1;
  ExecutedPath path = ExecutedPath::Prs;
  int slice = 0;
  int batch = 0;
  double wall_time_s = 0.0;
};

struct MetricsReport {
  Strategy strategy = Strategy::Hs;
  std::vector<RequestRow> rows;
  double avg_unlearn_time_s = 0.0;
  double pre_accuracy = 0.0;
  double final_accuracy = 0.0;
  int num_slices = 0;
  double phi = 0.0;
  int t = 0;
  int r = 0;
  /// Set when a request failed; rows then hold the requests completed before it.
  bool partial = false;
  std::string error;
};

/// Serves `requests` in order with `strategy`, timing only the unlearning
/// calls, then scores the final parameters on `eval_set`.
MetricsReport process_stream(UnlearningEngine& engine, std::span<const std::int64_t> requests, Strategy strategy,
                             const Dataset& eval_set);

/// `count` distinct live ids drawn uniformly without replacement.
std::vector<std::int64_t> sample_requests(const SlicePlan& plan, std::size_t count, std::uint64_t seed);

}  // namespace mu
