#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "mu/bench/experiment.hpp"

namespace mu::bench {

/// Exit codes shared by every command.
enum ExitCode : int { kOk = 0, kRuntimeFailure = 1, kConfigError = 2 };

/// Trains and persists `<output>/store`, `<output>/model.muck` and
/// `<output>/config.json`. Refuses to overwrite an existing store unless
/// `force` is set.
int cmd_train(const ExperimentConfig& config, bool force, std::ostream& out, std::ostream& err);

/// Replays request_count revocations against the persisted store and writes
/// report.json, report.csv, revoked.json and model_after.muck.
int cmd_replay(const ExperimentConfig& config, std::ostream& out, std::ostream& err);

/// Trains once per S and replays one shared request stream per strategy.
/// With several configs, each contributes its `strategy`; all must describe
/// the same dataset and training seeds. Writes compare.csv and compare.json.
int cmd_compare(const std::vector<ExperimentConfig>& configs, std::ostream& out, std::ostream& err);

/// Shadow-model membership audit of the revoked ids, before vs after the
/// replay. With `null_calibration`, also reports an attack trained on
/// shuffled membership labels.
int cmd_audit(const ExperimentConfig& config, bool null_calibration, std::ostream& out, std::ostream& err);

/// Prints {costs, t, r} for the retraining-cost model.
int cmd_cost(std::int64_t n, int num_slices, double phi, std::ostream& out, std::ostream& err);

}  // namespace mu::bench
