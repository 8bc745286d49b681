#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mu/cost/cost_model.hpp"
#include "mu/data/dataset.hpp"
#include "mu/data/slice_plan.hpp"
#include "mu/store/state_store.hpp"

namespace mu {

/// Requested unlearning strategy. Prs is the SISA baseline (always retrain).
enum class Strategy { Prs, Dpus, Hs, Ohs };

/// Branch actually taken for one request.
enum class ExecutedPath { Prs, Dpus, Ohs, NoopConsumed };

std::string_view to_string(Strategy strategy);
std::string_view to_string(ExecutedPath path);
/// Accepts prs, sisa, dpus, hs, ohs (case-insensitive).
Strategy parse_strategy(std::string_view text);

struct TrainConfig {
  int num_slices = 4;
  std::int64_t batch_size = 128;
  double learning_rate = 0.005;
  int epochs_per_slice = 1;
  double phi = 0.0;
  std::uint64_t shuffle_seed = 0;
  std::uint64_t init_seed = 0;
  std::vector<Index> hidden_dims{128, 128};
  /// Overrides the OHS retrain depth r.
  std::optional<int> ohs_depth;
  /// Overrides the increment recording limit (default: the dispatch threshold t).
  std::optional<int> record_limit;
  /// Parameters live on a 2^-grid_bits grid so increments subtract exactly;
  /// 0 disables snapping.
  int grid_bits = 20;

  void validate() const;
};

struct Model {
  ParameterVector params;
  std::int64_t plan_version = 0;
  std::string dataset_name;
};

struct UnlearnOutcome {
  ExecutedPath path = ExecutedPath::Prs;
  std::int64_t sample_id = -1;
  Location located_at;
  double wall_time_s = 0.0;
  ParameterVector params_after;
  std::vector<int> checkpoints_rewritten;
};

/// Sliced trainer with per-slice checkpoints and a per-batch increment
/// ledger, serving revocation requests with the four strategies. All
/// mutation goes through one instance; copies are independent.
class UnlearningEngine {
 public:
  UnlearningEngine(std::shared_ptr<const Dataset> dataset, TrainConfig config);

  /// Rebuilds an engine from a persisted store trained on `dataset`.
  static UnlearningEngine restore(std::shared_ptr<const Dataset> dataset, StateStore store);

  /// Trains every slice from fresh initial parameters.
  const Model& train();

  UnlearnOutcome unlearn(std::int64_t id, Strategy strategy);
  UnlearnOutcome unlearn_prs(std::int64_t id);
  /// Subtracts the batch increment. Without `force`, ids in slices >= t are
  /// rejected with a dispatch error.
  UnlearnOutcome unlearn_dpus(std::int64_t id, bool force = false);
  UnlearnOutcome unlearn_hs(std::int64_t id);
  UnlearnOutcome unlearn_ohs(std::int64_t id);

  /// Drops increments of slices >= limit and stops recording them.
  void restrict_ledger(int limit);

  const Model& model() const { return model_; }
  const SlicePlan& plan() const { return plan_; }
  const StateStore& store() const { return store_; }
  const ThresholdResult& thresholds() const { return thresholds_; }
  const TrainConfig& config() const { return config_; }
  const Dataset& dataset() const { return *dataset_; }
  const ModelLayout& layout() const { return layout_; }
  bool trained() const { return trained_; }

 private:
  Location locate(std::int64_t id) const;
  void retrain_from(int first_slice);
  void train_slice(int i, ParameterVector& params, OptimizerState<float>& opt);
  void revoke(std::int64_t id);
  void subtract_increment(const IncrementRecord& record, int last_checkpoint, std::vector<int>& rewritten);
  void sync_model();
  UnlearnOutcome dpus_path(std::int64_t id, const Location& at);
  void require_trained() const;

  std::shared_ptr<const Dataset> dataset_;
  TrainConfig config_;
  ModelLayout layout_;
  ThresholdResult thresholds_;
  SlicePlan plan_;
  StateStore store_;
  Model model_;
  bool trained_ = false;
};

}  // namespace mu
