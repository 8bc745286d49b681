#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mu/core/adam.hpp"
#include "mu/core/types.hpp"

namespace mu {

/// Parameters and optimizer state after slice `slice_index` (0 = initial).
struct Checkpoint {
  int slice_index = 0;
  ParameterVector params;
  OptimizerState<float> opt_state;
  std::int64_t plan_version = 0;
};

/// Parameter change produced by one batch during the training of its slice.
struct IncrementRecord {
  int slice_index = 0;
  int batch_index = 0;
  ParameterVector delta;
  bool consumed = false;
  /// Members of the batch when the increment was recorded.
  std::vector<std::int64_t> sample_ids;
};

struct StoreManifest {
  std::uint32_t format_version = 1;
  ModelLayout layout;
  int num_slices = 1;
  /// Increments may only be recorded for slice indices below this limit.
  int record_limit = 1;
  std::int64_t n = 0;
  std::int64_t batch_size = 128;
  std::uint64_t shuffle_seed = 0;
  std::uint64_t init_seed = 0;
  AdamHyper hyper;
  int epochs_per_slice = 1;
  int grid_bits = 0;
  double phi = 0.0;
  /// Configured OHS depth, or -1 for the cost-model default.
  int ohs_depth = -1;
  std::string dataset_fingerprint;
  std::int64_t plan_version = 0;
  std::vector<std::int64_t> tombstones;
};

/// In-memory checkpoint and increment ledger with a versioned on-disk form:
/// manifest.json plus one checksummed vector file per entry.
class StateStore {
 public:
  StateStore() = default;
  explicit StateStore(StoreManifest manifest) : manifest_(std::move(manifest)) {}

  const StoreManifest& manifest() const { return manifest_; }
  StoreManifest& manifest() { return manifest_; }

  void put_checkpoint(Checkpoint checkpoint);
  const Checkpoint& get_checkpoint(int i) const;
  bool has_checkpoint(int i) const { return checkpoints_.contains(i); }
  std::size_t checkpoint_count() const { return checkpoints_.size(); }
  /// Mutable access for in-place rewrites by the unlearning engine.
  Checkpoint& checkpoint(int i);

  void record_increment(int i, int j, ParameterVector delta, std::vector<std::int64_t> sample_ids);
  const IncrementRecord& get_increment(int i, int j) const;
  bool has_increment(int i, int j) const { return increments_.contains({i, j}); }
  std::size_t increment_count() const { return increments_.size(); }

  /// Flips the consumed flag. Returns false, leaving the record unchanged,
  /// when it was already consumed.
  bool mark_consumed(int i, int j);

  /// The record of slice i whose batch contained `id`, or nullptr.
  const IncrementRecord* find_increment(int i, std::int64_t id) const;

  /// Removes every record of slice i (stale after retraining it).
  void drop_increments(int i);

  /// Changes the recording policy, discarding records at or above the limit.
  void set_record_limit(int limit);

  /// Bytes held by checkpoint and increment vectors.
  std::size_t footprint_bytes() const;

  void persist(const std::filesystem::path& dir) const;
  static StateStore load(const std::filesystem::path& dir);

  auto begin_increments() const { return increments_.begin(); }
  auto end_increments() const { return increments_.end(); }

 private:
  StoreManifest manifest_;
  std::map<int, Checkpoint> checkpoints_;
  std::map<std::pair<int, int>, IncrementRecord> increments_;
  std::unordered_map<std::int64_t, std::pair<int, int>> owner_;
};

}  // namespace mu
