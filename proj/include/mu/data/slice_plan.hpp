#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <vector>

#include "mu/data/dataset.hpp"

namespace mu {

/// 1-based (slice, batch) position of a sample.
struct Location {
  int slice = 0;
  int batch = 0;

  friend bool operator==(const Location&, const Location&) = default;
};

/// Immutable partition of sample ids into S ordered slices, each chunked into
/// batches of at most batch_size ids. Tombstoning returns a new snapshot with
/// the affected slice re-chunked; every other slice is left untouched.
class SlicePlan {
 public:
  static SlicePlan make(std::int64_t n, int num_slices, std::int64_t batch_size, std::uint64_t seed);

  int num_slices() const { return static_cast<int>(slices_.size()); }
  std::int64_t batch_size() const { return batch_size_; }
  std::uint64_t seed() const { return seed_; }
  std::int64_t sample_count() const { return static_cast<std::int64_t>(slice_of_.size()); }
  std::int64_t version() const { return version_; }

  /// Surviving ids of slice i (1-based), in training order.
  std::span<const std::int64_t> slice_ids(int i) const;
  int batch_count(int i) const;
  std::span<const std::int64_t> batch(int i, int j) const;

  Location locate(std::int64_t id) const;
  bool contains(std::int64_t id) const { return id >= 0 && id < sample_count(); }
  bool is_tombstoned(std::int64_t id) const { return tombstones_.contains(id); }
  const std::set<std::int64_t>& tombstones() const { return tombstones_; }

  /// Snapshot with `id` revoked. Idempotent: an already revoked id yields an
  /// identical plan (same version).
  SlicePlan tombstone(std::int64_t id) const;

  /// Ids not yet revoked, ascending.
  std::vector<std::int64_t> live_ids() const;

  /// Rebuilds a plan from its seeds plus a revocation history.
  static SlicePlan restore(std::int64_t n, int num_slices, std::int64_t batch_size, std::uint64_t seed,
                           std::span<const std::int64_t> tombstones, std::int64_t version);

 private:
  SlicePlan() = default;
  void check_slice(int i) const;

  std::int64_t batch_size_ = 128;
  std::uint64_t seed_ = 0;
  std::int64_t version_ = 0;
  std::vector<std::vector<std::int64_t>> slices_;
  std::vector<int> slice_of_;               // 0-based slice per id
  std::vector<std::int64_t> position_;      // index within slices_[slice_of_[id]], -1 once revoked
  std::set<std::int64_t> tombstones_;
};

SlicePlan make_slice_plan(const Dataset& dataset, int num_slices, std::int64_t batch_size, std::uint64_t seed);

}  // namespace mu
