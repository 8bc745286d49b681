#include "mu/data/slice_plan.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "mu/core/trainer.hpp"

namespace mu {

SlicePlan SlicePlan::make(std::int64_t n, int num_slices, std::int64_t batch_size, std::uint64_t seed) {
  if (num_slices < 1) throw Error(ErrorKind::InvalidArgument, "number of slices must be >= 1");
  if (num_slices > n)
    throw Error(ErrorKind::InvalidArgument,
                "number of slices " + std::to_string(num_slices) + " exceeds sample count " + std::to_string(n));
  if (batch_size < 1) throw Error(ErrorKind::InvalidArgument, "batch size must be >= 1");

  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), std::int64_t{0});
  std::mt19937_64 rng(mix_seed(seed, 0x511CEULL));
  std::shuffle(order.begin(), order.end(), rng);

  SlicePlan plan;
  plan.batch_size_ = batch_size;
  plan.seed_ = seed;
  plan.slices_.resize(static_cast<std::size_t>(num_slices));
  plan.slice_of_.resize(static_cast<std::size_t>(n));
  plan.position_.resize(static_cast<std::size_t>(n));
  const std::int64_t base = n / num_slices;
  const std::int64_t extra = n % num_slices;
  std::size_t cursor = 0;
  for (int s = 0; s < num_slices; ++s) {
    const std::int64_t len = base + (s < extra ? 1 : 0);
    auto& slice = plan.slices_[static_cast<std::size_t>(s)];
    slice.assign(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                 order.begin() + static_cast<std::ptrdiff_t>(cursor + static_cast<std::size_t>(len)));
    for (std::size_t k = 0; k < slice.size(); ++k) {
      plan.slice_of_[static_cast<std::size_t>(slice[k])] = s;
      plan.position_[static_cast<std::size_t>(slice[k])] = static_cast<std::int64_t>(k);
    }
    cursor += static_cast<std::size_t>(len);
  }
  return plan;
}

void SlicePlan::check_slice(int i) const {
  if (i < 1 || i > num_slices())
    throw Error(ErrorKind::NotFound, "slice index " + std::to_string(i) + " outside 1.." + std::to_string(num_slices()));
}

std::span<const std::int64_t> SlicePlan::slice_ids(int i) const {
  check_slice(i);
  return slices_[static_cast<std::size_t>(i - 1)];
}

int SlicePlan::batch_count(int i) const {
  const auto ids = slice_ids(i);
  return static_cast<int>((static_cast<std::int64_t>(ids.size()) + batch_size_ - 1) / batch_size_);
}

std::span<const std::int64_t> SlicePlan::batch(int i, int j) const {
  const auto ids = slice_ids(i);
  if (j < 1 || j > batch_count(i))
    throw Error(ErrorKind::NotFound, "batch " + std::to_string(j) + " not in slice " + std::to_string(i));
  const auto start = static_cast<std::size_t>((j - 1) * batch_size_);
  return ids.subspan(start, std::min(static_cast<std::size_t>(batch_size_), ids.size() - start));
}

Location SlicePlan::locate(std::int64_t id) const {
  if (!contains(id)) throw Error(ErrorKind::NotFound, "sample id " + std::to_string(id) + " is not in the plan");
  if (is_tombstoned(id)) throw Error(ErrorKind::AlreadyRevoked, "sample id " + std::to_string(id) + " was already revoked");
  const auto pos = position_[static_cast<std::size_t>(id)];
  return {slice_of_[static_cast<std::size_t>(id)] + 1, static_cast<int>(pos / batch_size_) + 1};
}

SlicePlan SlicePlan::tombstone(std::int64_t id) const {
  if (!contains(id)) throw Error(ErrorKind::NotFound, "sample id " + std::to_string(id) + " is not in the plan");
  if (is_tombstoned(id)) return *this;
  SlicePlan next = *this;
  next.tombstones_.insert(id);
  next.version_ = version_ + 1;
  const auto s = static_cast<std::size_t>(slice_of_[static_cast<std::size_t>(id)]);
  auto& slice = next.slices_[s];
  slice.erase(slice.begin() + static_cast<std::ptrdiff_t>(position_[static_cast<std::size_t>(id)]));
  for (std::size_t k = 0; k < slice.size(); ++k) next.position_[static_cast<std::size_t>(slice[k])] = static_cast<std::int64_t>(k);
  next.position_[static_cast<std::size_t>(id)] = -1;
  return next;
}

std::vector<std::int64_t> SlicePlan::live_ids() const {
  std::vector<std::int64_t> out;
  out.reserve(slice_of_.size() - tombstones_.size());
  for (std::int64_t id = 0; id < sample_count(); ++id)
    if (!is_tombstoned(id)) out.push_back(id);
  return out;
}

SlicePlan SlicePlan::restore(std::int64_t n, int num_slices, std::int64_t batch_size, std::uint64_t seed,
                             std::span<const std::int64_t> tombstones, std::int64_t version) {
  SlicePlan plan = make(n, num_slices, batch_size, seed);
  for (auto id : tombstones) plan = plan.tombstone(id);
  plan.version_ = version;
  return plan;
}

SlicePlan make_slice_plan(const Dataset& dataset, int num_slices, std::int64_t batch_size, std::uint64_t seed) {
  return SlicePlan::make(dataset.size(), num_slices, batch_size, seed);
}

}  // namespace mu
