#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "mu/core/adam.hpp"
#include "mu/core/mlp.hpp"

namespace mu {

/// SplitMix64 finalizer; derives independent stream seeds from a base seed
/// and any number of salts.
constexpr std::uint64_t mix_seed(std::uint64_t seed) {
  seed += 0x9E3779B97F4A7C15ULL;
  seed = (seed ^ (seed >> 30)) * 0xBF58476D1CE4E5B9ULL;
  seed = (seed ^ (seed >> 27)) * 0x94D049BB133111EBULL;
  return seed ^ (seed >> 31);
}

template <typename... Salts>
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt, Salts... rest) {
  return mix_seed(mix_seed(seed) ^ salt, static_cast<std::uint64_t>(rest)...);
}

/// Gathers the given rows into a batch.
template <typename Scalar, typename Derived>
Batch<Scalar> gather_batch(const Eigen::MatrixBase<Derived>& features, std::span<const int> labels,
                           std::span<const std::int64_t> ids) {
  Batch<Scalar> batch;
  batch.features.resize(static_cast<Index>(ids.size()), features.cols());
  batch.labels.resize(ids.size());
  batch.sample_ids.assign(ids.begin(), ids.end());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    batch.features.row(static_cast<Index>(r)) = features.row(ids[r]).template cast<Scalar>();
    batch.labels[r] = labels[static_cast<std::size_t>(ids[r])];
  }
  return batch;
}

struct FitOptions {
  int epochs = 1;
  Index batch_size = 128;
  std::uint64_t seed = 0;
  int grid_bits = 0;
};

/// Plain mini-batch Adam over all rows, reshuffled every epoch. Returns the
/// mean batch loss of the final epoch.
template <typename Scalar, typename Derived>
double fit(ParamVector<Scalar>& params, OptimizerState<Scalar>& state, const Eigen::MatrixBase<Derived>& features,
           std::span<const int> labels, const FitOptions& options) {
  if (features.rows() == 0) throw Error(ErrorKind::EmptyInput, "fit on an empty dataset");
  if (options.epochs < 1 || options.batch_size < 1)
    throw Error(ErrorKind::InvalidArgument, "fit needs epochs >= 1 and batch_size >= 1");
  std::vector<std::int64_t> order(static_cast<std::size_t>(features.rows()));
  std::iota(order.begin(), order.end(), std::int64_t{0});
  double epoch_loss = 0.0;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::mt19937_64 rng(mix_seed(options.seed, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(options.batch_size)) {
      const std::size_t len = std::min(static_cast<std::size_t>(options.batch_size), order.size() - start);
      const auto batch = gather_batch<Scalar>(features, labels, std::span(order).subspan(start, len));
      const auto lg = loss_grad(params, batch);
      adam_step(params, state, lg.grad);
      snap_to_grid(params, options.grid_bits);
      epoch_loss += lg.loss;
      ++batches;
    }
    if (!params.all_finite()) throw Error(ErrorKind::TrainingDiverged, "parameters became non-finite");
    epoch_loss /= static_cast<double>(batches);
  }
  return epoch_loss;
}

}  // namespace mu
