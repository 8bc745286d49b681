#include "mu/engine/engine.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <numeric>
#include <random>

#include "mu/core/mlp.hpp"
#include "mu/core/trainer.hpp"

namespace mu {

std::string_view to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::Prs: return "sisa";
    case Strategy::Dpus: return "dpus";
    case Strategy::Hs: return "hs";
    case Strategy::Ohs: return "ohs";
  }
  return "unknown";
}

std::string_view to_string(ExecutedPath path) {
  switch (path) {
    case ExecutedPath::Prs: return "PRS-path";
    case ExecutedPath::Dpus: return "DPUS-path";
    case ExecutedPath::Ohs: return "OHS-path";
    case ExecutedPath::NoopConsumed: return "noop-consumed";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "prs" || lower == "sisa") return Strategy::Prs;
  if (lower == "dpus") return Strategy::Dpus;
  if (lower == "hs") return Strategy::Hs;
  if (lower == "ohs") return Strategy::Ohs;
  throw Error(ErrorKind::InvalidArgument, "unknown strategy '" + std::string(text) + "'");
}

void TrainConfig::validate() const {
  if (num_slices < 1) throw Error(ErrorKind::InvalidArgument, "S must be >= 1");
  if (batch_size < 1) throw Error(ErrorKind::InvalidArgument, "batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::InvalidArgument, "learning_rate must be > 0");
  if (epochs_per_slice < 1) throw Error(ErrorKind::InvalidArgument, "epochs_per_slice must be >= 1");
  if (!(phi >= 0.0)) throw Error(ErrorKind::InvalidArgument, "phi must be >= 0");
  if (grid_bits < 0 || grid_bits > 23) throw Error(ErrorKind::InvalidArgument, "grid_bits must lie in 0..23");
  if (ohs_depth && (*ohs_depth < 0 || *ohs_depth > num_slices))
    throw Error(ErrorKind::InvalidArgument, "ohs_depth must lie in 0..S");
  for (Index h : hidden_dims)
    if (h < 1) throw Error(ErrorKind::InvalidArgument, "hidden dimensions must be positive");
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

UnlearningEngine::UnlearningEngine(std::shared_ptr<const Dataset> dataset, TrainConfig config)
    : dataset_(std::move(dataset)),
      config_(std::move(config)),
      plan_(SlicePlan::make(2, 1, 1, 0)) {
  if (!dataset_) throw Error(ErrorKind::InvalidArgument, "engine needs a dataset");
  config_.validate();
  layout_ = ModelLayout{dataset_->feature_dim(), config_.hidden_dims, 2};
  layout_.validate();
  thresholds_ = threshold(CostConfig{dataset_->size(), config_.num_slices, config_.phi}, config_.ohs_depth);
  plan_ = make_slice_plan(*dataset_, config_.num_slices, config_.batch_size, config_.shuffle_seed);

  StoreManifest manifest;
  manifest.layout = layout_;
  manifest.num_slices = config_.num_slices;
  manifest.record_limit = config_.record_limit.value_or(thresholds_.t);
  manifest.n = dataset_->size();
  manifest.batch_size = config_.batch_size;
  manifest.shuffle_seed = config_.shuffle_seed;
  manifest.init_seed = config_.init_seed;
  manifest.hyper.learning_rate = config_.learning_rate;
  manifest.epochs_per_slice = config_.epochs_per_slice;
  manifest.grid_bits = config_.grid_bits;
  manifest.phi = config_.phi;
  manifest.ohs_depth = config_.ohs_depth.value_or(-1);
  manifest.dataset_fingerprint = dataset_->fingerprint();
  store_ = StateStore(std::move(manifest));
  model_.dataset_name = dataset_->name;
}

UnlearningEngine UnlearningEngine::restore(std::shared_ptr<const Dataset> dataset, StateStore store) {
  if (!dataset) throw Error(ErrorKind::InvalidArgument, "engine needs a dataset");
  const StoreManifest& m = store.manifest();
  if (m.dataset_fingerprint != dataset->fingerprint())
    throw Error(ErrorKind::InvalidArgument, "dataset fingerprint " + dataset->fingerprint() +
                                                " does not match the store's " + m.dataset_fingerprint);
  TrainConfig config;
  config.num_slices = m.num_slices;
  config.batch_size = m.batch_size;
  config.learning_rate = m.hyper.learning_rate;
  config.epochs_per_slice = m.epochs_per_slice;
  config.phi = m.phi;
  config.shuffle_seed = m.shuffle_seed;
  config.init_seed = m.init_seed;
  config.hidden_dims = m.layout.hidden_dims;
  if (m.ohs_depth >= 0) config.ohs_depth = m.ohs_depth;
  config.record_limit = m.record_limit;
  config.grid_bits = m.grid_bits;

  UnlearningEngine engine(std::move(dataset), config);
  engine.plan_ = SlicePlan::restore(m.n, m.num_slices, m.batch_size, m.shuffle_seed, m.tombstones, m.plan_version);
  engine.store_ = std::move(store);
  for (int i = 0; i <= m.num_slices; ++i)
    if (!engine.store_.has_checkpoint(i))
      throw Error(ErrorKind::NotFound, "store lacks checkpoint " + std::to_string(i));
  engine.trained_ = true;
  engine.sync_model();
  return engine;
}

void UnlearningEngine::require_trained() const {
  if (!trained_) throw Error(ErrorKind::InvalidArgument, "engine has not been trained");
}

void UnlearningEngine::sync_model() {
  model_.params = store_.get_checkpoint(config_.num_slices).params;
  model_.plan_version = plan_.version();
  store_.manifest().plan_version = plan_.version();
  store_.manifest().tombstones.assign(plan_.tombstones().begin(), plan_.tombstones().end());
}

const Model& UnlearningEngine::train() {
  ParameterVector params = init_params<float>(layout_, config_.init_seed);
  snap_to_grid(params, config_.grid_bits);
  OptimizerState<float> opt(params.size(), store_.manifest().hyper);
  store_.put_checkpoint({0, params, opt, plan_.version()});
  for (int i = 1; i <= config_.num_slices; ++i) train_slice(i, params, opt);
  trained_ = true;
  sync_model();
  return model_;
}

void UnlearningEngine::train_slice(int i, ParameterVector& params, OptimizerState<float>& opt) {
  const bool record = i < store_.manifest().record_limit;
  if (record) store_.drop_increments(i);
  const int batches = plan_.batch_count(i);
  std::vector<ParameterVector> deltas;
  if (record) deltas.assign(static_cast<std::size_t>(batches), ParameterVector(layout_));

  std::vector<int> order(static_cast<std::size_t>(batches));
  Vector<float> before;
  for (int epoch = 0; epoch < config_.epochs_per_slice; ++epoch) {
    // Batch visiting order depends only on (seed, slice, epoch), so a
    // retrained suffix replays exactly what a scratch run would do.
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(mix_seed(config_.shuffle_seed, 0xE90C4ULL, static_cast<std::uint64_t>(i),
                                 static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    for (int j : order) {
      const Batch<float> batch = dataset_->gather(plan_.batch(i, j + 1));
      const auto lg = loss_grad(params, batch);
      if (record) before = params.values;
      try {
        adam_step(params, opt, lg.grad);
      } catch (const Error& e) {
        throw Error(ErrorKind::TrainingDiverged, "slice " + std::to_string(i) + ": " + e.what());
      }
      snap_to_grid(params, config_.grid_bits);
      if (record) deltas[static_cast<std::size_t>(j)].values += params.values - before;
    }
    if (!params.all_finite())
      throw Error(ErrorKind::TrainingDiverged, "non-finite parameters after slice " + std::to_string(i));
  }

  store_.put_checkpoint({i, params, opt, plan_.version()});
  if (record)
    for (int j = 0; j < batches; ++j) {
      const auto members = plan_.batch(i, j + 1);
      store_.record_increment(i, j + 1, std::move(deltas[static_cast<std::size_t>(j)]),
                              std::vector<std::int64_t>(members.begin(), members.end()));
    }
}

void UnlearningEngine::retrain_from(int first_slice) {
  const Checkpoint& start = store_.get_checkpoint(first_slice - 1);
  ParameterVector params = start.params;
  OptimizerState<float> opt = start.opt_state;
  for (int i = first_slice; i <= config_.num_slices; ++i) train_slice(i, params, opt);
}

Location UnlearningEngine::locate(std::int64_t id) const {
  require_trained();
  return plan_.locate(id);
}

void UnlearningEngine::revoke(std::int64_t id) { plan_ = plan_.tombstone(id); }

void UnlearningEngine::subtract_increment(const IncrementRecord& record, int last_checkpoint,
                                          std::vector<int>& rewritten) {
  // Every checkpoint from the recording slice on contains this increment.
  for (int k = record.slice_index; k <= last_checkpoint; ++k) {
    Checkpoint& c = store_.checkpoint(k);
    c.params = combine(c.params, record.delta, Sign::Minus);
    c.plan_version = plan_.version();
    rewritten.push_back(k);
  }
}

UnlearnOutcome UnlearningEngine::unlearn(std::int64_t id, Strategy strategy) {
  switch (strategy) {
    case Strategy::Prs: return unlearn_prs(id);
    case Strategy::Dpus: return unlearn_dpus(id, /*force=*/true);
    case Strategy::Hs: return unlearn_hs(id);
    case Strategy::Ohs: return unlearn_ohs(id);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown strategy");
}

UnlearnOutcome UnlearningEngine::unlearn_prs(std::int64_t id) {
  const auto start = std::chrono::steady_clock::now();
  const Location at = locate(id);
  revoke(id);
  retrain_from(at.slice);
  sync_model();

  UnlearnOutcome out;
  out.path = ExecutedPath::Prs;
  out.sample_id = id;
  out.located_at = at;
  for (int k = at.slice; k <= config_.num_slices; ++k) out.checkpoints_rewritten.push_back(k);
  out.wall_time_s = seconds_since(start);
  out.params_after = model_.params;
  return out;
}

UnlearnOutcome UnlearningEngine::dpus_path(std::int64_t id, const Location& at) {
  const IncrementRecord* record = store_.find_increment(at.slice, id);
  if (record == nullptr)
    throw Error(ErrorKind::NotFound, "no increment recorded for sample " + std::to_string(id) + " in slice " +
                                         std::to_string(at.slice));
  UnlearnOutcome out;
  out.sample_id = id;
  out.located_at = {at.slice, record->batch_index};
  revoke(id);
  if (store_.mark_consumed(record->slice_index, record->batch_index)) {
    subtract_increment(*record, config_.num_slices, out.checkpoints_rewritten);
    out.path = ExecutedPath::Dpus;
  } else {
    out.path = ExecutedPath::NoopConsumed;
  }
  sync_model();
  out.params_after = model_.params;
  return out;
}

UnlearnOutcome UnlearningEngine::unlearn_dpus(std::int64_t id, bool force) {
  const auto start = std::chrono::steady_clock::now();
  const Location at = locate(id);
  if (!force && at.slice >= thresholds_.t)
    throw Error(ErrorKind::Dispatch, "sample " + std::to_string(id) + " lies in slice " + std::to_string(at.slice) +
                                         ", not below the threshold t=" + std::to_string(thresholds_.t));
  UnlearnOutcome out = dpus_path(id, at);
  out.wall_time_s = seconds_since(start);
  return out;
}

UnlearnOutcome UnlearningEngine::unlearn_hs(std::int64_t id) {
  const auto start = std::chrono::steady_clock::now();
  const Location at = locate(id);
  if (at.slice >= thresholds_.t) return unlearn_prs(id);
  UnlearnOutcome out = dpus_path(id, at);
  out.wall_time_s = seconds_since(start);
  return out;
}

UnlearnOutcome UnlearningEngine::unlearn_ohs(std::int64_t id) {
  const auto start = std::chrono::steady_clock::now();
  const Location at = locate(id);
  if (at.slice >= thresholds_.t) return unlearn_prs(id);
  const int depth = thresholds_.r;
  if (depth == 0) {
    UnlearnOutcome out = dpus_path(id, at);
    out.wall_time_s = seconds_since(start);
    return out;
  }
  const int base = config_.num_slices - depth;
  // The retrained suffix already covers the sample's slice: plain rollback
  // is both exact and cheaper.
  if (base < at.slice) return unlearn_prs(id);

  const IncrementRecord* record = store_.find_increment(at.slice, id);
  if (record == nullptr)
    throw Error(ErrorKind::NotFound, "no increment recorded for sample " + std::to_string(id) + " in slice " +
                                         std::to_string(at.slice));
  UnlearnOutcome out;
  out.path = ExecutedPath::Ohs;
  out.sample_id = id;
  out.located_at = {at.slice, record->batch_index};
  revoke(id);
  if (store_.mark_consumed(record->slice_index, record->batch_index))
    subtract_increment(*record, base, out.checkpoints_rewritten);
  retrain_from(base + 1);
  for (int k = base + 1; k <= config_.num_slices; ++k) out.checkpoints_rewritten.push_back(k);
  sync_model();
  out.params_after = model_.params;
  out.wall_time_s = seconds_since(start);
  return out;
}

void UnlearningEngine::restrict_ledger(int limit) {
  config_.record_limit = limit;
  store_.set_record_limit(limit);
}

}  // namespace mu
