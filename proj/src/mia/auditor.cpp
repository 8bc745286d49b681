#include "mu/mia/auditor.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "mu/core/mlp.hpp"
#include "mu/core/trainer.hpp"

namespace mu {

std::vector<ShadowModel> train_shadows(const Dataset& pool, int k, const ShadowConfig& config,
                                       std::uint64_t split_seed) {
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "need at least one shadow model");
  if (pool.size() < 2) throw Error(ErrorKind::InvalidArgument, "shadow pool needs at least two samples");
  const ModelLayout layout{pool.feature_dim(), config.hidden_dims, 2};

  std::vector<ShadowModel> shadows;
  shadows.reserve(static_cast<std::size_t>(k));
  for (int s = 0; s < k; ++s) {
    std::vector<std::int64_t> order(static_cast<std::size_t>(pool.size()));
    std::iota(order.begin(), order.end(), std::int64_t{0});
    const std::uint64_t stream = mix_seed(split_seed, static_cast<std::uint64_t>(s));
    std::mt19937_64 rng(stream);
    std::shuffle(order.begin(), order.end(), rng);
    const auto in_count = (order.size() + 1) / 2;

    ShadowModel shadow;
    shadow.split_seed = stream;
    shadow.in_ids.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(in_count));
    shadow.out_ids.assign(order.begin() + static_cast<std::ptrdiff_t>(in_count), order.end());
    std::sort(shadow.in_ids.begin(), shadow.in_ids.end());
    std::sort(shadow.out_ids.begin(), shadow.out_ids.end());

    const Dataset in_half = pool.subset(shadow.in_ids, pool.name + "-shadow-in");
    shadow.params = init_params<float>(layout, mix_seed(config.init_seed, static_cast<std::uint64_t>(s)));
    OptimizerState<float> opt(shadow.params.size(), AdamHyper{config.learning_rate});
    fit(shadow.params, opt, in_half.features, std::span<const int>(in_half.labels),
        FitOptions{config.epochs, config.batch_size, mix_seed(stream, 0xF17ULL)});
    shadows.push_back(std::move(shadow));
  }
  return shadows;
}

Matrix<float> attack_features(const Matrix<float>& probabilities, std::span<const int> labels) {
  const Index classes = probabilities.cols();
  Matrix<float> out = Matrix<float>::Zero(probabilities.rows(), 2 * classes);
  out.leftCols(classes) = probabilities;
  for (Index r = 0; r < probabilities.rows(); ++r) out(r, classes + labels[static_cast<std::size_t>(r)]) = 1.0f;
  return out;
}

Dataset build_attack_dataset(const std::vector<ShadowModel>& shadows, const Dataset& pool) {
  if (shadows.empty()) throw Error(ErrorKind::InvalidArgument, "need at least one shadow model");
  Dataset attack;
  attack.name = pool.name + "-attack";
  attack.feature_names = {"p0", "p1", "y0", "y1"};
  const Index rows = static_cast<Index>(shadows.size()) * pool.size();
  attack.features.resize(rows, 4);
  attack.labels.reserve(static_cast<std::size_t>(rows));

  Index cursor = 0;
  for (const auto& shadow : shadows) {
    const Matrix<float> probs = forward(shadow.params, pool.features);
    attack.features.middleRows(cursor, pool.size()) = attack_features(probs, pool.labels);
    std::vector<int> member(static_cast<std::size_t>(pool.size()), 0);
    for (auto id : shadow.in_ids) member[static_cast<std::size_t>(id)] = 1;
    attack.labels.insert(attack.labels.end(), member.begin(), member.end());
    cursor += pool.size();
  }
  const auto members = std::count(attack.labels.begin(), attack.labels.end(), 1);
  if (members == 0 || members == static_cast<std::ptrdiff_t>(attack.labels.size()))
    throw Error(ErrorKind::DegenerateAttackSet, "attack rows are all one membership class");
  return attack;
}

Dataset shuffle_member_labels(const Dataset& attack_set, std::uint64_t seed) {
  Dataset out = attack_set;
  out.name += "-null";
  std::mt19937_64 rng(mix_seed(seed, 0x0DDULL));
  std::shuffle(out.labels.begin(), out.labels.end(), rng);
  return out;
}

AttackModel train_attack(const Dataset& attack_set, std::uint64_t seed, const AttackConfig& config) {
  const auto members = std::count(attack_set.labels.begin(), attack_set.labels.end(), 1);
  if (members == 0 || members == static_cast<std::ptrdiff_t>(attack_set.labels.size()))
    throw Error(ErrorKind::DegenerateAttackSet, "attack set needs both membership classes");

  const auto [train, holdout] = train_test_split(attack_set, config.holdout_fraction, seed);
  const ModelLayout layout{attack_set.feature_dim(), {config.hidden}, 2};
  AttackModel model;
  model.params = init_params<float>(layout, mix_seed(seed, 0xA77ULL));
  OptimizerState<float> opt(model.params.size(), AdamHyper{config.learning_rate});
  fit(model.params, opt, train.features, std::span<const int>(train.labels),
      FitOptions{config.epochs, config.batch_size, mix_seed(seed, 0xF17ULL)});
  model.holdout_accuracy = holdout.size() > 0 ? evaluate(model.params, holdout) : evaluate(model.params, train);
  return model;
}

AuditResult audit(const AttackModel& attack, const ParameterVector& target, std::span<const std::int64_t> ids,
                  const Dataset& dataset) {
  AuditResult result;
  if (ids.empty()) return result;
  const Batch<float> batch = dataset.gather(ids);
  const Matrix<float> probs = forward(target, batch.features);
  const std::vector<int> verdicts = predict(attack.params, attack_features(probs, batch.labels));
  result.ids.assign(ids.begin(), ids.end());
  result.verdicts = verdicts;
  result.member_rate =
      static_cast<double>(std::count(verdicts.begin(), verdicts.end(), 1)) / static_cast<double>(verdicts.size());
  return result;
}

}  // namespace mu
