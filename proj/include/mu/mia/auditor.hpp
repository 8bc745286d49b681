#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mu/data/dataset.hpp"

namespace mu {

/// Training recipe shared by shadow models; mirror the target's settings.
struct ShadowConfig {
  std::vector<Index> hidden_dims{128, 128};
  int epochs = 1;
  std::int64_t batch_size = 128;
  double learning_rate = 0.005;
  std::uint64_t init_seed = 0;
};

struct ShadowModel {
  ParameterVector params;
  std::vector<std::int64_t> in_ids;
  std::vector<std::int64_t> out_ids;
  std::uint64_t split_seed = 0;
};

/// k shadows, each trained on a random half of the pool. Shadow s splits with
/// a stream derived from (split_seed, s).
std::vector<ShadowModel> train_shadows(const Dataset& pool, int k, const ShadowConfig& config,
                                       std::uint64_t split_seed);

/// Attack input for one sample: class probabilities followed by the one-hot
/// true label.
Matrix<float> attack_features(const Matrix<float>& probabilities, std::span<const int> labels);

/// One row per (shadow, pool sample); label 1 = the shadow trained on it.
Dataset build_attack_dataset(const std::vector<ShadowModel>& shadows, const Dataset& pool);

/// Same rows with member labels permuted; the null the attack is checked against.
Dataset shuffle_member_labels(const Dataset& attack_set, std::uint64_t seed);

struct AttackConfig {
  Index hidden = 32;
  int epochs = 30;
  std::int64_t batch_size = 128;
  double learning_rate = 0.005;
  double holdout_fraction = 0.2;
};

struct AttackModel {
  ParameterVector params;
  double holdout_accuracy = 0.0;
};

AttackModel train_attack(const Dataset& attack_set, std::uint64_t seed, const AttackConfig& config = {});

struct AuditResult {
  std::vector<std::int64_t> ids;
  /// 1 = judged a training member.
  std::vector<int> verdicts;
  double member_rate = 0.0;
};

AuditResult audit(const AttackModel& attack, const ParameterVector& target, std::span<const std::int64_t> ids,
                  const Dataset& dataset);

}  // namespace mu
