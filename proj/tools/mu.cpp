// mu: train sliced models, replay revocation streams, compare strategies,
// audit erasure and inspect the retraining-cost model.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mu/bench/commands.hpp"

namespace {

struct Overrides {
  std::optional<std::string> csv;
  std::optional<std::string> label_column;
  std::optional<std::int64_t> n;
  std::optional<long> dim;
  std::optional<std::uint64_t> data_seed;
  std::optional<double> noise;
  std::optional<int> slices;
  std::optional<std::int64_t> batch_size;
  std::optional<double> learning_rate;
  std::optional<int> epochs;
  std::optional<double> phi;
  std::optional<int> ohs_depth;
  std::optional<std::string> strategy;
  std::optional<int> requests;
  std::optional<std::uint64_t> request_seed;
  std::optional<std::string> output;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--csv", o.csv, "Numeric CSV dataset (overrides the synthetic generator)");
  cmd->add_option("--label-column", o.label_column, "Label column name in the CSV");
  cmd->add_option("--n", o.n, "Synthetic sample count");
  cmd->add_option("--dim", o.dim, "Synthetic feature count");
  cmd->add_option("--data-seed", o.data_seed, "Synthetic generator seed");
  cmd->add_option("--noise", o.noise, "Synthetic label noise stddev");
  cmd->add_option("--S,--slices", o.slices, "Number of slices");
  cmd->add_option("--batch-size", o.batch_size, "Batch size");
  cmd->add_option("--lr", o.learning_rate, "Adam learning rate");
  cmd->add_option("--epochs", o.epochs, "Epochs per slice");
  cmd->add_option("--phi", o.phi, "Tolerable retraining overhead, in samples read");
  cmd->add_option("--ohs-depth", o.ohs_depth, "Trailing slices retrained by OHS");
  cmd->add_option("--strategy", o.strategy, "sisa|prs|dpus|hs|ohs");
  cmd->add_option("--requests", o.requests, "Number of revocation requests");
  cmd->add_option("--request-seed", o.request_seed, "Seed of the request stream");
  cmd->add_option("--output", o.output, "Output directory (default $MU_OUTPUT_DIR)");
}

mu::bench::ExperimentConfig apply(mu::bench::ExperimentConfig c, const Overrides& o) {
  if (o.csv) c.csv_path = *o.csv;
  if (o.label_column) c.label_column = *o.label_column;
  if (o.n) c.synthetic.n = *o.n;
  if (o.dim) c.synthetic.dim = *o.dim;
  if (o.data_seed) c.synthetic.seed = *o.data_seed;
  if (o.noise) c.synthetic.noise = *o.noise;
  if (o.slices) c.num_slices = *o.slices;
  if (o.batch_size) c.batch_size = *o.batch_size;
  if (o.learning_rate) c.learning_rate = *o.learning_rate;
  if (o.epochs) c.epochs_per_slice = *o.epochs;
  if (o.phi) c.phi = *o.phi;
  if (o.ohs_depth) c.ohs_depth = *o.ohs_depth;
  if (o.strategy) {
    try {
      c.strategy = mu::parse_strategy(*o.strategy);
    } catch (const mu::Error& e) {
      throw mu::bench::ConfigError("strategy", e.what());
    }
  }
  if (o.requests) c.request_count = *o.requests;
  if (o.request_seed) c.request_seed = *o.request_seed;
  if (o.output) c.output_dir = *o.output;
  return c;
}

mu::bench::ExperimentConfig load(const std::string& path, const Overrides& o) {
  mu::bench::ExperimentConfig base;
  if (!path.empty()) base = mu::bench::ExperimentConfig::from_file(path);
  return apply(std::move(base), o);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sliced training with checkpoint/increment ledgers and hybrid unlearning strategies"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides overrides;
  bool force = false;
  bool null_calibration = false;
  std::vector<std::string> compare_configs;
  std::int64_t cost_n = 0;
  int cost_slices = 0;
  double cost_phi = 0.0;

  auto* train = app.add_subcommand("train", "Train over slices and persist checkpoints and increments");
  train->add_option("--config", config_path, "Experiment config (JSON)");
  train->add_flag("--force", force, "Overwrite an existing store");
  add_overrides(train, overrides);

  auto* replay = app.add_subcommand("replay", "Replay a revocation stream against a trained store");
  replay->add_option("--config", config_path, "Experiment config (JSON)");
  add_overrides(replay, overrides);

  auto* compare = app.add_subcommand("compare", "Compare strategies on one shared request stream");
  compare->add_option("--config", compare_configs, "Experiment config(s); repeat for one config per strategy");
  add_overrides(compare, overrides);

  auto* audit = app.add_subcommand("audit", "Membership-inference audit of revoked samples");
  audit->add_option("--config", config_path, "Experiment config (JSON)");
  audit->add_flag("--null-calibration", null_calibration, "Also train an attack on shuffled membership labels");
  add_overrides(audit, overrides);

  auto* cost = app.add_subcommand("cost", "Print retraining costs, threshold t and OHS depth r");
  cost->add_option("--n", cost_n, "Dataset size")->required();
  cost->add_option("--S,--slices", cost_slices, "Number of slices")->required();
  cost->add_option("--phi", cost_phi, "Tolerable retraining overhead")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : mu::bench::kConfigError;
  }

  using namespace mu::bench;
  try {
    if (*cost) return cmd_cost(cost_n, cost_slices, cost_phi, std::cout, std::cerr);
    if (*compare) {
      std::vector<ExperimentConfig> configs;
      if (compare_configs.empty()) configs.push_back(load("", overrides));
      for (const auto& path : compare_configs) configs.push_back(load(path, overrides));
      return cmd_compare(configs, std::cout, std::cerr);
    }
    const ExperimentConfig config = load(config_path, overrides);
    if (*train) return cmd_train(config, force, std::cout, std::cerr);
    if (*replay) return cmd_replay(config, std::cout, std::cerr);
    if (*audit) return cmd_audit(config, null_calibration, std::cout, std::cerr);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigError;
  }
  return kConfigError;
}
