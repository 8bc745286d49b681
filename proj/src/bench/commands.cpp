#include "mu/bench/commands.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include "json.hpp"
#include "mu/bench/reports.hpp"
#include "mu/cost/cost_model.hpp"
#include "mu/engine/stream.hpp"
#include "mu/mia/auditor.hpp"
#include "mu/store/binary_format.hpp"

namespace mu::bench {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
}

void check_slices_fit(const Dataset& train, int num_slices, const char* field) {
  if (num_slices > train.size())
    throw ConfigError(field, "S=" + std::to_string(num_slices) + " exceeds the " + std::to_string(train.size()) +
                                 " training samples");
}

void write_text(const fs::path& path, const std::string& text) { write_text_atomic(path, text); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::FileNotFound, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Corruption, path.string() + ": " + e.what());
  }
}

UnlearningEngine load_engine(const ExperimentConfig& config, const fs::path& output,
                             std::shared_ptr<const Dataset> train) {
  const fs::path store_dir = output / "store";
  if (!fs::exists(store_dir / "manifest.json"))
    throw Error(ErrorKind::FileNotFound, "no trained store at " + store_dir.string() + " (run `mu train` first)");
  StateStore store = StateStore::load(store_dir);
  if (store.manifest().dataset_fingerprint != train->fingerprint())
    throw ConfigError("dataset", "fingerprint " + train->fingerprint() + " differs from the store's " +
                                     store.manifest().dataset_fingerprint);
  (void)config;
  return UnlearningEngine::restore(std::move(train), std::move(store));
}

json metrics_summary(const MetricsReport& report) {
  std::map<std::string, int> paths;
  for (const auto& row : report.rows) paths[std::string(to_string(row.path))] += 1;
  return {{"strategy", std::string(to_string(report.strategy))},
          {"requests", report.rows.size()},
          {"avg_unlearn_time_s", report.avg_unlearn_time_s},
          {"pre_accuracy", report.pre_accuracy},
          {"final_accuracy", report.final_accuracy},
          {"S", report.num_slices},
          {"phi", report.phi},
          {"t", report.t},
          {"r", report.r},
          {"paths", paths},
          {"partial", report.partial}};
}

}  // namespace

int cmd_train(const ExperimentConfig& config, bool force, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    config.validate();
    const fs::path output = resolve_output_dir(config);
    if (fs::exists(output / "store") && !force) {
      err << "refusing to overwrite " << (output / "store").string() << " (pass --force)\n";
      return static_cast<int>(kConfigError);
    }
    auto data = prepare_data(config);
    check_slices_fit(data.train, config.num_slices, "S");

    TrainConfig tc = config.train_config();
    // The always-DPUS baseline needs increments for every slice.
    if (config.strategy == Strategy::Dpus) tc.record_limit = tc.num_slices + 1;
    auto train = std::make_shared<const Dataset>(std::move(data.train));
    UnlearningEngine engine(train, tc);
    const Model& model = engine.train();

    if (force && fs::exists(output / "store")) fs::remove_all(output / "store");
    fs::create_directories(output);
    engine.store().persist(output / "store");
    write_params(output / "model.muck", model.params, tc.num_slices);
    write_text(output / "config.json", config.to_json() + "\n");

    const json summary = {{"t", engine.thresholds().t},
                          {"r", engine.thresholds().r},
                          {"checkpoints", engine.store().checkpoint_count()},
                          {"increments", engine.store().increment_count()},
                          {"test_accuracy", evaluate(model.params, data.test)},
                          {"config_hash", config.hash()},
                          {"output_dir", output.string()}};
    out << summary.dump(2) << '\n';
    return static_cast<int>(kOk);
  });
}

int cmd_replay(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    config.validate();
    const fs::path output = resolve_output_dir(config);
    auto data = prepare_data(config);
    auto train = std::make_shared<const Dataset>(std::move(data.train));
    UnlearningEngine engine = load_engine(config, output, train);

    const auto requests =
        sample_requests(engine.plan(), static_cast<std::size_t>(config.request_count), config.request_seed);
    const MetricsReport report = process_stream(engine, requests, config.strategy, data.test);

    json revoked = json::array();
    for (const auto& row : report.rows) revoked.push_back(row.sample_id);
    write_text(output / "report.json", report_json(report, config.hash()));
    write_text(output / "report.csv", report_csv(report));
    write_text(output / "revoked.json", json{{"strategy", std::string(to_string(config.strategy))},
                                             {"config_hash", config.hash()},
                                             {"ids", revoked}}
                                                .dump(2) +
                                            "\n");
    write_params(output / "model_after.muck", engine.model().params, engine.config().num_slices);

    out << metrics_summary(report).dump(2) << '\n';
    if (report.partial) {
      err << "replay aborted: " << report.error << '\n';
      return static_cast<int>(kRuntimeFailure);
    }
    return static_cast<int>(kOk);
  });
}

int cmd_compare(const std::vector<ExperimentConfig>& configs, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (configs.empty()) throw ConfigError("--config", "at least one config is required");
    for (const auto& c : configs) c.validate();
    const ExperimentConfig& base = configs.front();

    std::vector<Strategy> strategies;
    if (configs.size() == 1) {
      strategies = base.compare_strategies;
    } else {
      for (const auto& c : configs) strategies.push_back(c.strategy);
    }

    auto data = prepare_data(base);
    const std::string fingerprint = data.train.fingerprint();
    for (std::size_t k = 1; k < configs.size(); ++k) {
      const auto other = prepare_data(configs[k]);
      if (other.train.fingerprint() != fingerprint)
        throw ConfigError("dataset", "config " + std::to_string(k) + " describes a different dataset (" +
                                         other.train.fingerprint() + " vs " + fingerprint + ")");
      const auto& c = configs[k];
      if (c.shuffle_seed != base.shuffle_seed || c.init_seed != base.init_seed || c.request_seed != base.request_seed)
        throw ConfigError("seeds", "config " + std::to_string(k) + " uses different training or request seeds");
    }

    auto train = std::make_shared<const Dataset>(std::move(data.train));
    const fs::path output = resolve_output_dir(base);
    fs::create_directories(output);

    std::ostringstream csv;
    csv << "strategy,S,phi,t,r,requests,avg_unlearn_time_s,pre_accuracy,final_accuracy,"
           "dpus_path,prs_path,ohs_path,noop_consumed\r\n";
    json rows = json::array();
    for (int slices : base.compare_slices) {
      check_slices_fit(*train, slices, "compare.S");
      TrainConfig tc = base.train_config(slices);
      tc.record_limit = slices + 1;
      UnlearningEngine trained(train, tc);
      trained.train();
      const auto requests =
          sample_requests(trained.plan(), static_cast<std::size_t>(base.request_count), base.request_seed);

      for (Strategy strategy : strategies) {
        UnlearningEngine engine = trained;
        if (strategy != Strategy::Dpus) engine.restrict_ledger(engine.thresholds().t);
        const MetricsReport report = process_stream(engine, requests, strategy, data.test);
        if (report.partial) throw Error(ErrorKind::InvalidArgument, report.error);
        int counts[4] = {0, 0, 0, 0};
        for (const auto& row : report.rows) counts[static_cast<int>(row.path)] += 1;
        char line[512];
        std::snprintf(line, sizeof(line), "%s,%d,%.17g,%d,%d,%zu,%.17g,%.17g,%.17g,%d,%d,%d,%d\r\n",
                      std::string(to_string(strategy)).c_str(), slices, report.phi, report.t, report.r,
                      report.rows.size(), report.avg_unlearn_time_s, report.pre_accuracy, report.final_accuracy,
                      counts[static_cast<int>(ExecutedPath::Dpus)], counts[static_cast<int>(ExecutedPath::Prs)],
                      counts[static_cast<int>(ExecutedPath::Ohs)],
                      counts[static_cast<int>(ExecutedPath::NoopConsumed)]);
        csv << line;
        rows.push_back(metrics_summary(report));
        err << to_string(strategy) << " S=" << slices << ": avg " << report.avg_unlearn_time_s << " s, accuracy "
            << report.final_accuracy << '\n';
      }
    }
    write_text(output / "compare.csv", csv.str());
    const json summary = {{"config_hash", base.hash()},
                          {"rows", rows},
                          {"environment", json::parse(environment_fingerprint_json())}};
    write_text(output / "compare.json", summary.dump(2) + "\n");
    out << csv.str();
    return static_cast<int>(kOk);
  });
}

int cmd_audit(const ExperimentConfig& config, bool null_calibration, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    config.validate();
    const fs::path output = resolve_output_dir(config);
    const fs::path after_path = output / "model_after.muck";
    const fs::path revoked_path = output / "revoked.json";

    auto data = prepare_data(config);
    auto train = std::make_shared<const Dataset>(std::move(data.train));
    const UnlearningEngine engine = load_engine(config, output, train);
    if (!fs::exists(after_path)) throw Error(ErrorKind::FileNotFound, "missing model file " + after_path.string());
    const ParameterVector after = read_params(after_path, engine.layout());
    if (!fs::exists(revoked_path)) throw ConfigError("revoked", "missing " + revoked_path.string());
    const auto revoked = read_json(revoked_path).at("ids").get<std::vector<std::int64_t>>();
    if (revoked.empty()) throw ConfigError("revoked", "no revoked ids in " + revoked_path.string());

    ShadowConfig shadow_config;
    shadow_config.hidden_dims = config.hidden_dims;
    shadow_config.epochs = config.shadow_epochs.value_or(config.epochs_per_slice);
    shadow_config.batch_size = config.batch_size;
    shadow_config.learning_rate = config.learning_rate;
    shadow_config.init_seed = config.mia_seed;
    const auto shadows = train_shadows(data.test, config.shadow_count, shadow_config, config.mia_seed);
    const Dataset attack_set = build_attack_dataset(shadows, data.test);
    const AttackModel attack = train_attack(attack_set, config.mia_seed, config.attack);

    const ParameterVector& before = engine.model().params;
    const AuditResult audit_before = audit(attack, before, revoked, *train);
    const AuditResult audit_after = audit(attack, after, revoked, *train);

    json verdicts = json::array();
    for (std::size_t k = 0; k < revoked.size(); ++k)
      verdicts.push_back({{"id", revoked[k]},
                          {"before", audit_before.verdicts[k] == 1 ? "member" : "non-member"},
                          {"after", audit_after.verdicts[k] == 1 ? "member" : "non-member"}});
    json report = {{"config_hash", config.hash()},
                   {"attack_holdout_accuracy", attack.holdout_accuracy},
                   {"member_rate_before", audit_before.member_rate},
                   {"member_rate_after", audit_after.member_rate},
                   {"shadow_count", config.shadow_count},
                   {"verdicts", verdicts}};
    if (null_calibration) {
      const AttackModel null_attack = train_attack(shuffle_member_labels(attack_set, config.mia_seed),
                                                   config.mia_seed, config.attack);
      report["null_holdout_accuracy"] = null_attack.holdout_accuracy;
    }
    write_text(output / "audit.json", report.dump(2) + "\n");
    json summary = report;
    summary.erase("verdicts");
    out << summary.dump(2) << '\n';
    return static_cast<int>(kOk);
  });
}

int cmd_cost(std::int64_t n, int num_slices, double phi, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (num_slices < 1) throw ConfigError("S", "must be >= 1");
    if (num_slices > n) throw ConfigError("S", "must not exceed n");
    if (!(phi >= 0.0)) throw ConfigError("phi", "must be >= 0");
    const ThresholdResult result = threshold(CostConfig{n, num_slices, phi});
    out << json{{"costs", result.costs}, {"t", result.t}, {"r", result.r}}.dump() << '\n';
    return static_cast<int>(kOk);
  });
}

}  // namespace mu::bench
