#include "mu/bench/experiment.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mu/store/binary_format.hpp"

namespace mu::bench {

using nlohmann::json;

void ExperimentConfig::validate() const {
  if (csv_path && csv_path->empty()) throw ConfigError("csv_path", "must not be empty");
  if (!csv_path) {
    if (synthetic.n < 2) throw ConfigError("synthetic.n", "must be >= 2");
    if (synthetic.dim < 1) throw ConfigError("synthetic.dim", "must be >= 1");
    if (!(synthetic.noise >= 0.0)) throw ConfigError("synthetic.noise", "must be >= 0");
  }
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction", "must lie in [0, 1)");
  if (num_slices < 1) throw ConfigError("S", "must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size", "must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate", "must be > 0");
  if (epochs_per_slice < 1) throw ConfigError("epochs_per_slice", "must be >= 1");
  if (!(phi >= 0.0)) throw ConfigError("phi", "must be >= 0");
  for (Index h : hidden_dims)
    if (h < 1) throw ConfigError("hidden_dims", "entries must be >= 1");
  if (ohs_depth && (*ohs_depth < 0 || *ohs_depth > num_slices)) throw ConfigError("ohs_depth", "must lie in 0..S");
  if (grid_bits < 0 || grid_bits > 23) throw ConfigError("grid_bits", "must lie in 0..23");
  if (request_count < 0) throw ConfigError("request_count", "must be >= 0");
  if (compare_strategies.empty()) throw ConfigError("compare_strategies", "must not be empty");
  for (int s : compare_slices)
    if (s < 1) throw ConfigError("compare_slices", "entries must be >= 1");
  if (shadow_count < 1) throw ConfigError("shadow_count", "must be >= 1");
  if (shadow_epochs && *shadow_epochs < 1) throw ConfigError("shadow_epochs", "must be >= 1");
  if (attack.hidden < 1) throw ConfigError("attack.hidden", "must be >= 1");
  if (attack.epochs < 1) throw ConfigError("attack.epochs", "must be >= 1");
  if (!(attack.holdout_fraction > 0.0 && attack.holdout_fraction < 1.0))
    throw ConfigError("attack.holdout_fraction", "must lie in (0, 1)");
}

namespace {

json config_json(const ExperimentConfig& c, bool with_output) {
  json strategies = json::array();
  for (auto s : c.compare_strategies) strategies.push_back(std::string(to_string(s)));
  json j = {
      {"dataset",
       {{"csv_path", c.csv_path ? json(*c.csv_path) : json(nullptr)},
        {"label_column", c.label_column},
        {"synthetic", {{"n", c.synthetic.n}, {"dim", c.synthetic.dim}, {"seed", c.synthetic.seed},
                       {"noise", c.synthetic.noise}}},
        {"test_fraction", c.test_fraction},
        {"split_seed", c.split_seed}}},
      {"S", c.num_slices},
      {"batch_size", c.batch_size},
      {"learning_rate", c.learning_rate},
      {"epochs_per_slice", c.epochs_per_slice},
      {"phi", c.phi},
      {"hidden_dims", c.hidden_dims},
      {"ohs_depth", c.ohs_depth ? json(*c.ohs_depth) : json(nullptr)},
      {"grid_bits", c.grid_bits},
      {"seeds", {{"shuffle", c.shuffle_seed}, {"init", c.init_seed}, {"request", c.request_seed}, {"mia", c.mia_seed}}},
      {"strategy", std::string(to_string(c.strategy))},
      {"request_count", c.request_count},
      {"compare", {{"strategies", strategies}, {"S", c.compare_slices}}},
      {"mia",
       {{"shadow_count", c.shadow_count},
        {"shadow_epochs", c.shadow_epochs ? json(*c.shadow_epochs) : json(nullptr)},
        {"attack_hidden", c.attack.hidden},
        {"attack_epochs", c.attack.epochs},
        {"attack_holdout_fraction", c.attack.holdout_fraction}}},
  };
  if (with_output) j["output_dir"] = c.output_dir;
  return j;
}

template <typename T>
void read_field(const json& j, const char* key, T& out, const std::string& path) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path + key, "has the wrong type");
  }
}

template <typename T>
void read_optional(const json& j, const char* key, std::optional<T>& out, const std::string& path) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    out.reset();
    return;
  }
  T value{};
  read_field(j, key, value, path);
  out = value;
}

}  // namespace

std::string ExperimentConfig::to_json() const { return config_json(*this, true).dump(2); }

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config", "top level must be an object");

  ExperimentConfig c;
  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    read_optional(d, "csv_path", c.csv_path, "dataset.");
    read_field(d, "label_column", c.label_column, "dataset.");
    read_field(d, "test_fraction", c.test_fraction, "dataset.");
    read_field(d, "split_seed", c.split_seed, "dataset.");
    if (d.contains("synthetic")) {
      const json& s = d.at("synthetic");
      read_field(s, "n", c.synthetic.n, "dataset.synthetic.");
      read_field(s, "dim", c.synthetic.dim, "dataset.synthetic.");
      read_field(s, "seed", c.synthetic.seed, "dataset.synthetic.");
      read_field(s, "noise", c.synthetic.noise, "dataset.synthetic.");
    }
  }
  read_field(j, "S", c.num_slices, "");
  read_field(j, "batch_size", c.batch_size, "");
  read_field(j, "learning_rate", c.learning_rate, "");
  read_field(j, "epochs_per_slice", c.epochs_per_slice, "");
  read_field(j, "phi", c.phi, "");
  read_field(j, "hidden_dims", c.hidden_dims, "");
  read_optional(j, "ohs_depth", c.ohs_depth, "");
  read_field(j, "grid_bits", c.grid_bits, "");
  if (j.contains("seeds")) {
    const json& s = j.at("seeds");
    read_field(s, "shuffle", c.shuffle_seed, "seeds.");
    read_field(s, "init", c.init_seed, "seeds.");
    read_field(s, "request", c.request_seed, "seeds.");
    read_field(s, "mia", c.mia_seed, "seeds.");
  }
  if (j.contains("strategy")) {
    std::string name;
    read_field(j, "strategy", name, "");
    try {
      c.strategy = parse_strategy(name);
    } catch (const Error& e) {
      throw ConfigError("strategy", e.what());
    }
  }
  read_field(j, "request_count", c.request_count, "");
  if (j.contains("compare")) {
    const json& cmp = j.at("compare");
    std::vector<std::string> names;
    read_field(cmp, "strategies", names, "compare.");
    if (!names.empty()) {
      c.compare_strategies.clear();
      for (const auto& name : names) {
        try {
          c.compare_strategies.push_back(parse_strategy(name));
        } catch (const Error& e) {
          throw ConfigError("compare.strategies", e.what());
        }
      }
    }
    read_field(cmp, "S", c.compare_slices, "compare.");
  }
  if (j.contains("mia")) {
    const json& m = j.at("mia");
    read_field(m, "shadow_count", c.shadow_count, "mia.");
    read_optional(m, "shadow_epochs", c.shadow_epochs, "mia.");
    read_field(m, "attack_hidden", c.attack.hidden, "mia.");
    read_field(m, "attack_epochs", c.attack.epochs, "mia.");
    read_field(m, "attack_holdout_fraction", c.attack.holdout_fraction, "mia.");
  }
  read_field(j, "output_dir", c.output_dir, "");
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

std::string ExperimentConfig::hash() const {
  const std::string canonical = config_json(*this, false).dump();
  const auto crc = crc32_of(std::span(reinterpret_cast<const unsigned char*>(canonical.data()), canonical.size()));
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08x", static_cast<unsigned>(crc));
  return buf;
}

TrainConfig ExperimentConfig::train_config(std::optional<int> slices_override) const {
  TrainConfig t;
  t.num_slices = slices_override.value_or(num_slices);
  t.batch_size = batch_size;
  t.learning_rate = learning_rate;
  t.epochs_per_slice = epochs_per_slice;
  t.phi = phi;
  t.shuffle_seed = shuffle_seed;
  t.init_seed = init_seed;
  t.hidden_dims = hidden_dims;
  t.ohs_depth = ohs_depth;
  t.grid_bits = grid_bits;
  return t;
}

PreparedData prepare_data(const ExperimentConfig& config) {
  Dataset full = config.csv_path
                     ? load_csv(*config.csv_path, config.label_column)
                     : gen_synthetic(config.synthetic.n, config.synthetic.dim, config.synthetic.seed,
                                     config.synthetic.noise);
  auto [train, test] = train_test_split(full, config.test_fraction, config.split_seed);
  return {std::move(train), std::move(test)};
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& config) {
  if (!config.output_dir.empty()) return config.output_dir;
  if (const char* env = std::getenv("MU_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
  return "mu-output";
}

}  // namespace mu::bench
