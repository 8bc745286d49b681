#include "mu/store/state_store.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mu/store/binary_format.hpp"

namespace mu {

using nlohmann::json;

namespace {

std::string checkpoint_file(int i) { return "checkpoint_" + std::to_string(i) + ".muck"; }

std::string increment_file(int i, int j) {
  return "increment_" + std::to_string(i) + "_" + std::to_string(j) + ".muck";
}

json layout_to_json(const ModelLayout& layout) {
  return {{"input_dim", layout.input_dim}, {"hidden_dims", layout.hidden_dims}, {"output_dim", layout.output_dim}};
}

ModelLayout layout_from_json(const json& j) {
  ModelLayout layout;
  layout.input_dim = j.at("input_dim").get<Index>();
  layout.hidden_dims = j.at("hidden_dims").get<std::vector<Index>>();
  layout.output_dim = j.at("output_dim").get<Index>();
  layout.validate();
  return layout;
}

std::vector<float> to_floats(const Vector<float>& v) { return {v.data(), v.data() + v.size()}; }

Vector<float> slice_vector(const std::vector<float>& values, std::size_t offset, std::size_t length) {
  return Eigen::Map<const Vector<float>>(values.data() + offset, static_cast<Index>(length));
}

VectorFile read_checked(const std::filesystem::path& dir, const std::string& name, std::uint32_t expected_crc) {
  const VectorFile file = read_vector_file(dir / name);
  if (file.crc32 != expected_crc) throw Error(ErrorKind::Corruption, name + ": checksum differs from manifest");
  return file;
}

}  // namespace

void StateStore::put_checkpoint(Checkpoint checkpoint) {
  if (checkpoint.slice_index < 0 || checkpoint.slice_index > manifest_.num_slices)
    throw Error(ErrorKind::InvalidArgument, "checkpoint index " + std::to_string(checkpoint.slice_index) +
                                                " outside 0.." + std::to_string(manifest_.num_slices));
  if (checkpoint.params.layout != manifest_.layout)
    throw Error(ErrorKind::Shape, "checkpoint layout does not match the store layout");
  const int i = checkpoint.slice_index;
  checkpoints_.insert_or_assign(i, std::move(checkpoint));
}

const Checkpoint& StateStore::get_checkpoint(int i) const {
  const auto it = checkpoints_.find(i);
  if (it == checkpoints_.end()) throw Error(ErrorKind::NotFound, "no checkpoint for slice " + std::to_string(i));
  return it->second;
}

Checkpoint& StateStore::checkpoint(int i) {
  const auto it = checkpoints_.find(i);
  if (it == checkpoints_.end()) throw Error(ErrorKind::NotFound, "no checkpoint for slice " + std::to_string(i));
  return it->second;
}

void StateStore::record_increment(int i, int j, ParameterVector delta, std::vector<std::int64_t> sample_ids) {
  if (i >= manifest_.record_limit)
    throw Error(ErrorKind::PolicyViolation, "increments are only recorded for slices below " +
                                                std::to_string(manifest_.record_limit) + ", got slice " +
                                                std::to_string(i));
  if (i < 1 || j < 1) throw Error(ErrorKind::InvalidArgument, "increment indices are 1-based");
  if (delta.layout != manifest_.layout) throw Error(ErrorKind::Shape, "increment layout does not match the store layout");
  if (const auto old = increments_.find({i, j}); old != increments_.end())
    for (auto id : old->second.sample_ids) owner_.erase(id);
  for (auto id : sample_ids) owner_[id] = {i, j};
  increments_.insert_or_assign({i, j}, IncrementRecord{i, j, std::move(delta), false, std::move(sample_ids)});
}

const IncrementRecord& StateStore::get_increment(int i, int j) const {
  const auto it = increments_.find({i, j});
  if (it == increments_.end())
    throw Error(ErrorKind::NotFound, "no increment for slice " + std::to_string(i) + " batch " + std::to_string(j));
  return it->second;
}

bool StateStore::mark_consumed(int i, int j) {
  const auto it = increments_.find({i, j});
  if (it == increments_.end())
    throw Error(ErrorKind::NotFound, "no increment for slice " + std::to_string(i) + " batch " + std::to_string(j));
  if (it->second.consumed) return false;
  it->second.consumed = true;
  return true;
}

const IncrementRecord* StateStore::find_increment(int i, std::int64_t id) const {
  const auto it = owner_.find(id);
  if (it == owner_.end() || it->second.first != i) return nullptr;
  return &increments_.at(it->second);
}

void StateStore::drop_increments(int i) {
  for (auto it = increments_.lower_bound({i, 0}); it != increments_.end() && it->first.first == i;) {
    for (auto id : it->second.sample_ids) owner_.erase(id);
    it = increments_.erase(it);
  }
}

void StateStore::set_record_limit(int limit) {
  manifest_.record_limit = limit;
  for (int i = std::max(limit, 1); i <= manifest_.num_slices; ++i) drop_increments(i);
}

std::size_t StateStore::footprint_bytes() const {
  std::size_t bytes = 0;
  for (const auto& [i, c] : checkpoints_)
    bytes += static_cast<std::size_t>(c.params.size() + c.opt_state.m.size() + c.opt_state.v.size()) * sizeof(float);
  for (const auto& [key, r] : increments_) bytes += static_cast<std::size_t>(r.delta.size()) * sizeof(float);
  return bytes;
}

void StateStore::persist(const std::filesystem::path& dir) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());

  const StoreManifest& m = manifest_;
  json manifest = {
      {"format_version", m.format_version},
      {"layout", layout_to_json(m.layout)},
      {"S", m.num_slices},
      {"l", m.record_limit},
      {"n", m.n},
      {"batch_size", m.batch_size},
      {"seeds", {{"shuffle", m.shuffle_seed}, {"init", m.init_seed}}},
      {"adam", {{"learning_rate", m.hyper.learning_rate}, {"beta1", m.hyper.beta1}, {"beta2", m.hyper.beta2},
                {"epsilon", m.hyper.epsilon}}},
      {"epochs_per_slice", m.epochs_per_slice},
      {"grid_bits", m.grid_bits},
      {"phi", m.phi},
      {"ohs_depth", m.ohs_depth},
      {"dataset_fingerprint", m.dataset_fingerprint},
      {"plan_version", m.plan_version},
      {"tombstones", m.tombstones},
  };

  json checkpoints = json::array();
  for (const auto& [i, c] : checkpoints_) {
    std::vector<float> payload = to_floats(c.params.values);
    const auto m_values = to_floats(c.opt_state.m);
    const auto v_values = to_floats(c.opt_state.v);
    payload.insert(payload.end(), m_values.begin(), m_values.end());
    payload.insert(payload.end(), v_values.begin(), v_values.end());
    const auto name = checkpoint_file(i);
    const auto crc = write_vector_file(dir / name, static_cast<std::uint32_t>(i), kCheckpointBatch, payload);
    checkpoints.push_back({{"index", i},
                           {"file", name},
                           {"crc32", crc},
                           {"step_count", c.opt_state.step_count},
                           {"plan_version", c.plan_version}});
  }
  manifest["checkpoints"] = std::move(checkpoints);

  json increments = json::array();
  for (const auto& [key, r] : increments_) {
    const auto name = increment_file(key.first, key.second);
    const auto crc = write_vector_file(dir / name, static_cast<std::uint32_t>(key.first),
                                       static_cast<std::uint32_t>(key.second), to_floats(r.delta.values));
    increments.push_back({{"slice", key.first},
                          {"batch", key.second},
                          {"file", name},
                          {"crc32", crc},
                          {"consumed", r.consumed},
                          {"sample_ids", r.sample_ids}});
  }
  manifest["increments"] = std::move(increments);

  // The manifest goes last so a crash never leaves it pointing at missing files.
  write_text_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

StateStore StateStore::load(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw Error(ErrorKind::FileNotFound, "no manifest.json in " + dir.string());
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Corruption, "manifest.json: " + std::string(e.what()));
  }

  try {
    StoreManifest m;
    m.format_version = manifest.at("format_version").get<std::uint32_t>();
    if (m.format_version != kFormatVersion)
      throw Error(ErrorKind::Version, "manifest.json: unsupported format_version " + std::to_string(m.format_version));
    m.layout = layout_from_json(manifest.at("layout"));
    m.num_slices = manifest.at("S").get<int>();
    m.record_limit = manifest.at("l").get<int>();
    m.n = manifest.at("n").get<std::int64_t>();
    m.batch_size = manifest.at("batch_size").get<std::int64_t>();
    m.shuffle_seed = manifest.at("seeds").at("shuffle").get<std::uint64_t>();
    m.init_seed = manifest.at("seeds").at("init").get<std::uint64_t>();
    const auto& adam = manifest.at("adam");
    m.hyper = {adam.at("learning_rate").get<double>(), adam.at("beta1").get<double>(), adam.at("beta2").get<double>(),
               adam.at("epsilon").get<double>()};
    m.epochs_per_slice = manifest.at("epochs_per_slice").get<int>();
    m.grid_bits = manifest.at("grid_bits").get<int>();
    m.phi = manifest.at("phi").get<double>();
    m.ohs_depth = manifest.at("ohs_depth").get<int>();
    m.dataset_fingerprint = manifest.at("dataset_fingerprint").get<std::string>();
    m.plan_version = manifest.at("plan_version").get<std::int64_t>();
    m.tombstones = manifest.at("tombstones").get<std::vector<std::int64_t>>();

    StateStore store(m);
    const auto p = static_cast<std::size_t>(m.layout.param_count());
    for (const auto& entry : manifest.at("checkpoints")) {
      const auto name = entry.at("file").get<std::string>();
      const VectorFile file = read_checked(dir, name, entry.at("crc32").get<std::uint32_t>());
      const int i = entry.at("index").get<int>();
      if (file.values.size() != 3 * p || file.slice != static_cast<std::uint32_t>(i) || file.batch != kCheckpointBatch)
        throw Error(ErrorKind::Corruption, name + ": header disagrees with manifest");
      Checkpoint c;
      c.slice_index = i;
      c.params = ParameterVector(m.layout, slice_vector(file.values, 0, p));
      c.opt_state.m = slice_vector(file.values, p, p);
      c.opt_state.v = slice_vector(file.values, 2 * p, p);
      c.opt_state.step_count = entry.at("step_count").get<std::int64_t>();
      c.opt_state.hyper = m.hyper;
      c.plan_version = entry.at("plan_version").get<std::int64_t>();
      store.put_checkpoint(std::move(c));
    }
    for (const auto& entry : manifest.at("increments")) {
      const auto name = entry.at("file").get<std::string>();
      const VectorFile file = read_checked(dir, name, entry.at("crc32").get<std::uint32_t>());
      const int i = entry.at("slice").get<int>();
      const int j = entry.at("batch").get<int>();
      if (file.values.size() != p || file.slice != static_cast<std::uint32_t>(i) ||
          file.batch != static_cast<std::uint32_t>(j))
        throw Error(ErrorKind::Corruption, name + ": header disagrees with manifest");
      store.record_increment(i, j, ParameterVector(m.layout, slice_vector(file.values, 0, p)),
                             entry.at("sample_ids").get<std::vector<std::int64_t>>());
      if (entry.at("consumed").get<bool>()) store.mark_consumed(i, j);
    }
    return store;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Corruption, "manifest.json: " + std::string(e.what()));
  }
}

}  // namespace mu
