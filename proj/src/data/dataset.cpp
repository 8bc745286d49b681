#include "mu/data/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "mu/core/mlp.hpp"
#include "mu/core/trainer.hpp"

namespace mu {

namespace {

// RFC-4180 field splitting for a single physical line (no embedded newlines).
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          current.push_back('"');
          ++k;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

bool parse_real(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* first = t.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), out);
  return ec == std::errc() && ptr == t.data() + t.size() && std::isfinite(out);
}

std::string quote_csv(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

Batch<float> Dataset::gather(std::span<const std::int64_t> ids) const {
  for (auto id : ids)
    if (id < 0 || id >= size()) throw Error(ErrorKind::NotFound, "sample id " + std::to_string(id) + " out of range");
  return gather_batch<float>(features, labels, ids);
}

Dataset Dataset::subset(std::span<const std::int64_t> ids, std::string subset_name) const {
  Dataset out;
  out.name = std::move(subset_name);
  out.feature_names = feature_names;
  out.features.resize(static_cast<Index>(ids.size()), feature_dim());
  out.labels.resize(ids.size());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || ids[r] >= size())
      throw Error(ErrorKind::NotFound, "sample id " + std::to_string(ids[r]) + " out of range");
    out.features.row(static_cast<Index>(r)) = features.row(ids[r]);
    out.labels[r] = labels[static_cast<std::size_t>(ids[r])];
  }
  return out;
}

std::string Dataset::fingerprint() const {
  uLong crc = crc32(0L, Z_NULL, 0);
  const std::int64_t dims[2] = {size(), static_cast<std::int64_t>(feature_dim())};
  crc = crc32(crc, reinterpret_cast<const Bytef*>(dims), sizeof(dims));
  // Row-major traversal so the fingerprint does not depend on storage order.
  for (Index r = 0; r < features.rows(); ++r)
    for (Index c = 0; c < features.cols(); ++c) {
      const float v = features(r, c);
      crc = crc32(crc, reinterpret_cast<const Bytef*>(&v), sizeof(v));
    }
  if (!labels.empty())
    crc = crc32(crc, reinterpret_cast<const Bytef*>(labels.data()),
                static_cast<uInt>(labels.size() * sizeof(int)));
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08lx", static_cast<unsigned long>(crc));
  return buf;
}

Dataset load_csv(const std::filesystem::path& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::FileNotFound, "cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::EmptyInput, path.string() + " has no header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = trim(h);

  const auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end())
    throw Error(ErrorKind::Parse, "label column '" + label_column + "' not in header of " + path.string());
  const std::size_t label_idx = static_cast<std::size_t>(label_it - header.begin());

  Dataset ds;
  ds.name = path.stem().string();
  for (std::size_t c = 0; c < header.size(); ++c)
    if (c != label_idx) ds.feature_names.push_back(header[c]);
  const std::size_t dim = ds.feature_names.size();

  std::vector<float> values;
  std::size_t row = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_csv_line(line);
    const std::string where = "row " + std::to_string(row) + " (line " + std::to_string(line_no) + ")";
    if (fields.size() != header.size())
      throw Error(ErrorKind::Parse, where + ": expected " + std::to_string(header.size()) + " cells, got " +
                                        std::to_string(fields.size()));
    for (std::size_t c = 0; c < fields.size(); ++c) {
      double v = 0.0;
      if (!parse_real(fields[c], v))
        throw Error(ErrorKind::Parse, where + ", column '" + header[c] + "': '" + fields[c] + "' is not a number");
      if (c == label_idx) {
        if (v != 0.0 && v != 1.0)
          throw Error(ErrorKind::NonBinaryLabel, where + ": label '" + fields[c] + "' is not 0 or 1");
        ds.labels.push_back(static_cast<int>(v));
      } else {
        values.push_back(static_cast<float>(v));
      }
    }
  }
  if (row == 0) throw Error(ErrorKind::EmptyInput, path.string() + " has no data rows");

  ds.features.resize(static_cast<Index>(row), static_cast<Index>(dim));
  for (std::size_t r = 0; r < row; ++r)
    for (std::size_t c = 0; c < dim; ++c)
      ds.features(static_cast<Index>(r), static_cast<Index>(c)) = values[r * dim + c];
  return ds;
}

void write_csv(const Dataset& dataset, const std::filesystem::path& path, const std::string& label_column) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  for (Index c = 0; c < dataset.feature_dim(); ++c) {
    const std::string name = static_cast<std::size_t>(c) < dataset.feature_names.size()
                                 ? dataset.feature_names[static_cast<std::size_t>(c)]
                                 : "x" + std::to_string(c);
    out << quote_csv(name) << ',';
  }
  out << quote_csv(label_column) << "\r\n";
  char buf[32];
  for (Index r = 0; r < dataset.features.rows(); ++r) {
    for (Index c = 0; c < dataset.feature_dim(); ++c) {
      // %.9g round-trips any float exactly.
      std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(dataset.features(r, c)));
      out << buf << ',';
    }
    out << dataset.labels[static_cast<std::size_t>(r)] << "\r\n";
  }
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

Dataset gen_synthetic(std::int64_t n, Index dim, std::uint64_t seed, double noise_stddev) {
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "synthetic dataset needs n >= 2");
  if (dim < 1) throw Error(ErrorKind::InvalidArgument, "synthetic dataset needs dim >= 1");
  if (!(noise_stddev >= 0.0)) throw Error(ErrorKind::InvalidArgument, "noise stddev must be non-negative");

  std::mt19937_64 teacher_rng(mix_seed(seed, 0x7EAC4E5ULL));
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector<double> teacher(dim);
  for (Index c = 0; c < dim; ++c) teacher[c] = normal(teacher_rng);
  teacher.normalize();

  std::mt19937_64 rng(mix_seed(seed, 0xDA7AULL));
  Dataset ds;
  ds.name = "synthetic-n" + std::to_string(n) + "-d" + std::to_string(dim) + "-s" + std::to_string(seed);
  ds.features.resize(n, dim);
  ds.labels.resize(static_cast<std::size_t>(n));
  for (Index c = 0; c < dim; ++c) ds.feature_names.push_back("x" + std::to_string(c));
  for (std::int64_t r = 0; r < n; ++r) {
    double score = 0.0;
    for (Index c = 0; c < dim; ++c) {
      const double x = normal(rng);
      ds.features(r, c) = static_cast<float>(x);
      score += teacher[c] * static_cast<double>(ds.features(r, c));
    }
    score += noise_stddev * normal(rng);
    ds.labels[static_cast<std::size_t>(r)] = score > 0.0 ? 1 : 0;
  }
  return ds;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& dataset, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0))
    throw Error(ErrorKind::InvalidArgument, "test fraction must lie in [0, 1)");
  std::vector<std::int64_t> order(static_cast<std::size_t>(dataset.size()));
  std::iota(order.begin(), order.end(), std::int64_t{0});
  std::mt19937_64 rng(mix_seed(seed, 0x5B117ULL));
  std::shuffle(order.begin(), order.end(), rng);
  const auto test_n = static_cast<std::size_t>(std::llround(static_cast<double>(order.size()) * test_fraction));
  std::span<const std::int64_t> all(order);
  return {dataset.subset(all.subspan(test_n), dataset.name + "-train"),
          dataset.subset(all.first(test_n), dataset.name + "-test")};
}

double evaluate(const ParameterVector& params, const Dataset& dataset) {
  if (dataset.size() == 0) throw Error(ErrorKind::EmptyInput, "evaluate on an empty dataset");
  return accuracy(params, dataset.features, std::span<const int>(dataset.labels));
}

}  // namespace mu
