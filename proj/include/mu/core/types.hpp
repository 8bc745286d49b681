#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "mu/error.hpp"

namespace mu {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Fully connected architecture: input -> hidden... -> output logits.
struct ModelLayout {
  Index input_dim = 1;
  std::vector<Index> hidden_dims{128, 128};
  Index output_dim = 2;

  Index layer_count() const { return static_cast<Index>(hidden_dims.size()) + 1; }

  Index fan_in(Index layer) const {
    return layer == 0 ? input_dim : hidden_dims[static_cast<std::size_t>(layer - 1)];
  }

  Index fan_out(Index layer) const {
    return layer + 1 == layer_count() ? output_dim : hidden_dims[static_cast<std::size_t>(layer)];
  }

  /// Offset of layer `layer`'s weight block inside the flat vector. The bias
  /// block follows immediately after fan_in * fan_out weights.
  Index offset(Index layer) const {
    Index off = 0;
    for (Index k = 0; k < layer; ++k) off += fan_in(k) * fan_out(k) + fan_out(k);
    return off;
  }

  Index param_count() const { return offset(layer_count()); }

  void validate() const {
    if (input_dim <= 0) throw Error(ErrorKind::InvalidLayout, "input_dim must be positive");
    if (output_dim <= 0) throw Error(ErrorKind::InvalidLayout, "output_dim must be positive");
    for (Index h : hidden_dims)
      if (h <= 0) throw Error(ErrorKind::InvalidLayout, "hidden dimensions must be positive");
  }

  friend bool operator==(const ModelLayout&, const ModelLayout&) = default;
};

/// Flat parameter vector of an MLP. Layer k's weights are stored column-major
/// as a fan_in x fan_out block, followed by its fan_out biases.
template <typename Scalar>
struct ParamVector {
  ModelLayout layout;
  Vector<Scalar> values;

  ParamVector() = default;
  explicit ParamVector(ModelLayout l) : layout(std::move(l)), values(Vector<Scalar>::Zero(layout.param_count())) {}
  ParamVector(ModelLayout l, Vector<Scalar> v) : layout(std::move(l)), values(std::move(v)) {
    if (values.size() != layout.param_count())
      throw Error(ErrorKind::Shape, "parameter vector length does not match layout");
  }

  Index size() const { return values.size(); }

  Eigen::Map<const Matrix<Scalar>> weights(Index layer) const {
    return {values.data() + layout.offset(layer), layout.fan_in(layer), layout.fan_out(layer)};
  }
  Eigen::Map<Matrix<Scalar>> weights(Index layer) {
    return {values.data() + layout.offset(layer), layout.fan_in(layer), layout.fan_out(layer)};
  }
  Eigen::Map<const Vector<Scalar>> bias(Index layer) const {
    return {values.data() + layout.offset(layer) + layout.fan_in(layer) * layout.fan_out(layer),
            layout.fan_out(layer)};
  }
  Eigen::Map<Vector<Scalar>> bias(Index layer) {
    return {values.data() + layout.offset(layer) + layout.fan_in(layer) * layout.fan_out(layer),
            layout.fan_out(layer)};
  }

  bool all_finite() const { return values.allFinite(); }

  template <typename Other>
  ParamVector<Other> cast() const {
    return ParamVector<Other>(layout, values.template cast<Other>());
  }

  /// Bitwise equality (NaN-aware, -0 != +0), the comparison used by the
  /// determinism contracts.
  bool bit_identical(const ParamVector& other) const {
    if (layout != other.layout || values.size() != other.values.size()) return false;
    return std::memcmp(values.data(), other.values.data(),
                       static_cast<std::size_t>(values.size()) * sizeof(Scalar)) == 0;
  }
};

using ParameterVector = ParamVector<float>;

/// A mini-batch gathered from a dataset. Rows of `features` align with
/// `labels` and `sample_ids`.
template <typename Scalar>
struct Batch {
  Matrix<Scalar> features;
  std::vector<int> labels;
  std::vector<std::int64_t> sample_ids;

  Index rows() const { return features.rows(); }

  void validate() const {
    if (static_cast<std::size_t>(features.rows()) != labels.size() ||
        (!sample_ids.empty() && sample_ids.size() != labels.size()))
      throw Error(ErrorKind::Shape, "batch row counts disagree");
  }
};

}  // namespace mu
