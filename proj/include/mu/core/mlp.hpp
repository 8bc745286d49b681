#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

#include "mu/core/types.hpp"

namespace mu {

/// Glorot-uniform weights, zero biases. Deterministic in (layout, seed).
template <typename Scalar = float>
ParamVector<Scalar> init_params(const ModelLayout& layout, std::uint64_t seed) {
  layout.validate();
  ParamVector<Scalar> params(layout);
  std::mt19937_64 rng(seed);
  for (Index k = 0; k < layout.layer_count(); ++k) {
    const double bound = std::sqrt(6.0 / static_cast<double>(layout.fan_in(k) + layout.fan_out(k)));
    std::uniform_real_distribution<double> dist(-bound, bound);
    auto w = params.weights(k);
    for (Index c = 0; c < w.cols(); ++c)
      for (Index r = 0; r < w.rows(); ++r) w(r, c) = static_cast<Scalar>(dist(rng));
  }
  return params;
}

namespace detail {

template <typename Scalar>
void check_features(const ModelLayout& layout, Index cols) {
  if (cols != layout.input_dim)
    throw Error(ErrorKind::Shape, "feature column count " + std::to_string(cols) +
                                      " does not match input_dim " + std::to_string(layout.input_dim));
}

template <typename Scalar>
void softmax_rows(Matrix<Scalar>& logits) {
  for (Index r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
}

}  // namespace detail

/// Class probabilities, one row per input row. ReLU hidden layers, softmax head.
template <typename Scalar, typename Derived>
Matrix<Scalar> forward(const ParamVector<Scalar>& params, const Eigen::MatrixBase<Derived>& features) {
  detail::check_features<Scalar>(params.layout, features.cols());
  Matrix<Scalar> act = features.template cast<Scalar>();
  const Index layers = params.layout.layer_count();
  for (Index k = 0; k < layers; ++k) {
    Matrix<Scalar> z = act * params.weights(k);
    z.rowwise() += params.bias(k).transpose();
    if (k + 1 < layers)
      act = z.cwiseMax(Scalar(0));
    else
      act = std::move(z);
  }
  detail::softmax_rows(act);
  return act;
}

template <typename Scalar>
struct LossGrad {
  double loss = 0.0;
  ParamVector<Scalar> grad;
};

/// Mean softmax cross-entropy over the batch and its gradient by
/// backpropagation. The loss is accumulated in double.
template <typename Scalar>
LossGrad<Scalar> loss_grad(const ParamVector<Scalar>& params, const Batch<Scalar>& batch) {
  batch.validate();
  if (batch.rows() == 0) throw Error(ErrorKind::EmptyInput, "loss_grad on an empty batch");
  const ModelLayout& layout = params.layout;
  detail::check_features<Scalar>(layout, batch.features.cols());

  const Index layers = layout.layer_count();
  const Index rows = batch.rows();
  // activations[k] is the input to layer k; activations[0] is the batch.
  std::vector<Matrix<Scalar>> activations;
  activations.reserve(static_cast<std::size_t>(layers));
  activations.push_back(batch.features);
  Matrix<Scalar> logits;
  for (Index k = 0; k < layers; ++k) {
    Matrix<Scalar> z = activations.back() * params.weights(k);
    z.rowwise() += params.bias(k).transpose();
    if (k + 1 < layers)
      activations.push_back(z.cwiseMax(Scalar(0)));
    else
      logits = std::move(z);
  }

  LossGrad<Scalar> out{0.0, ParamVector<Scalar>(layout)};
  Matrix<Scalar> delta(rows, layout.output_dim);
  double loss_sum = 0.0;
  for (Index r = 0; r < rows; ++r) {
    const int label = batch.labels[static_cast<std::size_t>(r)];
    if (label < 0 || label >= layout.output_dim)
      throw Error(ErrorKind::InvalidArgument, "label out of range for output_dim");
    const Scalar max_logit = logits.row(r).maxCoeff();
    double denom = 0.0;
    for (Index c = 0; c < layout.output_dim; ++c) denom += std::exp(static_cast<double>(logits(r, c) - max_logit));
    const double log_denom = std::log(denom);
    loss_sum += log_denom - static_cast<double>(logits(r, label) - max_logit);
    for (Index c = 0; c < layout.output_dim; ++c) {
      const double p = std::exp(static_cast<double>(logits(r, c) - max_logit) - log_denom);
      delta(r, c) = static_cast<Scalar>((p - (c == label ? 1.0 : 0.0)) / static_cast<double>(rows));
    }
  }
  out.loss = loss_sum / static_cast<double>(rows);

  for (Index k = layers - 1; k >= 0; --k) {
    const Matrix<Scalar>& input = activations[static_cast<std::size_t>(k)];
    out.grad.weights(k).noalias() = input.transpose() * delta;
    out.grad.bias(k) = delta.colwise().sum().transpose();
    if (k > 0) {
      Matrix<Scalar> upstream = delta * params.weights(k).transpose();
      delta = upstream.cwiseProduct((input.array() > Scalar(0)).template cast<Scalar>().matrix());
    }
  }
  return out;
}

/// Index of the largest entry; ties go to the lower index.
template <typename Derived>
int argmax_row(const Eigen::MatrixBase<Derived>& row) {
  int best = 0;
  for (Index c = 1; c < row.size(); ++c)
    if (row(c) > row(best)) best = static_cast<int>(c);
  return best;
}

/// Predicted class per row, evaluated in chunks to bound memory.
template <typename Scalar, typename Derived>
std::vector<int> predict(const ParamVector<Scalar>& params, const Eigen::MatrixBase<Derived>& features) {
  constexpr Index kChunk = 4096;
  std::vector<int> out(static_cast<std::size_t>(features.rows()));
  for (Index start = 0; start < features.rows(); start += kChunk) {
    const Index len = std::min(kChunk, features.rows() - start);
    const Matrix<Scalar> probs = forward(params, features.middleRows(start, len));
    for (Index r = 0; r < len; ++r) out[static_cast<std::size_t>(start + r)] = argmax_row(probs.row(r));
  }
  return out;
}

/// Fraction of rows whose predicted class equals the label.
template <typename Scalar, typename Derived>
double accuracy(const ParamVector<Scalar>& params, const Eigen::MatrixBase<Derived>& features,
                std::span<const int> labels) {
  if (features.rows() == 0) throw Error(ErrorKind::EmptyInput, "accuracy on an empty dataset");
  if (static_cast<std::size_t>(features.rows()) != labels.size())
    throw Error(ErrorKind::Shape, "feature and label counts differ");
  const std::vector<int> predicted = predict(params, features);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < labels.size(); ++r) correct += predicted[r] == labels[r] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

enum class Sign { Plus, Minus };

/// Elementwise a + b or a - b.
template <typename Scalar>
ParamVector<Scalar> combine(const ParamVector<Scalar>& a, const ParamVector<Scalar>& b, Sign sign) {
  if (a.layout != b.layout || a.size() != b.size())
    throw Error(ErrorKind::Shape, "combine on vectors of different layouts");
  ParamVector<Scalar> out(a.layout);
  if (sign == Sign::Plus)
    out.values = a.values + b.values;
  else
    out.values = a.values - b.values;
  return out;
}

/// Rounds every coordinate to the nearest multiple of 2^-bits. Sums and
/// differences of grid values stay on the grid and are exact in Scalar as
/// long as magnitudes remain below 2^(digits - bits).
template <typename Scalar>
void snap_to_grid(ParamVector<Scalar>& params, int bits) {
  if (bits <= 0) return;
  const double scale = std::ldexp(1.0, bits);
  for (Index k = 0; k < params.size(); ++k) {
    const double x = static_cast<double>(params.values[k]);
    params.values[k] = static_cast<Scalar>(std::nearbyint(x * scale) / scale);
  }
}

}  // namespace mu
