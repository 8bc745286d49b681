#pragma once

#include <cmath>
#include <cstdint>

#include "mu/core/types.hpp"

namespace mu {

struct AdamHyper {
  double learning_rate = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  friend bool operator==(const AdamHyper&, const AdamHyper&) = default;
};

template <typename Scalar>
struct OptimizerState {
  Vector<Scalar> m;
  Vector<Scalar> v;
  std::int64_t step_count = 0;
  AdamHyper hyper;

  OptimizerState() = default;
  OptimizerState(Index size, AdamHyper h = {})
      : m(Vector<Scalar>::Zero(size)), v(Vector<Scalar>::Zero(size)), hyper(h) {}

  bool bit_identical(const OptimizerState& other) const {
    auto same = [](const Vector<Scalar>& a, const Vector<Scalar>& b) {
      return a.size() == b.size() &&
             std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.size()) * sizeof(Scalar)) == 0;
    };
    return step_count == other.step_count && hyper == other.hyper && same(m, other.m) && same(v, other.v);
  }
};

/// One bias-corrected Adam update, in place.
template <typename Scalar>
void adam_step(ParamVector<Scalar>& params, OptimizerState<Scalar>& state, const ParamVector<Scalar>& grad) {
  if (params.size() != grad.size() || state.m.size() != params.size() || state.v.size() != params.size())
    throw Error(ErrorKind::Shape, "adam_step vector lengths disagree");
  if (!grad.values.allFinite()) throw Error(ErrorKind::Numeric, "non-finite gradient element");

  const AdamHyper& h = state.hyper;
  state.step_count += 1;
  const double step = static_cast<double>(state.step_count);
  const Scalar b1 = static_cast<Scalar>(h.beta1);
  const Scalar b2 = static_cast<Scalar>(h.beta2);
  const Scalar correction1 = static_cast<Scalar>(1.0 - std::pow(h.beta1, step));
  const Scalar correction2 = static_cast<Scalar>(1.0 - std::pow(h.beta2, step));
  const Scalar lr = static_cast<Scalar>(h.learning_rate);
  const Scalar eps = static_cast<Scalar>(h.epsilon);

  state.m = b1 * state.m + (Scalar(1) - b1) * grad.values;
  state.v = b2 * state.v + (Scalar(1) - b2) * grad.values.cwiseProduct(grad.values);
  const auto m_hat = state.m.array() / correction1;
  const auto v_hat = state.v.array() / correction2;
  params.values.array() -= lr * m_hat / (v_hat.sqrt() + eps);
}

}  // namespace mu
