#pragma once

#include "stackssl/tensor.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace stackssl {

struct AdamConfig {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename Scalar>
struct AdamState {
  AdamConfig config;
  std::vector<Array<Scalar>> m;
  std::vector<Array<Scalar>> v;
  std::int64_t t = 0;

  explicit AdamState(AdamConfig c = {}) : config(c) {}
};

// One bias-corrected Adam update using each tensor's accumulated gradient.
// Tensors without a gradient are treated as having a zero gradient.
template <typename Scalar>
void adam_step(std::span<Tensor<Scalar>* const> params, AdamState<Scalar>& state) {
  if (state.m.empty()) {
    for (auto* p : params) {
      state.m.push_back(Array<Scalar>::Zero(p->values().size()));
      state.v.push_back(Array<Scalar>::Zero(p->values().size()));
    }
  }
  if (state.m.size() != params.size()) {
    throw ShapeError("adam_step: state tracks " + std::to_string(state.m.size()) + " parameters, got " +
                     std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m[i].size() != params[i]->values().size() ||
        (params[i]->has_grad() && params[i]->grad().size() != params[i]->values().size())) {
      throw ShapeError("adam_step: shape mismatch for parameter " + std::to_string(i) + " of shape " +
                       shape_string(params[i]->shape()));
    }
  }

  state.t += 1;
  const auto& c = state.config;
  const Scalar b1 = static_cast<Scalar>(c.beta1);
  const Scalar b2 = static_cast<Scalar>(c.beta2);
  const Scalar correction1 = static_cast<Scalar>(1.0 - std::pow(c.beta1, static_cast<double>(state.t)));
  const Scalar correction2 = static_cast<Scalar>(1.0 - std::pow(c.beta2, static_cast<double>(state.t)));
  const Scalar lr = static_cast<Scalar>(c.lr);
  const Scalar eps = static_cast<Scalar>(c.epsilon);

  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->has_grad()) {
      state.m[i] *= b1;
      state.v[i] *= b2;
    } else {
      const auto& g = params[i]->grad();
      state.m[i] = b1 * state.m[i] + (Scalar(1) - b1) * g;
      state.v[i] = b2 * state.v[i] + (Scalar(1) - b2) * g.square();
    }
    params[i]->values() -= lr * (state.m[i] / correction1) / ((state.v[i] / correction2).sqrt() + eps);
  }
}

}  // namespace stackssl
