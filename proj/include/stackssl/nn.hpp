#pragma once

// Fully-connected layers. A trainable (non-const) layer binds its tensors into
// the graph so backward() reaches them; a const layer enters as constants.

#include "stackssl/tensor.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace stackssl {

template <typename Scalar>
struct Dense {
  Tensor<Scalar> weight;  // in x out
  Tensor<Scalar> bias;    // 1 x out

  std::size_t in_features() const { return weight.shape()[0]; }
  std::size_t out_features() const { return weight.shape()[1]; }
};

// Zero biases, weights ~ N(0, 1/fan_in).
template <typename Scalar>
Dense<Scalar> make_dense(std::size_t in, std::size_t out, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(in)));
  Array<Scalar> w(static_cast<Eigen::Index>(in * out));
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = static_cast<Scalar>(normal(rng));
  Dense<Scalar> layer{Tensor<Scalar>({in, out}, std::move(w), true), Tensor<Scalar>::zeros({1, out})};
  layer.bias.set_requires_grad(true);
  return layer;
}

template <typename Scalar>
Var<Scalar> dense_forward(Graph<Scalar>& g, Dense<Scalar>& layer, Var<Scalar> x) {
  return add_row(matmul(x, g.param(layer.weight)), g.param(layer.bias));
}

template <typename Scalar>
Var<Scalar> dense_forward(Graph<Scalar>& g, const Dense<Scalar>& layer, Var<Scalar> x) {
  return add_row(matmul(x, g.constant(layer.weight)), g.constant(layer.bias));
}

// Hidden layers use ReLU; the last layer is left linear.
template <typename Scalar, typename Layers>
Var<Scalar> mlp_forward(Graph<Scalar>& g, Layers& layers, Var<Scalar> x) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    x = dense_forward(g, layers[i], x);
    if (i + 1 < layers.size()) x = relu(x);
  }
  return x;
}

template <typename Scalar>
std::vector<Dense<Scalar>> make_mlp(const std::vector<std::size_t>& widths, Rng& rng) {
  std::vector<Dense<Scalar>> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) layers.push_back(make_dense<Scalar>(widths[i], widths[i + 1], rng));
  return layers;
}

template <typename Scalar>
void collect_parameters(std::vector<Dense<Scalar>>& layers, std::vector<Tensor<Scalar>*>& out) {
  for (auto& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
}

template <typename Scalar>
void set_trainable(std::vector<Dense<Scalar>>& layers, bool trainable) {
  for (auto& l : layers) {
    l.weight.set_requires_grad(trainable);
    l.bias.set_requires_grad(trainable);
  }
}

}  // namespace stackssl
