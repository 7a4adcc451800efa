#pragma once

#include "stackssl/tensor.hpp"

#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace stackssl {

template <typename Scalar>
using LossBuilder = std::function<Var<Scalar>(Graph<Scalar>&)>;

// Max over all coordinates of |analytic - central| / (|analytic| + |central| + eps),
// central = (f(theta + h e) - f(theta - h e)) / 2h. Parameters are restored on return.
template <typename Scalar>
Scalar max_relative_error(const std::function<Scalar()>& f, std::span<Tensor<Scalar>* const> params,
                          std::span<const Array<Scalar>> analytic, Scalar h, Scalar eps = Scalar(1e-8)) {
  if (params.size() != analytic.size()) throw ShapeError("one analytic gradient per parameter required");
  Scalar worst = 0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& values = params[p]->values();
    if (analytic[p].size() != values.size()) throw ShapeError("analytic gradient size mismatch");
    for (Eigen::Index i = 0; i < values.size(); ++i) {
      const Scalar saved = values[i];
      values[i] = saved + h;
      const Scalar up = f();
      values[i] = saved - h;
      const Scalar down = f();
      values[i] = saved;
      const Scalar central = (up - down) / (Scalar(2) * h);
      const Scalar a = analytic[p][i];
      const Scalar err = std::abs(a - central) / (std::abs(a) + std::abs(central) + eps);
      worst = std::max(worst, err);
    }
  }
  return worst;
}

// Builds the loss once for analytic gradients, then compares against central differences.
template <typename Scalar>
Scalar grad_check(const LossBuilder<Scalar>& build, std::span<Tensor<Scalar>* const> params, Scalar h,
                  Scalar eps = Scalar(1e-8)) {
  std::vector<Array<Scalar>> analytic;
  {
    for (auto* p : params) p->zero_grad();
    Graph<Scalar> g;
    g.backward(build(g));
    for (auto* p : params) analytic.push_back(p->grad());
  }
  auto value = [&build]() {
    Graph<Scalar> g;
    return build(g).item();
  };
  return max_relative_error<Scalar>(value, params, analytic, h, eps);
}

}  // namespace stackssl
