#pragma once

// Dense tensors and a define-by-run reverse-mode autodiff graph.
//
// Values are stored row-major in an Eigen array. Rank-2 tensors (and rank 0/1,
// viewed as 1x1 / 1xn) expose an Eigen::Map so products go through Eigen.
// A Graph is rebuilt for every forward pass; nodes are appended in evaluation
// order, which is therefore a valid topological order for backward().

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace stackssl {

using Shape = std::vector<std::size_t>;
using Rng = std::mt19937_64;

// Independent, reproducible stream `stream` of a run seeded with `seed`.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

template <typename Scalar>
using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <typename Scalar>
class Tensor {
 public:
  using Values = Array<Scalar>;

  Tensor() : values_(Values::Zero(1)) {}

  Tensor(Shape shape, Values values, bool requires_grad = false)
      : shape_(std::move(shape)), values_(std::move(values)), requires_grad_(requires_grad) {
    for (std::size_t extent : shape_) {
      if (extent == 0) throw ShapeError("tensor extents must be positive, got " + shape_string(shape_));
    }
    if (static_cast<std::size_t>(values_.size()) != element_count(shape_)) {
      throw ShapeError("tensor of shape " + shape_string(shape_) + " needs " +
                       std::to_string(element_count(shape_)) + " values, got " +
                       std::to_string(values_.size()));
    }
  }

  static Tensor zeros(Shape shape) {
    const auto n = static_cast<Eigen::Index>(element_count(shape));
    return Tensor(std::move(shape), Values::Zero(n));
  }

  static Tensor full(Shape shape, Scalar value) {
    const auto n = static_cast<Eigen::Index>(element_count(shape));
    return Tensor(std::move(shape), Values::Constant(n, value));
  }

  static Tensor scalar(Scalar value) { return Tensor({}, Values::Constant(1, value)); }

  template <typename Derived>
  static Tensor from_matrix(const Eigen::MatrixBase<Derived>& m) {
    Matrix<Scalar> rm = m.template cast<Scalar>();
    Values v = Eigen::Map<const Values>(rm.data(), rm.size());
    return Tensor({static_cast<std::size_t>(rm.rows()), static_cast<std::size_t>(rm.cols())},
                  std::move(v));
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }

  // Matrix view extents: rank 0 -> 1x1, rank 1 -> 1xn, rank 2 -> as stored.
  Eigen::Index rows() const {
    check_matrix_rank();
    return shape_.size() == 2 ? static_cast<Eigen::Index>(shape_[0]) : 1;
  }
  Eigen::Index cols() const {
    check_matrix_rank();
    if (shape_.empty()) return 1;
    return static_cast<Eigen::Index>(shape_.back());
  }

  const Values& values() const { return values_; }
  Values& values() { return values_; }

  Eigen::Map<const Matrix<Scalar>> matrix() const {
    return Eigen::Map<const Matrix<Scalar>>(values_.data(), rows(), cols());
  }
  Eigen::Map<Matrix<Scalar>> matrix() {
    return Eigen::Map<Matrix<Scalar>>(values_.data(), rows(), cols());
  }

  Scalar item() const {
    if (size() != 1) throw ShapeError("item() on tensor of shape " + shape_string(shape_));
    return values_[0];
  }

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool flag) {
    requires_grad_ = flag;
    if (!flag) grad_.reset();
  }

  bool has_grad() const { return grad_.has_value(); }
  const Values& grad() const {
    if (!grad_) throw std::logic_error("tensor has no gradient");
    return *grad_;
  }
  void zero_grad() { grad_ = Values::Zero(values_.size()); }
  void clear_grad() { grad_.reset(); }
  void accumulate_grad(const Values& g) {
    if (g.size() != values_.size()) throw ShapeError("gradient size mismatch");
    if (!grad_) {
      grad_ = g;
    } else {
      *grad_ += g;
    }
  }

 private:
  void check_matrix_rank() const {
    if (shape_.size() > 2) throw ShapeError("matrix view of rank-" + std::to_string(shape_.size()) + " tensor");
  }

  Shape shape_;
  Values values_;
  bool requires_grad_ = false;
  std::optional<Values> grad_;
};

enum class OpKind {
  leaf,
  constant,
  matmul,
  add,
  sub,
  mul,
  scale,
  add_scalar,
  add_row,
  activation,
  reduce,
  dropout,
  slice_cols,
};

enum class Activation { relu, sigmoid, exp, log, softplus };
enum class Reduction { sum, mean };

template <typename Scalar>
class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while its Graph lives.
template <typename Scalar>
class Var {
 public:
  Var() = default;
  Var(Graph<Scalar>* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph<Scalar>& graph() const { return *graph_; }
  std::size_t id() const { return id_; }
  const Tensor<Scalar>& value() const { return graph_->value(id_); }
  const Shape& shape() const { return value().shape(); }
  Scalar item() const { return value().item(); }

 private:
  Graph<Scalar>* graph_ = nullptr;
  std::size_t id_ = 0;
};

template <typename Scalar>
class Graph {
 public:
  using Values = Array<Scalar>;

  struct Node {
    OpKind kind;
    std::vector<std::size_t> inputs;
    Tensor<Scalar> value;
    bool needs_grad = false;
    Tensor<Scalar>* bound = nullptr;
    // Adds this node's contribution into the gradients of its inputs.
    std::function<void(Graph&, const Node&, const Values&)> backward;
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Binds a tensor; its gradient is accumulated by backward() when it requires grad.
  Var<Scalar> param(Tensor<Scalar>& t) {
    Node n{OpKind::leaf, {}, t, t.requires_grad(), &t, {}};
    n.value.set_requires_grad(false);
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  // A value the graph never differentiates with respect to.
  Var<Scalar> constant(Tensor<Scalar> t) {
    t.set_requires_grad(false);
    nodes_.push_back(Node{OpKind::constant, {}, std::move(t), false, nullptr, {}});
    return {this, nodes_.size() - 1};
  }

  template <typename Derived>
  Var<Scalar> constant(const Eigen::MatrixBase<Derived>& m) {
    return constant(Tensor<Scalar>::from_matrix(m));
  }

  Var<Scalar> record(OpKind kind, std::vector<std::size_t> inputs, Tensor<Scalar> value,
                     std::function<void(Graph&, const Node&, const Values&)> backward) {
    bool needs = false;
    for (std::size_t in : inputs) {
      if (in >= nodes_.size()) throw std::logic_error("graph input refers to a later node");
      needs = needs || nodes_[in].needs_grad;
    }
    nodes_.push_back(Node{kind, std::move(inputs), std::move(value), needs, nullptr, std::move(backward)});
    return {this, nodes_.size() - 1};
  }

  const Tensor<Scalar>& value(std::size_t id) const { return nodes_.at(id).value; }
  const Node& node(std::size_t id) const { return nodes_.at(id); }
  std::size_t size() const { return nodes_.size(); }
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }

  // Gradient accumulator of a node; only valid inside backward().
  Values& grad(std::size_t id) { return grads_[id]; }

  // Seeds d(loss)/d(loss) = 1 and propagates to every bound tensor that
  // requires grad. Bound tensors accumulate, so reset them between calls.
  void backward(Var<Scalar> loss) {
    if (&loss.graph() != this) throw std::invalid_argument("loss belongs to another graph");
    if (loss.value().size() != 1) {
      throw ShapeError("backward() needs a scalar loss, got shape " + shape_string(loss.shape()));
    }
    grads_.assign(nodes_.size(), Values());
    for (std::size_t i = 0; i <= loss.id(); ++i) {
      if (nodes_[i].needs_grad) grads_[i] = Values::Zero(static_cast<Eigen::Index>(nodes_[i].value.size()));
    }
    if (!nodes_[loss.id()].needs_grad) return;
    grads_[loss.id()].setOnes();
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
      const Node& n = nodes_[i];
      if (!n.needs_grad) continue;
      if (n.bound != nullptr) {
        n.bound->accumulate_grad(grads_[i]);
      } else if (n.backward) {
        n.backward(*this, n, grads_[i]);
      }
    }
    grads_.clear();
  }

 private:
  std::vector<Node> nodes_;
  std::vector<Values> grads_;
};

namespace detail {

template <typename Scalar>
void require_same_graph(const Var<Scalar>& a, const Var<Scalar>& b) {
  if (&a.graph() != &b.graph()) throw std::invalid_argument("operands belong to different graphs");
}

template <typename Scalar>
void require_same_shape(const char* op, const Var<Scalar>& a, const Var<Scalar>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

template <typename Scalar>
void require_rank2(const char* op, const Var<Scalar>& a) {
  if (a.shape().size() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got shape " + shape_string(a.shape()));
  }
}

template <typename Scalar>
Eigen::Map<Matrix<Scalar>> as_matrix(Array<Scalar>& g, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<Matrix<Scalar>>(g.data(), rows, cols);
}

template <typename Scalar>
Array<Scalar> stable_softplus(const Array<Scalar>& x) {
  return x.max(Scalar(0)) + (-x.abs()).exp().log1p();
}

template <typename Scalar>
Array<Scalar> stable_sigmoid(const Array<Scalar>& x) {
  Array<Scalar> out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] >= 0) {
      out[i] = Scalar(1) / (Scalar(1) + std::exp(-x[i]));
    } else {
      const Scalar e = std::exp(x[i]);
      out[i] = e / (Scalar(1) + e);
    }
  }
  return out;
}

}  // namespace detail

// (m x k) * (k x n)
template <typename Scalar>
Var<Scalar> matmul(Var<Scalar> a, Var<Scalar> b) {
  detail::require_same_graph(a, b);
  detail::require_rank2("matmul", a);
  detail::require_rank2("matmul", b);
  if (a.shape()[1] != b.shape()[0]) {
    throw ShapeError("matmul: inner extents differ for " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()));
  }
  Matrix<Scalar> out = a.value().matrix() * b.value().matrix();
  auto& g = a.graph();
  return g.record(OpKind::matmul, {a.id(), b.id()}, Tensor<Scalar>::from_matrix(out),
                  [](Graph<Scalar>& gr, const auto& n, const Array<Scalar>& gout) {
                    const auto& av = gr.value(n.inputs[0]);
                    const auto& bv = gr.value(n.inputs[1]);
                    const auto G = Eigen::Map<const Matrix<Scalar>>(gout.data(), av.rows(), bv.cols());
                    if (gr.needs_grad(n.inputs[0])) {
                      detail::as_matrix(gr.grad(n.inputs[0]), av.rows(), av.cols()).noalias() +=
                          G * bv.matrix().transpose();
                    }
                    if (gr.needs_grad(n.inputs[1])) {
                      detail::as_matrix(gr.grad(n.inputs[1]), bv.rows(), bv.cols()).noalias() +=
                          av.matrix().transpose() * G;
                    }
                  });
}

template <typename Scalar>
Var<Scalar> add(Var<Scalar> a, Var<Scalar> b) {
  detail::require_same_graph(a, b);
  detail::require_same_shape("add", a, b);
  Tensor<Scalar> out(a.shape(), a.value().values() + b.value().values());
  return a.graph().record(OpKind::add, {a.id(), b.id()}, std::move(out),
                          [](Graph<Scalar>& gr, const auto& n, const Array<Scalar>& gout) {
                            for (std::size_t in : n.inputs) {
                              if (gr.needs_grad(in)) gr.grad(in) += gout;
                            }
                          });
}

template <typename Scalar>
Var<Scalar> sub(Var<Scalar> a, Var<Scalar> b) {
  detail::require_same_graph(a, b);
  detail::require_same_shape("sub", a, b);
  Tensor<Scalar> out(a.shape(), a.value().values() - b.value().values());
  return a.graph().record(OpKind::sub, {a.id(), b.id()}, std::move(out),
                          [](Graph<Scalar>& gr, const auto& n, const Array<Scalar>& gout) {
                            if (gr.needs_grad(n.inputs[0])) gr.grad(n.inputs[0]) += gout;
                            if (gr.needs_grad(n.inputs[1])) gr.grad(n.inputs[1]) -= gout;
                          });
}

template <typename Scalar>
Var<Scalar> mul(Var<Scalar> a, Var<Scalar> b) {
  detail::require_same_graph(a, b);
  detail::require_same_shape("mul", a, b);
  Tensor<Scalar> out(a.shape(), a.value().values() * b.value().values());
  return a.graph().record(OpKind::mul, {a.id(), b.id()}, std::move(out),
                          [](Graph<Scalar>& gr, const auto& n, const Array<Scalar>& gout) {
                            const auto& av = gr.value(n.inputs[0]).values();
                            const auto& bv = gr.value(n.inputs[1]).values();
                            if (gr.needs_grad(n.inputs[0])) gr.grad(n.inputs[0]) += gout * bv;
                            if (gr.needs_grad(n.inputs[1])) gr.grad(n.inputs[1]) += gout * av;
                          });
}

template <typename Scalar>
Var<Scalar> scale(Var<Scalar> a, Scalar c) {
  Tensor<Scalar> out(a.shape(), a.value().values() * c);
  return a.graph().record(OpKind::scale, {a.id()}, std::move(out),
                          [c](Graph<Scalar>& gr, const auto& n, const Array<Scalar>& gout) {
                            gr.grad(n.inputs[0]) += gout * c;
                          });
}

template <typename Scalar>
Var<Scalar> add_scalar(Var<Scalar> a, Scalar c) {
  Tensor<Scalar> out(a.shape(), a.value().values() + c);
  return a.graph().record(OpKind::add_scalar, {a.id()}, std::move(out),
                          [](Graph<Scalar>& gr, const auto& n, const Array<Scalar>& gout) {
                            gr.grad(n.inputs[0]) += gout;
                          });
}

// x (m x n) plus a bias row of n values broadcast over rows.
template <typename Scalar>
Var<Scalar> add_row(Var<Scalar> x, Var<Scalar> bias) {
  detail::require_same_graph(x, bias);
  detail::require_rank2("add_row", x);
  const auto n = static_cast<std::size_t>(x.value().cols());
  if (bias.value().size() != n || bias.shape().size() > 2 ||
      (bias.shape().size() == 2 && bias.shape()[0] != 1)) {
    throw ShapeError("add_row: bias of shape " + shape_string(bias.shape()) + " does not match rows of " +
                     shape_string(x.shape()));
  }
  Matrix<Scalar> out = x.value().matrix();
  out.rowwise() += bias.value().matrix().row(0);
  return x.graph().record(OpKind::add_row, {x.id(), bias.id()}, Tensor<Scalar>::from_matrix(out),
                          [](Graph<Scalar>& gr, const auto& n, const Array<Scalar>& gout) {
                            const auto& xv = gr.value(n.inputs[0]);
                            const auto G = Eigen::Map<const Matrix<Scalar>>(gout.data(), xv.rows(), xv.cols());
                            if (gr.needs_grad(n.inputs[0])) gr.grad(n.inputs[0]) += gout;
                            if (gr.needs_grad(n.inputs[1])) {
                              detail::as_matrix(gr.grad(n.inputs[1]), 1, xv.cols()) += G.colwise().sum();
                            }
                          });
}

template <typename Scalar>
Var<Scalar> activation(Var<Scalar> x, Activation kind) {
  const auto& xv = x.value().values();
  Array<Scalar> out;
  switch (kind) {
    case Activation::relu:
      out = xv.max(Scalar(0));
      break;
    case Activation::sigmoid:
      out = detail::stable_sigmoid<Scalar>(xv);
      break;
    case Activation::exp:
      out = xv.exp();
      break;
    case Activation::log:
      if ((xv <= Scalar(0)).any()) throw DomainError("log of a non-positive value");
      out = xv.log();
      break;
    case Activation::softplus:
      out = detail::stable_softplus<Scalar>(xv);
      break;
  }
  return x.graph().record(
      OpKind::activation, {x.id()}, Tensor<Scalar>(x.shape(), std::move(out)),
      [kind](Graph<Scalar>& gr, const auto& n, const Array<Scalar>& gout) {
        const auto& in = gr.value(n.inputs[0]).values();
        const auto& y = n.value.values();
        auto& gx = gr.grad(n.inputs[0]);
        switch (kind) {
          case Activation::relu:
            gx += (in > Scalar(0)).select(gout, Scalar(0));
            break;
          case Activation::sigmoid:
            gx += gout * y * (Scalar(1) - y);
            break;
          case Activation::exp:
            gx += gout * y;
            break;
          case Activation::log:
            gx += gout / in;
            break;
          case Activation::softplus:
            gx += gout * detail::stable_sigmoid<Scalar>(in);
            break;
        }
      });
}

template <typename Scalar>
Var<Scalar> relu(Var<Scalar> x) { return activation(x, Activation::relu); }
template <typename Scalar>
Var<Scalar> sigmoid(Var<Scalar> x) { return activation(x, Activation::sigmoid); }
template <typename Scalar>
Var<Scalar> exp(Var<Scalar> x) { return activation(x, Activation::exp); }
template <typename Scalar>
Var<Scalar> log(Var<Scalar> x) { return activation(x, Activation::log); }
template <typename Scalar>
Var<Scalar> softplus(Var<Scalar> x) { return activation(x, Activation::softplus); }

// Sums or averages over the listed axes, which are removed from the shape.
// An empty axis set is the identity.
template <typename Scalar>
Var<Scalar> reduce(Var<Scalar> x, Reduction kind, std::vector<std::size_t> axes) {
  const Shape& shape = x.shape();
  std::sort(axes.begin(), axes.end());
  if (std::adjacent_find(axes.begin(), axes.end()) != axes.end()) {
    throw ShapeError("reduce: repeated axis");
  }
  for (std::size_t a : axes) {
    if (a >= shape.size()) {
      throw ShapeError("reduce: axis " + std::to_string(a) + " invalid for shape " + shape_string(shape));
    }
  }
  Shape out_shape;
  std::vector<bool> reduced(shape.size(), false);
  std::size_t count = 1;
  for (std::size_t a : axes) {
    reduced[a] = true;
    count *= shape[a];
  }
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (!reduced[i]) out_shape.push_back(shape[i]);
  }

  // Output flat index for every input element.
  const std::size_t n = x.value().size();
  std::vector<std::size_t> target(n);
  std::vector<std::size_t> idx(shape.size(), 0);
  for (std::size_t flat = 0; flat < n; ++flat) {
    std::size_t t = 0;
    for (std::size_t d = 0; d < shape.size(); ++d) {
      if (!reduced[d]) t = t * shape[d] + idx[d];
    }
    target[flat] = t;
    for (std::size_t d = shape.size(); d-- > 0;) {
      if (++idx[d] < shape[d]) break;
      idx[d] = 0;
    }
  }

  const Scalar factor = kind == Reduction::mean ? Scalar(1) / static_cast<Scalar>(count) : Scalar(1);
  Array<Scalar> out = Array<Scalar>::Zero(static_cast<Eigen::Index>(element_count(out_shape)));
  const auto& xv = x.value().values();
  for (std::size_t i = 0; i < n; ++i) out[target[i]] += xv[i];
  out *= factor;

  return x.graph().record(OpKind::reduce, {x.id()}, Tensor<Scalar>(std::move(out_shape), std::move(out)),
                          [target = std::move(target), factor](Graph<Scalar>& gr, const auto& nd,
                                                               const Array<Scalar>& gout) {
                            auto& gx = gr.grad(nd.inputs[0]);
                            for (std::size_t i = 0; i < target.size(); ++i) gx[i] += gout[target[i]] * factor;
                          });
}

template <typename Scalar>
Var<Scalar> sum(Var<Scalar> x) {
  std::vector<std::size_t> axes(x.shape().size());
  std::iota(axes.begin(), axes.end(), std::size_t{0});
  return reduce(x, Reduction::sum, std::move(axes));
}

template <typename Scalar>
Var<Scalar> mean(Var<Scalar> x) {
  std::vector<std::size_t> axes(x.shape().size());
  std::iota(axes.begin(), axes.end(), std::size_t{0});
  return reduce(x, Reduction::mean, std::move(axes));
}

// Inverted dropout: survivors are scaled by 1/(1-p); evaluation mode is the identity.
template <typename Scalar>
Var<Scalar> dropout(Var<Scalar> x, double p, Rng& rng, bool training) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("dropout probability must be in [0,1), got " + std::to_string(p));
  if (!training || p == 0.0) return x;
  std::bernoulli_distribution keep(1.0 - p);
  const Scalar scale_kept = static_cast<Scalar>(1.0 / (1.0 - p));
  Array<Scalar> mask(x.value().values().size());
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask[i] = keep(rng) ? scale_kept : Scalar(0);
  Tensor<Scalar> out(x.shape(), x.value().values() * mask);
  return x.graph().record(OpKind::dropout, {x.id()}, std::move(out),
                          [mask = std::move(mask)](Graph<Scalar>& gr, const auto& n, const Array<Scalar>& gout) {
                            gr.grad(n.inputs[0]) += gout * mask;
                          });
}

// Columns [begin, begin + count) of a matrix.
template <typename Scalar>
Var<Scalar> slice_cols(Var<Scalar> x, std::size_t begin, std::size_t count) {
  detail::require_rank2("slice_cols", x);
  const std::size_t cols = x.shape()[1];
  if (count == 0 || begin + count > cols) {
    throw ShapeError("slice_cols: columns [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") out of range for " + shape_string(x.shape()));
  }
  const auto b = static_cast<Eigen::Index>(begin);
  const auto c = static_cast<Eigen::Index>(count);
  Matrix<Scalar> out = x.value().matrix().middleCols(b, c);
  return x.graph().record(OpKind::slice_cols, {x.id()}, Tensor<Scalar>::from_matrix(out),
                          [b, c](Graph<Scalar>& gr, const auto& n, const Array<Scalar>& gout) {
                            const auto& xv = gr.value(n.inputs[0]);
                            const auto G = Eigen::Map<const Matrix<Scalar>>(gout.data(), xv.rows(), c);
                            detail::as_matrix(gr.grad(n.inputs[0]), xv.rows(), xv.cols()).middleCols(b, c) += G;
                          });
}

template <typename Scalar>
Var<Scalar> square(Var<Scalar> x) { return mul(x, x); }

}  // namespace stackssl
