#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "pbpa/errors.hpp"

namespace pbpa {

// Dense row-major float64 tensor. Plain value type; autograd state lives in
// the Graph node that owns a tensor during an episode.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(check_shape(shape_), 0.0);
  }

  Tensor(std::vector<int> shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (check_shape(shape_) != data_.size())
      throw DimensionError("tensor: data length " + std::to_string(data_.size()) +
                           " does not match shape product " + std::to_string(check_shape(shape_)));
  }

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  static Tensor full(std::vector<int> shape, double v) {
    Tensor t(std::move(shape));
    for (auto& x : t.data_) x = v;
    return t;
  }

  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  const std::vector<int>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

 private:
  static std::size_t check_shape(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
      if (d <= 0) throw DimensionError("tensor: non-positive dimension " + std::to_string(d));
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

  std::vector<int> shape_;
  std::vector<double> data_;
};

// Handle to a node inside a Graph.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape. Ops evaluate eagerly on creation and record a backward
// closure; backward() replays the tape once in reverse.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  // Leaves.
  Var leaf(Tensor value, bool requires_grad = true);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  // Core ops.
  Var fc(Var x, Var w, Var b);                       // [B,I]x[I,O]+[O] -> [B,O]
  Var conv2d(Var x, Var k, int stride, int pad);     // [B,C,H,W],[F,C,kh,kw]
  Var relu(Var x);
  Var sigmoid(Var x);
  Var concat(const std::vector<Var>& xs, int axis);
  Var scale_mul(Var x, Var s);                       // s: scalar node
  Var maxpool2x2(Var x);                             // [B,C,H,W] -> [B,C,H/2,W/2]

  // Small utility ops used by losses, heads and tests.
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var sum(Var x);                                    // -> scalar
  Var scale_const(Var x, double c);
  Var reshape(Var x, std::vector<int> shape);
  Var slice_rows(Var x, int row0, int nrows);        // slice along axis 0
  Var pick(Var x, std::size_t flat_index);           // -> scalar

  // Extension point for ops defined in other modules (pooling, MIL, loss).
  // `backward` receives this graph, the output grad and the output id; it is
  // responsible for accumulating into the inputs' grad buffers.
  using BackwardFn = std::function<void(Graph&, const Tensor& grad_out)>;
  Var custom(const std::vector<Var>& inputs, Tensor value, BackwardFn backward);

  void backward(Var loss);
  void reset();  // clears grads and re-arms backward

  const Tensor& value(Var v) const { return node_at(v).value; }
  const Tensor& grad(Var v) const;
  Tensor& grad_buf(Var v);  // allocates; for op backward implementations
  bool requires_grad(Var v) const { return node_at(v).requires_grad; }
  int node_count() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // empty until needed
    bool requires_grad = false;
    BackwardFn backward;
  };

  Node& node_at(Var v) {
    if (!v.valid() || v.id >= static_cast<int>(nodes_.size())) throw ContractError("graph: invalid node handle");
    return nodes_[static_cast<size_t>(v.id)];
  }
  const Node& node_at(Var v) const {
    if (!v.valid() || v.id >= static_cast<int>(nodes_.size())) throw ContractError("graph: invalid node handle");
    return nodes_[static_cast<size_t>(v.id)];
  }
  Var push(Tensor value, bool requires_grad, BackwardFn backward);
  bool any_requires(const std::vector<Var>& vs) const;

  // deque keeps node storage stable: value/grad references taken by op
  // builders stay valid while later ops are pushed
  std::deque<Node> nodes_;
  bool backward_done_ = false;
};

// Max over all input entries of |analytic - central difference| /
// max(1e-8, |analytic| + |numeric|). `op` must map the leaves to a scalar.
double grad_check(const std::function<Var(Graph&, const std::vector<Var>&)>& op,
                  const std::vector<Tensor>& inputs, double eps);

}  // namespace pbpa
