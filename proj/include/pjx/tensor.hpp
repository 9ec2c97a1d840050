#pragma once

// Dense double-precision tensors with reverse-mode differentiation.
//
// A Tensor is a cheap handle onto a graph node. Operations on tensors that
// require gradients record their inputs and a backward closure on the result;
// calling backward() on a scalar loss orders the reachable nodes into a
// ComputationTape and replays it in reverse, accumulating into every leaf that
// requires gradients. Leaf gradients accumulate across backward passes until
// zero_grad() is called.
//
// A graph is confined to a single thread. Tensors that do not require
// gradients are never mutated by operations and can be shared freely.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace pjx {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first written
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  bool is_leaf() const { return parents.empty(); }
  // Gradient buffer, zero-initialised on first use.
  std::vector<double>& grad_buffer();
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->value.size(); }
  // Rank-2 accessors; a rank-1 tensor is treated as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const { return node_->value; }
  // Direct write access for optimizers and parameter loading. Never use on a
  // tensor that is an interior node of a live graph.
  std::span<double> mutable_values() { return node_->value; }
  double item() const;
  double at(std::size_t i) const { return node_->value.at(i); }
  double at(std::size_t r, std::size_t c) const;

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  // Gradient values; all zeros when no backward pass has reached this tensor.
  std::vector<double> grad() const;
  void zero_grad();

  // Same values, detached from any graph.
  Tensor detach() const;

  detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& node_ptr() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  friend Tensor make_result(Shape, std::vector<double>, std::vector<Tensor>,
                            std::function<void(detail::Node&)>);

  std::shared_ptr<detail::Node> node_;
};

// Builds an op result. When gradient recording is enabled and any parent
// requires gradients, the result keeps its parents and backward closure.
Tensor make_result(Shape shape, std::vector<double> values, std::vector<Tensor> parents,
                   std::function<void(detail::Node&)> backward);

// Reverse-topological replay order of all nodes reachable from a root that
// participate in differentiation. Each node appears exactly once.
struct ComputationTape {
  std::vector<detail::Node*> nodes;  // topological order, root last
};

ComputationTape record_tape(const Tensor& root);

// Populates gradients of every requires_grad tensor reachable from `loss`.
// Interior gradients are recomputed from scratch on each call; leaf gradients
// accumulate. Throws ContractError unless `loss` holds exactly one value.
void backward(const Tensor& loss);

bool grad_enabled();

// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace pjx
