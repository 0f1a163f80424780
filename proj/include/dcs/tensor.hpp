#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dcs/rng.hpp"

namespace dcs {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

// One node of a computation graph: a value buffer and, for op results, the
// backward function that scatters this node's gradient into its parents.
struct TensorNode {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;  // trainable leaf
  bool needs_grad = false;     // lies on a path to a trainable leaf
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void()> backward;

  int64_t numel() const { return static_cast<int64_t>(value.size()); }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

// Value-semantics handle over a shared graph node. Copies alias the node.
class Tensor {
public:
  Tensor() = default;
  Tensor(Shape shape, double fill, bool requires_grad = false);
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double v, bool requires_grad = false);
  static Tensor scalar(double v);
  static Tensor randn(Shape shape, Rng& rng, double stddev = 1.0, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int64_t dim(size_t i) const { return node_->shape[i]; }
  int64_t rank() const { return static_cast<int64_t>(node_->shape.size()); }
  int64_t numel() const { return node_->numel(); }

  double* data() { return node_->value.data(); }
  const double* data() const { return node_->value.data(); }
  std::vector<double>& values() & { return node_->value; }
  const std::vector<double>& values() const& { return node_->value; }
  // Value access on a temporary hands the buffer out so iteration stays
  // valid after the handle dies.
  std::vector<double> values() && { return std::move(node_->value); }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  bool needs_grad() const { return node_->needs_grad; }
  void set_requires_grad(bool on);

  const std::vector<double>& grad() const { return node_->grad; }
  std::vector<double>& grad() { return node_->grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  void zero_grad();

  bool all_finite() const;

  // Deep copy with no graph links. Handles share their node, so mutate a
  // clone, never a copy, when the source must stay intact.
  Tensor clone() const { return Tensor(node_->shape, node_->value, false); }

  std::shared_ptr<TensorNode>& node() { return node_; }
  const std::shared_ptr<TensorNode>& node() const { return node_; }

private:
  std::shared_ptr<TensorNode> node_;
};

// Reverse-mode sweep from a finite scalar loss. Gradients of trainable
// leaves accumulate across calls; interior buffers are reset per call.
void backward(const Tensor& loss);

}  // namespace dcs
