#include "dcs/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace dcs {

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape shape, double fill, bool requires_grad) {
  node_ = std::make_shared<TensorNode>();
  node_->shape = std::move(shape);
  node_->value.assign(shape_numel(node_->shape), fill);
  node_->requires_grad = requires_grad;
  node_->needs_grad = requires_grad;
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape_numel(shape) != static_cast<int64_t>(data.size()))
    throw std::invalid_argument("tensor: shape " + shape_str(shape) + " does not match " +
                                std::to_string(data.size()) + " values");
  node_ = std::make_shared<TensorNode>();
  node_->shape = std::move(shape);
  node_->value = std::move(data);
  node_->requires_grad = requires_grad;
  node_->needs_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return Tensor(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
  return Tensor(std::move(shape), v, requires_grad);
}

Tensor Tensor::scalar(double v) { return Tensor(Shape{1}, v, false); }

Tensor Tensor::randn(Shape shape, Rng& rng, double stddev, bool requires_grad) {
  Tensor t(std::move(shape), 0.0, requires_grad);
  for (auto& v : t.values()) v = stddev * rng.normal();
  return t;
}

double Tensor::item() const {
  if (numel() != 1) throw std::invalid_argument("item: tensor " + shape_str(shape()) + " is not scalar");
  return node_->value[0];
}

void Tensor::set_requires_grad(bool on) {
  if (node_->backward) throw std::logic_error("requires_grad can only be toggled on leaf tensors");
  node_->requires_grad = on;
  node_->needs_grad = on;
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) node_->grad.assign(node_->value.size(), 0.0);
}

bool Tensor::all_finite() const {
  for (double v : node_->value)
    if (!std::isfinite(v)) return false;
  return true;
}

void backward(const Tensor& loss) {
  if (loss.numel() != 1)
    throw std::invalid_argument("backward: loss must be scalar, got " + shape_str(loss.shape()));
  if (!std::isfinite(loss.item())) throw std::invalid_argument("backward: loss is not finite");

  // Iterative post-order DFS over parents.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> seen;
  std::vector<std::pair<TensorNode*, size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorNode* p = node->parents[next++].get();
      if (p->needs_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Interior grads start at zero every sweep; leaf grads persist so that
  // repeated sweeps accumulate until zero_grad().
  for (TensorNode* n : order) {
    if (n->backward)
      n->grad.assign(n->value.size(), 0.0);
    else
      n->ensure_grad();
  }
  loss.node()->ensure_grad();
  loss.node()->grad[0] += 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backward) (*it)->backward();
}

}  // namespace dcs
