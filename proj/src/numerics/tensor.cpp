#include "stss/numerics/tensor.hpp"

#include "stss/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace stss::num {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ')';
  return os.str();
}

Buffer& TensorNode::ensure_grad() {
  if (grad.empty()) grad.assign(data.size(), 0.0f);
  return grad;
}

Tensor::Tensor(Shape shape, float fill, bool requires_grad) : node_(std::make_shared<TensorNode>()) {
  node_->data.assign(shape_numel(shape), fill);
  node_->shape = std::move(shape);
  node_->requires_grad = requires_grad;
}

Tensor::Tensor(Shape shape, std::vector<float> data, bool requires_grad) : node_(std::make_shared<TensorNode>()) {
  if (shape_numel(shape) != data.size())
    throw ContractError("tensor: shape " + shape_str(shape) + " does not match " + std::to_string(data.size()) +
                        " values");
  node_->shape = std::move(shape);
  node_->data.assign(data.begin(), data.end());
  node_->requires_grad = requires_grad;
}

Tensor Tensor::scalar(float v, bool requires_grad) { return Tensor(Shape{1}, std::vector<float>{v}, requires_grad); }

std::size_t Tensor::dim(std::size_t i) const {
  if (i >= rank()) throw ContractError("tensor: dim index out of range");
  return node_->shape[i];
}

float Tensor::item() const {
  if (numel() != 1) throw ContractError("tensor: item() on tensor of shape " + shape_str(shape()));
  return node_->data[0];
}

void Tensor::zero_grad() { node_->grad.clear(); }

Tensor Tensor::clone() const {
  auto node = std::make_shared<TensorNode>();
  node->shape = node_->shape;
  node->data = node_->data;
  return Tensor(std::move(node));
}

float Tensor::at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const {
  const auto& s = node_->shape;
  return node_->data[((n * s[1] + c) * s[2] + y) * s[3] + x];
}

float& Tensor::at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) {
  const auto& s = node_->shape;
  return node_->data[((n * s[1] + c) * s[2] + y) * s[3] + x];
}

void Tensor::backward() {
  if (numel() != 1) throw ContractError("backward: root must hold a single value, got " + shape_str(shape()));

  // Iterative post-order DFS gives a topological order of the graph.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> seen;
  std::vector<std::pair<TensorNode*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorNode* p = node->parents[next++].get();
      if (p && p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  node_->ensure_grad()[0] += 1.0f;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
}

Tensor make_op_result(const char* op, Shape shape, Buffer data, std::vector<Tensor> parents,
                      std::function<void(TensorNode&)> backward_fn) {
  require_finite(data, op);
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->op = op;
  bool needs_grad = false;
  for (const auto& p : parents) needs_grad = needs_grad || (p.defined() && p.requires_grad());
  if (needs_grad) {
    node->requires_grad = true;
    // Undefined slots stay as null so backward closures can index parents positionally.
    for (auto& p : parents) node->parents.push_back(p.defined() ? p.node() : nullptr);
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(node));
}

void require_finite(std::span<const float> values, const char* where) {
  for (float v : values)
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite value produced by ") + where);
}

} // namespace stss::num
