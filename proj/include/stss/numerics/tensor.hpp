#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace stss::num {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Heap storage aligned to 64 bytes. Vectorized kernels peel scalar heads
// based on buffer alignment, so unaligned buffers would make the rounding
// depend on where the allocator happened to put them.
template <class T> struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};
  AlignedAllocator() = default;
  template <class U> AlignedAllocator(const AlignedAllocator<U>&) noexcept {}
  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }
  template <class U> bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};
using Buffer = std::vector<float, AlignedAllocator<float>>;

struct TensorNode {
  Shape shape;
  Buffer data;
  Buffer grad; // empty until a gradient flows in
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  // Pushes this node's grad into its parents' grads.
  std::function<void(TensorNode&)> backward_fn;
  const char* op = "leaf";

  Buffer& ensure_grad();
};

// Handle to a dense float array that can take part in reverse-mode
// differentiation. Copies share storage; use clone() for a deep copy.
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f, bool requires_grad = false);
  Tensor(Shape shape, std::vector<float> data, bool requires_grad = false);

  static Tensor scalar(float v, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const;
  std::size_t numel() const { return node_->data.size(); }

  std::span<float> data() { return node_->data; }
  std::span<const float> data() const { return node_->data; }
  float item() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const float> grad() const { return node_->grad; }
  std::span<float> grad_mut() { return node_->ensure_grad(); }
  void zero_grad();

  // Reverse sweep from this (single-element) tensor.
  void backward();

  // Same values, detached from any graph.
  Tensor clone() const;

  const std::shared_ptr<TensorNode>& node() const { return node_; }

  // Index helpers for 4-D (N, C, H, W) tensors.
  float at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const;
  float& at(std::size_t n, std::size_t c, std::size_t y, std::size_t x);

private:
  explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}
  friend Tensor make_op_result(const char*, Shape, Buffer, std::vector<Tensor>,
                               std::function<void(TensorNode&)>);
  std::shared_ptr<TensorNode> node_;
};

// Builds the output of a differentiable op. The backward closure is stored
// only when some parent requires grad.
Tensor make_op_result(const char* op, Shape shape, Buffer data, std::vector<Tensor> parents,
                      std::function<void(TensorNode&)> backward_fn);

void require_finite(std::span<const float> values, const char* where);

} // namespace stss::num
