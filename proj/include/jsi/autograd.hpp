#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "jsi/tensor.hpp"

namespace jsi {

/// Forward behavior of layers with train/inference differences (batch norm).
enum class Mode { train, inference };

/// Process-wide switch for tape recording; see NoGradGuard.
class GradMode {
 public:
  static bool enabled();
  static void set_enabled(bool on);
};

class NoGradGuard {
 public:
  NoGradGuard() : prev_(GradMode::enabled()) { GradMode::set_enabled(false); }
  ~NoGradGuard() { GradMode::set_enabled(prev_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // allocated on first accumulation
  bool requires_grad = false;
  bool is_leaf = true;
  std::uint64_t seq = 0;  // creation order; reverse order is a valid topological order
  std::vector<std::shared_ptr<Node>> parents;
  // Propagates this->grad into the parents' grads.
  std::function<void(Node&)> backward_fn;

  /// Grad buffer, zero-initialized on first use.
  Tensor<T>& grad_buffer();
};

/// Handle to a recorded value. Copies alias the same node.
template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(Tensor<T> value, bool requires_grad = false);
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  const Tensor<T>& value() const { return node_->value; }
  /// Mutable access for leaves (parameter updates, finite differences).
  Tensor<T>& value_mut() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  void set_requires_grad(bool on);
  bool has_grad() const { return !node_->grad.empty(); }
  const Tensor<T>& grad() const { return node_->grad; }
  Tensor<T>& grad_mut() { return node_->grad_buffer(); }
  void zero_grad();
  bool defined() const { return static_cast<bool>(node_); }
  /// Scalar value of a one-element tensor.
  T item() const;

  Node<T>& node() const { return *node_; }
  const std::shared_ptr<Node<T>>& node_ptr() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Result of an operation. When recording is off or no input needs a gradient
/// the returned node is a constant and `backward_fn` is dropped.
template <typename T>
Var<T> make_result(Tensor<T> value, std::vector<Var<T>> inputs,
                   std::function<void(Node<T>&)> backward_fn);

/// Reverse sweep from a scalar. Leaf grads accumulate across calls;
/// interior grads are released after use.
template <typename T>
void backward(const Var<T>& loss);

/// Constant copy that stops gradient flow.
template <typename T>
Var<T> detach(const Var<T>& x);

}  // namespace jsi
