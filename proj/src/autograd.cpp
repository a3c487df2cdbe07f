#include "jsi/autograd.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

namespace jsi {
namespace {

thread_local bool g_grad_enabled = true;
thread_local std::uint64_t g_next_seq = 0;

}  // namespace

bool GradMode::enabled() { return g_grad_enabled; }
void GradMode::set_enabled(bool on) { g_grad_enabled = on; }

template <typename T>
Tensor<T>& Node<T>::grad_buffer() {
  if (grad.empty() && value.size() != 0) grad = Tensor<T>(value.shape());
  if (grad.shape() != value.shape()) grad = Tensor<T>(value.shape());
  return grad;
}

template <typename T>
Var<T>::Var(Tensor<T> value, bool requires_grad)
    : node_(std::make_shared<Node<T>>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
  node_->seq = g_next_seq++;
}

template <typename T>
void Var<T>::set_requires_grad(bool on) {
  if (!node_->is_leaf)
    throw std::logic_error("requires_grad can only be changed on leaves");
  node_->requires_grad = on;
}

template <typename T>
void Var<T>::zero_grad() {
  node_->grad = Tensor<T>(node_->value.shape());
}

template <typename T>
T Var<T>::item() const {
  if (node_->value.size() != 1)
    throw std::invalid_argument("item() on non-scalar " + shape().str());
  return node_->value[0];
}

template <typename T>
Var<T> make_result(Tensor<T> value, std::vector<Var<T>> inputs,
                   std::function<void(Node<T>&)> backward_fn) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->seq = g_next_seq++;
  node->is_leaf = false;
  const bool any = std::any_of(inputs.begin(), inputs.end(),
                               [](const Var<T>& v) { return v.requires_grad(); });
  if (GradMode::enabled() && any) {
    node->requires_grad = true;
    node->parents.reserve(inputs.size());
    for (auto& v : inputs) node->parents.push_back(v.node_ptr());
    node->backward_fn = std::move(backward_fn);
  }
  return Var<T>(std::move(node));
}

template <typename T>
void backward(const Var<T>& loss) {
  if (loss.value().size() != 1)
    throw std::invalid_argument("backward() needs a scalar loss, got " +
                                loss.shape().str());
  if (!loss.requires_grad()) return;

  // Collect the reachable subgraph of nodes that carry gradients.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<Node<T>*> stack{&loss.node()};
  seen.insert(&loss.node());
  while (!stack.empty()) {
    Node<T>* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (auto& p : n->parents) {
      if (p->requires_grad && seen.insert(p.get()).second) stack.push_back(p.get());
    }
  }
  std::sort(order.begin(), order.end(),
            [](const Node<T>* a, const Node<T>* b) { return a->seq > b->seq; });

  loss.node().grad_buffer()[0] += T(1);
  for (Node<T>* n : order) {
    if (n->is_leaf) continue;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
    n->grad = Tensor<T>();
  }
}

template <typename T>
Var<T> detach(const Var<T>& x) {
  return Var<T>(x.value(), false);
}

template struct Node<float>;
template struct Node<double>;
template class Var<float>;
template class Var<double>;
template Var<float> make_result(Tensor<float>, std::vector<Var<float>>,
                                std::function<void(Node<float>&)>);
template Var<double> make_result(Tensor<double>, std::vector<Var<double>>,
                                 std::function<void(Node<double>&)>);
template void backward(const Var<float>&);
template void backward(const Var<double>&);
template Var<float> detach(const Var<float>&);
template Var<double> detach(const Var<double>&);

}  // namespace jsi
