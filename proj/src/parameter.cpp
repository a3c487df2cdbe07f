#include "jsi/parameter.hpp"

#include <cmath>
#include <stdexcept>

namespace jsi {

template <typename T>
Var<T> ParameterStore<T>::add(const std::string& name, Tensor<T> value) {
  if (index_.count(name) || buffers_.count(name))
    throw std::invalid_argument("duplicate parameter name: " + name);
  const Shape shape = value.shape();
  Parameter<T> p;
  p.name = name;
  p.var = Var<T>(std::move(value), true);
  p.m = Tensor<T>(shape);
  p.v = Tensor<T>(shape);
  index_[name] = params_.size();
  params_.push_back(std::move(p));
  return params_.back().var;
}

template <typename T>
void ParameterStore<T>::add_buffer(const std::string& name, Tensor<T>* buffer) {
  if (index_.count(name) || buffers_.count(name))
    throw std::invalid_argument("duplicate buffer name: " + name);
  buffers_[name] = buffer;
}

template <typename T>
Parameter<T>* ParameterStore<T>::find(const std::string& name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &params_[it->second];
}

template <typename T>
Parameter<T>& ParameterStore<T>::get(const std::string& name) {
  Parameter<T>* p = find(name);
  if (!p) throw std::out_of_range("unknown parameter: " + name);
  return *p;
}

template <typename T>
void ParameterStore<T>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

template <typename T>
void ParameterStore<T>::set_requires_grad(bool on) {
  for (auto& p : params_) p.var.set_requires_grad(on);
}

template <typename T>
std::size_t ParameterStore<T>::count() const {
  std::size_t total = 0;
  for (const auto& p : params_) total += p.value().size();
  return total;
}

double xavier_bound(int fan_in, int fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

template <typename T>
Tensor<T> xavier_init(Shape shape, Rng& rng) {
  const int receptive = shape.h * shape.w;
  const double bound = xavier_bound(shape.c * receptive, shape.n * receptive);
  return uniform_tensor<T>(shape, rng, -bound, bound);
}

template class ParameterStore<float>;
template class ParameterStore<double>;
template Tensor<float> xavier_init<float>(Shape, Rng&);
template Tensor<double> xavier_init<double>(Shape, Rng&);

}  // namespace jsi
