#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include "jsi/autograd.hpp"
#include "jsi/rng.hpp"

namespace jsi {

/// Named learnable tensor with Adam slots.
template <typename T>
struct Parameter {
  std::string name;
  Var<T> var;     // leaf; its grad is the accumulator
  Tensor<T> m;    // first moment
  Tensor<T> v;    // second moment
  std::int64_t step = 0;

  const Tensor<T>& value() const { return var.value(); }
  Tensor<T>& value_mut() { return var.value_mut(); }
  /// Zero-filled gradient of the parameter's shape.
  Tensor<T>& grad() { return var.grad_mut(); }
  void zero_grad() { var.zero_grad(); }
};

/// Owns the parameters of one network plus pointers to its named state
/// buffers (batch-norm statistics, spectral-norm vectors). References handed
/// out stay valid for the lifetime of the store.
template <typename T>
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;

  /// Registers a trainable leaf; names must be unique.
  Var<T> add(const std::string& name, Tensor<T> value);
  /// Registers a non-trainable tensor owned elsewhere (checkpointed only).
  void add_buffer(const std::string& name, Tensor<T>* buffer);

  Parameter<T>& get(const std::string& name);
  Parameter<T>* find(const std::string& name);

  std::deque<Parameter<T>>& params() { return params_; }
  const std::deque<Parameter<T>>& params() const { return params_; }
  const std::map<std::string, Tensor<T>*>& buffers() const { return buffers_; }

  void zero_grad();
  /// Freezing a network keeps its weights out of the recorded graph.
  void set_requires_grad(bool on);
  /// Total number of trainable scalars.
  std::size_t count() const;

 private:
  std::deque<Parameter<T>> params_;
  std::map<std::string, std::size_t> index_;
  std::map<std::string, Tensor<T>*> buffers_;
};

/// Uniform in +-sqrt(6 / (fan_in + fan_out)) with fan_in = c*h*w and
/// fan_out = n*h*w for a weight of shape (n, c, h, w).
template <typename T>
Tensor<T> xavier_init(Shape shape, Rng& rng);

double xavier_bound(int fan_in, int fan_out);

}  // namespace jsi
